"""Stage and terminal costs for the three MPC formulations.

* tracking (mpc1): squared relative tracking error plus a quadratic penalty
  on the bounds-scaled inputs,
* feed conversion (mpc2): feeding rate divided by predicted weight gain,
* economic (mpc3): tracking error priced at the fish selling price plus
  feeding, heating and aeration costs.

Each stage cost object exposes ``evaluate(w, w_next, w_ref, f, T, DO,
w_start)`` which broadcasts over numpy arrays.  ``w`` is the predicted
weight at the start of a sampling period and ``w_next`` at its end.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .bounds import ControlBounds
from .errors import ConfigError, DomainError
from .growth import ControlInput, GrowthParams

__all__ = [
    "TrackingCostParams",
    "FcrCostParams",
    "EconomicCostParams",
    "TerminalCostParams",
    "StageCost",
    "TrackingCost",
    "FcrCost",
    "EconomicCost",
    "stage_cost_tracking",
    "stage_cost_fcr",
    "stage_cost_economic",
    "economic_terms",
    "terminal_cost",
    "make_terminal_cost",
    "CostSettings",
    "make_stage_cost",
    "CONTROLLERS",
]

CONTROLLERS = ("mpc1", "mpc2", "mpc3")


def _check_fields(cls, data):
    unknown = set(data) - {f.name for f in fields(cls)}
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} key(s): {sorted(unknown)}")


@dataclass(frozen=True)
class TrackingCostParams:
    """Input-penalty weight ``lam`` and the unit of the relative tracking error.

    ``error_scale`` multiplies the relative error before squaring: 100 measures
    it in percent, 1 as a plain fraction.
    """

    lam: float = 0.1
    error_scale: float = 100.0

    def __post_init__(self):
        if not self.lam >= 0:
            raise ConfigError("lambda must be >= 0")
        if not self.error_scale > 0:
            raise ConfigError("error_scale must be > 0")


@dataclass(frozen=True)
class FcrCostParams:
    """``delta_w`` floors the weight gain (g); ``gain_mode`` picks the gain basis.

    ``per_step`` uses the predicted gain over the current sampling period,
    ``since_start`` the gain relative to the weight at the start of the run.
    """

    delta_w: float = 1e-3
    gain_mode: str = "per_step"

    def __post_init__(self):
        if not self.delta_w > 0:
            raise ConfigError("delta_w must be > 0")
        if self.gain_mode not in ("per_step", "since_start"):
            raise ConfigError(f"unknown gain_mode {self.gain_mode!r}")


@dataclass(frozen=True)
class EconomicCostParams:
    alpha: float = 100.0
    P_s: float = 1.2        # USD/kg fish
    P_f: float = 0.4        # USD/kg feed
    beta1: float = 0.1
    beta2: float = 0.1
    P_e: float = 0.14       # USD/kWh
    c_p: float = 4.2        # kJ/(kg C)
    L: float = 454.0        # litres
    m_w: float = 1.0        # kg water per litre
    P_max: float = 0.102    # kW air pump
    T_amb: float = 24.0     # C
    DO_ref: float = 8.0     # mg/l at full aeration duty

    def __post_init__(self):
        positive = ("alpha", "P_s", "P_f", "beta1", "beta2", "P_e", "c_p", "L", "m_w",
                    "P_max", "DO_ref")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if not self.T_amb >= 0:
            raise ConfigError("T_amb must be >= 0")

    def heating_kwh(self, delta_T):
        """Energy (kWh) to lift the tank by ``delta_T`` degrees."""
        return self.c_p * self.L * self.m_w * delta_T / 3600.0

    def aeration_duty(self, do):
        return np.clip(np.asarray(do, dtype=float) / self.DO_ref, 0.0, 1.0)


@dataclass(frozen=True)
class TerminalCostParams:
    """Terminal penalty ``N_o * (error_scale * relative error)**2``."""

    N_o: int = 3
    weight_mode: str = "tracking"
    error_scale: float = 1.0

    def __post_init__(self):
        if int(self.N_o) != self.N_o or self.N_o < 0:
            raise ConfigError("N_o must be an integer >= 0")
        if self.weight_mode not in ("off", "tracking"):
            raise ConfigError(f"unknown weight_mode {self.weight_mode!r}")
        if not self.error_scale > 0:
            raise ConfigError("terminal error_scale must be > 0")


def stage_cost_tracking(w_pred, w_ref, u: ControlInput, params: TrackingCostParams,
                        bounds: ControlBounds = ControlBounds()):
    if np.any(np.asarray(w_ref) <= 0):
        raise DomainError("reference weight must be > 0")
    return TrackingCost(params, bounds).evaluate(w_pred, None, w_ref, u.f, u.T, u.DO)


def stage_cost_fcr(u1, delta_w_step, params: FcrCostParams = FcrCostParams()):
    """Feed conversion stage cost ``u1 / max(gain, floor)``."""
    return np.asarray(u1) / np.maximum(delta_w_step, params.delta_w) + 0.0


def economic_terms(w_pred, w_ref, u: ControlInput, params: EconomicCostParams,
                   p: GrowthParams):
    """The four economic cost terms: (tracking, feeding, heating, aeration)."""
    w_kg = np.asarray(w_pred, dtype=float) / 1000.0
    ref_kg = np.asarray(w_ref, dtype=float) / 1000.0
    track = params.alpha * (params.P_s * (w_kg - ref_kg)) ** 2
    feed = (params.P_f * p.R_frac * w_kg * u.f) ** 2
    lift = np.maximum(np.asarray(u.T, dtype=float) - params.T_amb, 0.0)
    heat = params.beta1 * (params.P_e * params.heating_kwh(lift)) ** 2
    air = params.beta2 * (24.0 * params.P_e * params.P_max * params.aeration_duty(u.DO)) ** 2
    return track, feed, heat, air


def stage_cost_economic(w_pred, w_ref, u: ControlInput, params: EconomicCostParams,
                        p: GrowthParams):
    return sum(economic_terms(w_pred, w_ref, u, params, p))


def terminal_cost(w_term, w_ref_term, params: TerminalCostParams):
    if params.weight_mode == "off":
        return np.zeros_like(np.asarray(w_term, dtype=float)) + 0.0
    w_ref_term = np.asarray(w_ref_term, dtype=float)
    if np.any(w_ref_term <= 0):
        raise DomainError("terminal reference weight must be > 0")
    rel = (np.asarray(w_term) - w_ref_term) / w_ref_term
    return params.N_o * (params.error_scale * rel) ** 2


class StageCost:
    """Per-period stage cost; subclasses implement :meth:`evaluate`."""

    name = "stage"

    def evaluate(self, w, w_next, w_ref, f, T, DO, w_start=None):
        raise NotImplementedError


@dataclass(frozen=True)
class TrackingCost(StageCost):
    params: TrackingCostParams = TrackingCostParams()
    bounds: ControlBounds = ControlBounds()
    name = "mpc1"

    def evaluate(self, w, w_next, w_ref, f, T, DO, w_start=None):
        rel = self.params.error_scale * (np.asarray(w) - w_ref) / w_ref
        lo, span = self.bounds.lo, self.bounds.span
        uf = (np.asarray(f) - lo[0]) / span[0]
        uT = (np.asarray(T) - lo[1]) / span[1]
        uD = (np.asarray(DO) - lo[2]) / span[2]
        return rel ** 2 + self.params.lam * (uf ** 2 + uT ** 2 + uD ** 2)


@dataclass(frozen=True)
class FcrCost(StageCost):
    params: FcrCostParams = FcrCostParams()
    name = "mpc2"

    def evaluate(self, w, w_next, w_ref, f, T, DO, w_start=None):
        if self.params.gain_mode == "since_start":
            if w_start is None:
                raise ValueError("since_start gain mode needs the run's initial weight")
            gain = np.asarray(w_next) - w_start
        else:
            gain = np.asarray(w_next) - np.asarray(w)
        return stage_cost_fcr(f, gain, self.params)


@dataclass(frozen=True)
class EconomicCost(StageCost):
    params: EconomicCostParams = EconomicCostParams()
    growth: GrowthParams = GrowthParams()
    name = "mpc3"

    def evaluate(self, w, w_next, w_ref, f, T, DO, w_start=None):
        return stage_cost_economic(w, w_ref, ControlInput(f, T, DO), self.params, self.growth)


@dataclass(frozen=True)
class CostSettings:
    """All cost parameters, as loaded from one config section."""

    tracking: TrackingCostParams = field(default_factory=TrackingCostParams)
    fcr: FcrCostParams = field(default_factory=FcrCostParams)
    economic: EconomicCostParams = field(default_factory=EconomicCostParams)
    terminal: TerminalCostParams = field(default_factory=TerminalCostParams)

    @classmethod
    def from_dict(cls, data: dict) -> "CostSettings":
        data = dict(data)
        tracking = {}
        if "lambda" in data:
            tracking["lam"] = float(data.pop("lambda"))
        if "error_scale" in data:
            tracking["error_scale"] = float(data.pop("error_scale"))
        fcr = {k: data.pop(k) for k in ("delta_w", "gain_mode") if k in data}
        terminal = {k: data.pop(k) for k in ("N_o", "weight_mode") if k in data}
        _check_fields(EconomicCostParams, data)
        if "N_o" in terminal:
            terminal["N_o"] = int(terminal["N_o"])
        return cls(TrackingCostParams(**tracking), FcrCostParams(**fcr),
                   EconomicCostParams(**{k: float(v) for k, v in data.items()}),
                   TerminalCostParams(**terminal))

    def to_dict(self) -> dict:
        out = {"lambda": self.tracking.lam, "error_scale": self.tracking.error_scale}
        out.update({f.name: getattr(self.economic, f.name) for f in fields(self.economic)})
        out.update(delta_w=self.fcr.delta_w, gain_mode=self.fcr.gain_mode,
                   N_o=self.terminal.N_o, weight_mode=self.terminal.weight_mode)
        return out


def make_terminal_cost(controller: str,
                       costs: CostSettings = CostSettings()) -> TerminalCostParams:
    """Terminal cost for a controller; MPC1 measures it on its stage error scale."""
    if controller not in CONTROLLERS:
        raise ConfigError(f"unknown controller {controller!r}; expected one of {CONTROLLERS}")
    if controller == "mpc1":
        return replace(costs.terminal, error_scale=costs.tracking.error_scale)
    return costs.terminal


def make_stage_cost(controller: str, costs: CostSettings = CostSettings(),
                    bounds: ControlBounds = ControlBounds(),
                    p: GrowthParams = GrowthParams()) -> StageCost:
    if controller == "mpc1":
        return TrackingCost(costs.tracking, bounds)
    if controller == "mpc2":
        return FcrCost(costs.fcr)
    if controller == "mpc3":
        return EconomicCost(costs.economic, p)
    raise ConfigError(f"unknown controller {controller!r}; expected one of {CONTROLLERS}")

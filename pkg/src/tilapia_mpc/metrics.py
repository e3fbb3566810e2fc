"""Farm-level performance metrics: FCR, cost ledger, profit, tracking error.

One representative fish is simulated; population quantities (revenue,
feed cost) scale linearly with the number of fish.  Heating and aeration
are tank-level costs and do not scale with the population.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .costs import EconomicCostParams
from .errors import ConfigError, DomainError, MetricError
from .reference import ReferenceTrajectory

__all__ = [
    "FarmConfig",
    "CostLedger",
    "PerformanceReport",
    "compute_fcr",
    "compute_revenue",
    "ledger_from_totals",
    "compute_cost_ledger",
    "profit_and_percentage",
    "tracking_mse",
    "performance_report",
]


@dataclass(frozen=True)
class FarmConfig:
    n_fish: int = 1000
    w0: float = 20.0

    def __post_init__(self):
        if int(self.n_fish) != self.n_fish or self.n_fish < 1:
            raise ConfigError("n_fish must be an integer >= 1")
        if not self.w0 > 0:
            raise ConfigError("w0 must be > 0")


@dataclass(frozen=True)
class CostLedger:
    revenue: float
    feed_cost: float
    heating_cost: float
    oxygenation_cost: float
    total_costs: float
    profit: float
    profit_percentage: float | None


@dataclass(frozen=True)
class PerformanceReport:
    controller: str
    noise_db: float | None
    horizon: int
    tracking_mse: float
    n_fish: int
    final_weight: float
    total_feed: float
    elapsed: float
    ledger: CostLedger
    fcr: float | None

    def as_row(self) -> dict:
        return {
            "controller": self.controller,
            "noise_db": self.noise_db,
            "horizon": self.horizon,
            "mse": self.tracking_mse,
            "n_fish": self.n_fish,
            "final_weight_g": self.final_weight,
            "feed_g": self.total_feed,
            "elapsed_s": self.elapsed,
            "revenue": self.ledger.revenue,
            "feed_cost": self.ledger.feed_cost,
            "heating_cost": self.ledger.heating_cost,
            "oxygenation_cost": self.ledger.oxygenation_cost,
            "profit": self.ledger.profit,
            "profit_pct": self.ledger.profit_percentage,
            "fcr": self.fcr,
        }

    @classmethod
    def from_row(cls, row: dict) -> "PerformanceReport":
        revenue = row["revenue"]
        feed, heat, ox = row["feed_cost"], row["heating_cost"], row["oxygenation_cost"]
        ledger = CostLedger(revenue, feed, heat, ox, feed + heat + ox, row["profit"],
                            row["profit_pct"])
        return cls(row["controller"], row["noise_db"], int(row["horizon"]), row["mse"],
                   int(row["n_fish"]), row["final_weight_g"], row["feed_g"], row["elapsed_s"],
                   ledger, row["fcr"])


def compute_fcr(total_feed_kg: float, final_kg: float, initial_kg: float) -> float:
    """Feed conversion ratio: feed mass over body-mass gain."""
    gain = final_kg - initial_kg
    if not gain > 0:
        raise MetricError("FCR undefined: weight gain is not positive")
    return total_feed_kg / gain


def compute_revenue(n_fish: int, final_w_kg: float, P_s: float) -> float:
    return n_fish * final_w_kg * P_s


def profit_and_percentage(revenue: float, total_costs: float) -> tuple[float, float]:
    """Profit and profit as a percentage of total costs."""
    if not total_costs > 0:
        raise MetricError("profit percentage undefined: total costs are not positive")
    profit = revenue - total_costs
    return profit, 100.0 * profit / total_costs


def ledger_from_totals(final_w_g: float, feed_g_per_fish: float, heating_cost: float,
                       oxygenation_cost: float, farm: FarmConfig,
                       econ: EconomicCostParams) -> CostLedger:
    revenue = compute_revenue(farm.n_fish, final_w_g / 1000.0, econ.P_s)
    feed_cost = econ.P_f * feed_g_per_fish / 1000.0 * farm.n_fish
    total = feed_cost + heating_cost + oxygenation_cost
    profit = revenue - total
    pct = profit_and_percentage(revenue, total)[1] if total > 0 else None
    return CostLedger(revenue, feed_cost, heating_cost, oxygenation_cost, total, profit, pct)


def compute_cost_ledger(run, farm: FarmConfig, econ: EconomicCostParams) -> CostLedger:
    """Accounting for a closed-loop run, from the applied per-period controls."""
    states = run.states
    eps = states[1].t - states[0].t if len(states) > 1 else 0.0
    heating = 0.0
    aeration = 0.0
    for u in run.applied_controls:
        heating += econ.P_e * econ.heating_kwh(max(u.T - econ.T_amb, 0.0)) * eps
        aeration += 24.0 * econ.P_e * econ.P_max * float(econ.aeration_duty(u.DO)) * eps
    return ledger_from_totals(states[-1].w, run.total_feed, heating, aeration, farm, econ)


def tracking_mse(states, ref: ReferenceTrajectory, mode: str = "relative") -> float:
    """Mean squared tracking error over the sampling instants.

    ``relative``: mean of 100 * ((w - w_d) / w_d)**2.  ``absolute``: mean of
    (w - w_d)**2 in g^2.
    """
    if len(states) < 1:
        raise ValueError("need at least one state")
    t = np.array([s.t for s in states])
    w = np.array([s.w for s in states])
    wd = np.asarray(ref(t), dtype=float)
    if mode == "relative":
        if np.any(wd <= 0):
            raise DomainError("reference weight must be > 0 in relative mode")
        return float(np.mean(100.0 * ((w - wd) / wd) ** 2))
    if mode == "absolute":
        return float(np.mean((w - wd) ** 2))
    raise ValueError(f"unknown tracking error mode {mode!r}")


def performance_report(run, farm: FarmConfig, econ: EconomicCostParams, horizon: int,
                       noise_db: float | None = None, mse_mode: str = "relative",
                       elapsed: float | None = None) -> PerformanceReport:
    ledger = compute_cost_ledger(run, farm, econ)
    w_final = run.states[-1].w
    try:
        fcr = compute_fcr(run.total_feed / 1000.0, w_final / 1000.0, run.states[0].w / 1000.0)
    except MetricError:
        fcr = None
    el = run.wall_time if elapsed is None else elapsed
    return PerformanceReport(
        controller=run.controller,
        noise_db=noise_db,
        horizon=horizon,
        tracking_mse=tracking_mse(run.states, run.reference, mse_mode),
        n_fish=farm.n_fish,
        final_weight=w_final,
        total_feed=run.total_feed,
        elapsed=el if math.isfinite(el) else 0.0,
        ledger=ledger,
        fcr=fcr,
    )

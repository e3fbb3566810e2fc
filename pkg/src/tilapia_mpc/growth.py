"""Bioenergetic growth model for Nile tilapia.

Weight grows as the difference between an anabolic term and a fasting
catabolic term::

    dw/dt = Psi(f, T, DO) * v(UIA) * w**m - k(T) * w**n
    Psi   = h * rho * f * b * (1 - a) * tau(T) * sigma(DO)
    k(T)  = k_min * exp(j * (T - T_min))

with piecewise environmental factors tau (temperature), v (un-ionized
ammonia) and sigma (dissolved oxygen), each in [0, 1].

All factor functions accept scalars or numpy arrays.  Integration uses
classical fixed-step RK4 with the controls held constant over each
sampling period (or over each substep, when actuator noise is injected).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, asdict
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError, IntegrationError

__all__ = [
    "GrowthParams",
    "ControlInput",
    "FishState",
    "SimConfig",
    "temperature_factor",
    "ammonia_factor",
    "oxygen_factor",
    "anabolism_coefficient",
    "catabolism_coefficient",
    "growth_rate",
    "step",
    "simulate",
    "daily_feed_mass",
    "rollout",
    "integrate_substeps",
]


@dataclass(frozen=True)
class GrowthParams:
    """Biological and environmental constants of the growth model.

    Defaults are the Nile tilapia values.  ``DO_min`` and ``DO_crit`` are
    ordered so that the oxygen ramp is well defined (0.3 < 1.0 mg/l).
    """

    m_exp: float = 0.67
    n_exp: float = 0.81
    b_assim: float = 0.62
    a_frac: float = 0.53
    h_coef: float = 0.8
    k_min: float = 0.00133
    j_coef: float = 0.0132
    kappa: float = 4.6
    rho: float = 1.0
    T_opt: float = 33.0
    T_min: float = 24.0
    T_max: float = 40.0
    UIA_crit: float = 0.06
    UIA_max: float = 1.4
    DO_min: float = 0.3
    DO_crit: float = 1.0
    R_frac: float = 0.1

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{f.name} must be a finite number, got {v!r}")
        checks = [
            (self.T_min < self.T_opt < self.T_max, "T_min < T_opt < T_max"),
            (self.UIA_crit < self.UIA_max, "UIA_crit < UIA_max"),
            (self.DO_min < self.DO_crit, "DO_min < DO_crit"),
            (0 < self.m_exp < 1, "0 < m_exp < 1"),
            (0 < self.n_exp < 1, "0 < n_exp < 1"),
            (0 < self.b_assim < 1, "0 < b_assim < 1"),
            (0 < self.a_frac < 1, "0 < a_frac < 1"),
            (self.h_coef > 0, "h_coef > 0"),
            (self.k_min > 0, "k_min > 0"),
            (self.j_coef > 0, "j_coef > 0"),
            (self.kappa > 0, "kappa > 0"),
            (0 < self.rho < 2, "0 < rho < 2"),
            (0 < self.R_frac <= 1, "0 < R_frac <= 1"),
        ]
        for ok, rule in checks:
            if not ok:
                raise ConfigError(f"invalid growth parameters: {rule} violated")

    @classmethod
    def from_dict(cls, data: dict) -> "GrowthParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown growth parameter(s): {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    @classmethod
    def from_json(cls, path) -> "GrowthParams":
        with open(Path(path)) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ControlInput:
    """Manipulated inputs: relative feeding rate, temperature (C), DO (mg/l)."""

    f: float
    T: float
    DO: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.f, self.T, self.DO)


@dataclass(frozen=True)
class FishState:
    t: float
    w: float


@dataclass(frozen=True)
class SimConfig:
    """Sampling period (days), RK4 substeps per period and ambient UIA (mg/l)."""

    epsilon: float = 1.0
    substeps: int = 24
    uia: float = 0.05

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be > 0")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ConfigError("substeps must be an integer >= 1")
        if not self.uia >= 0:
            raise ConfigError("uia must be >= 0")


def _out(x):
    """Return a Python float for 0-d results, arrays otherwise."""
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def _require_finite(name, x):
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} must be finite")


def _require_nonneg(name, x):
    _require_finite(name, x)
    if np.any(x < 0):
        raise DomainError(f"{name} must be >= 0")


# Unchecked kernels, shared by the public functions and the integrator.

def _tau(T, p: GrowthParams):
    above = ((T - p.T_opt) / (p.T_max - p.T_opt)) ** 4
    below = ((p.T_opt - T) / (p.T_opt - p.T_min)) ** 4
    return np.exp(-p.kappa * np.where(T > p.T_opt, above, below))


def _nu(uia, p: GrowthParams):
    ramp = (p.UIA_max - uia) / (p.UIA_max - p.UIA_crit)
    return np.where(uia < p.UIA_crit, 1.0, np.clip(ramp, 0.0, 1.0))


def _sigma(do, p: GrowthParams):
    ramp = (do - p.DO_min) / (p.DO_crit - p.DO_min)
    return np.where(do > p.DO_crit, 1.0, np.clip(ramp, 0.0, 1.0))


def _psi(f, T, do, p: GrowthParams):
    return p.h_coef * p.rho * f * p.b_assim * (1.0 - p.a_frac) * _tau(T, p) * _sigma(do, p)


def _kappa_T(T, p: GrowthParams):
    return p.k_min * np.exp(p.j_coef * (T - p.T_min))


def temperature_factor(T, p: GrowthParams):
    """Temperature factor tau(T) in (0, 1], peaking at exactly 1 at ``T_opt``."""
    T = np.asarray(T, dtype=float)
    _require_finite("temperature", T)
    return _out(_tau(T, p))


def ammonia_factor(uia, p: GrowthParams):
    """Un-ionized ammonia factor: 1 below UIA_crit, linear ramp to 0 at UIA_max."""
    uia = np.asarray(uia, dtype=float)
    _require_nonneg("UIA", uia)
    return _out(_nu(uia, p))


def oxygen_factor(do, p: GrowthParams):
    """Dissolved oxygen factor: 0 up to DO_min, linear ramp, 1 above DO_crit."""
    do = np.asarray(do, dtype=float)
    _require_nonneg("DO", do)
    return _out(_sigma(do, p))


def anabolism_coefficient(u: ControlInput, p: GrowthParams) -> float:
    temperature_factor(u.T, p)
    oxygen_factor(u.DO, p)
    _require_finite("feeding rate", np.asarray(u.f, dtype=float))
    return _out(_psi(np.asarray(u.f, dtype=float), np.asarray(u.T, dtype=float),
                     np.asarray(u.DO, dtype=float), p))


def catabolism_coefficient(T, p: GrowthParams):
    T = np.asarray(T, dtype=float)
    _require_finite("temperature", T)
    return _out(_kappa_T(T, p))


def growth_rate(s: FishState, u: ControlInput, uia: float, p: GrowthParams) -> float:
    """Instantaneous growth rate dw/dt in g/day."""
    if not s.w >= 0:
        raise DomainError("weight must be >= 0")
    psi = anabolism_coefficient(u, p)
    nu = ammonia_factor(uia, p)
    k = catabolism_coefficient(u.T, p)
    return psi * nu * s.w ** p.m_exp - k * s.w ** p.n_exp


def daily_feed_mass(f, w, p: GrowthParams):
    """Daily ration r = f * R in g/day, with the maximal ration R = R_frac * w."""
    return f * p.R_frac * w


def _rk4(w0, A, K, dt, p: GrowthParams, record_every: int):
    """Integrate dw/dt = A w^m - K w^n with per-substep coefficients.

    ``w0`` has shape (B,), ``A`` and ``K`` shape (B, S).  Returns the weights
    at every ``record_every``-th substep boundary, shape (B, S // record_every + 1).
    """
    m, n = p.m_exp, p.n_exp
    w = np.array(w0, dtype=float)
    n_sub = A.shape[1]
    out = np.empty((w.shape[0], n_sub // record_every + 1))
    out[:, 0] = w
    half = 0.5 * dt
    for s in range(n_sub):
        a = A[:, s]
        k = K[:, s]

        def rhs(x):
            x = np.maximum(x, 0.0)
            return a * x ** m - k * x ** n

        k1 = rhs(w)
        k2 = rhs(w + half * k1)
        k3 = rhs(w + half * k2)
        k4 = rhs(w + dt * k3)
        w = np.maximum(w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0)
        if (s + 1) % record_every == 0:
            out[:, (s + 1) // record_every] = w
    return out


def _coefficients(f, T, do, uia, p: GrowthParams):
    A = _psi(f, T, do, p) * _nu(np.asarray(uia, dtype=float), p)
    K = _kappa_T(T, p)
    return A, K


def rollout(w0: float, U, cfg: SimConfig, p: GrowthParams, check: bool = True):
    """Open-loop rollout of a batch of piecewise-constant control plans.

    ``U`` has shape (B, N, 3) with channels (f, T, DO).  Returns sampled
    weights of shape (B, N + 1); column 0 equals ``w0``.  With
    ``check=False`` non-finite results are returned instead of raising.
    """
    U = np.asarray(U, dtype=float)
    if U.ndim != 3 or U.shape[2] != 3:
        raise ValueError("U must have shape (B, N, 3)")
    S = cfg.substeps
    A, K = _coefficients(U[:, :, 0], U[:, :, 1], U[:, :, 2], cfg.uia, p)
    A = np.repeat(A, S, axis=1)
    K = np.repeat(K, S, axis=1)
    w_init = np.full(U.shape[0], float(w0))
    W = _rk4(w_init, A, K, cfg.epsilon / S, p, S)
    if check and not np.all(np.isfinite(W)):
        raise IntegrationError("non-finite weight during integration")
    return W


def integrate_substeps(w: float, f, T, do, cfg: SimConfig, p: GrowthParams) -> float:
    """Advance one sampling period with controls given per substep.

    ``f``, ``T`` and ``do`` are arrays of length ``cfg.substeps``; used by the
    closed loop when actuator noise changes the applied input every substep.
    """
    f = np.asarray(f, dtype=float)[None, :]
    T = np.asarray(T, dtype=float)[None, :]
    do = np.asarray(do, dtype=float)[None, :]
    if f.shape[1] != cfg.substeps or T.shape[1] != cfg.substeps or do.shape[1] != cfg.substeps:
        raise ValueError("per-substep controls must have length cfg.substeps")
    A, K = _coefficients(f, T, do, cfg.uia, p)
    W = _rk4(np.array([float(w)]), A, K, cfg.epsilon / cfg.substeps, p, cfg.substeps)
    w_next = float(W[0, -1])
    if not math.isfinite(w_next):
        raise IntegrationError("non-finite weight during integration")
    return w_next


def _validate_control(u: ControlInput, p: GrowthParams):
    temperature_factor(u.T, p)
    oxygen_factor(u.DO, p)
    if not math.isfinite(u.f):
        raise DomainError("feeding rate must be finite")


def step(s: FishState, u: ControlInput, cfg: SimConfig, p: GrowthParams) -> FishState:
    """Advance the state by one sampling period under a constant input."""
    if not s.w >= 0:
        raise DomainError("weight must be >= 0")
    _validate_control(u, p)
    W = rollout(s.w, np.array([[u.as_tuple()]]), cfg, p)
    return FishState(s.t + cfg.epsilon, float(W[0, -1]))


def simulate(w0: float, schedule: Sequence[ControlInput], cfg: SimConfig,
             p: GrowthParams) -> list[FishState]:
    """Simulate from ``w0`` under a piecewise-constant schedule.

    Returns ``len(schedule) + 1`` states starting at ``(0, w0)``.
    """
    if len(schedule) == 0:
        raise ValueError("schedule must not be empty")
    if not w0 > 0:
        raise DomainError("initial weight must be > 0")
    for u in schedule:
        _validate_control(u, p)
    U = np.array([[u.as_tuple() for u in schedule]])
    W = rollout(w0, U, cfg, p)[0]
    return [FishState(k * cfg.epsilon, float(w)) for k, w in enumerate(W)]

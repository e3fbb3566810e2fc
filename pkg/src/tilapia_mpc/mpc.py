"""Receding-horizon control by direct single shooting.

At every sampling instant t_k the controller predicts the weight over N
periods from the measured weight, minimizes

    sum_k  stage(w_k, w_{k+1}, w_d(t_k), u_k) * epsilon  +  terminal(w_N, w_d(t_N))

over the piecewise-constant plan inside the input box, applies the first
action to the plant and shifts the plan as the next warm start.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bounds import ControlBounds, ControlPlan
from .costs import StageCost, TerminalCostParams, terminal_cost
from .errors import ConfigError, DomainError, IntegrationError, SolverError
from .growth import (ControlInput, FishState, GrowthParams, SimConfig, daily_feed_mass,
                     integrate_substeps, rollout)
from .optimize import minimize_box
from .reference import ReferenceTrajectory

__all__ = [
    "HorizonConfig",
    "NoiseConfig",
    "SolverOptions",
    "OcpResult",
    "Controller",
    "ClosedLoopResult",
    "predict",
    "horizon_cost",
    "solve_ocp",
    "shift_warm_start",
    "run_closed_loop",
]


@dataclass(frozen=True)
class HorizonConfig:
    N: int = 3
    N_o: int = 3
    epsilon: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError("N must be an integer >= 1")
        if int(self.N_o) != self.N_o or self.N_o < 0:
            raise ConfigError("N_o must be an integer >= 0")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be > 0")


@dataclass(frozen=True)
class NoiseConfig:
    """Gaussian actuator noise on the feeding and temperature channels."""

    snr_db: float = 50.0
    seed: int = 0
    enabled: bool = False

    def __post_init__(self):
        if self.enabled and not self.snr_db > 0:
            raise ConfigError("snr_db must be > 0 when noise is enabled")

    @property
    def amplitude_ratio(self) -> float:
        return 10.0 ** (-self.snr_db / 20.0)


@dataclass(frozen=True)
class SolverOptions:
    fd_step: float = 1e-6
    rtol: float = 1e-8
    gtol: float = 1e-6
    max_iter: int = 500


@dataclass(frozen=True)
class OcpResult:
    plan: ControlPlan
    cost: float
    iterations: int
    converged: bool
    warm_cost: float = math.nan
    solve_time: float = 0.0


@dataclass(frozen=True)
class Controller:
    """A stage cost paired with a terminal cost."""

    name: str
    stage: StageCost
    terminal: TerminalCostParams = TerminalCostParams()


@dataclass
class ClosedLoopResult:
    controller: str
    states: list
    applied_controls: list
    commanded_controls: list
    per_step_feed: np.ndarray
    solver_stats: list
    wall_time: float
    reference: ReferenceTrajectory
    noise_enabled: bool = False
    # per step and substep: injected (pre-clamp) noise and the std used, channels (f, T)
    noise_samples: np.ndarray = field(default_factory=lambda: np.zeros((0, 0, 2)))
    noise_std: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def weights(self) -> np.ndarray:
        return np.array([s.w for s in self.states])

    @property
    def total_feed(self) -> float:
        """Feed per fish over the run, in g."""
        eps = self.states[1].t - self.states[0].t if len(self.states) > 1 else 0.0
        return float(np.sum(self.per_step_feed) * eps)


def predict(w_k: float, plan: ControlPlan, cfg: SimConfig, p: GrowthParams,
            t_k: float = 0.0) -> list[FishState]:
    """Noise-free open-loop prediction over the plan, starting at (t_k, w_k)."""
    W = rollout(w_k, plan.to_array()[None, :, :], cfg, p)[0]
    return [FishState(t_k + i * cfg.epsilon, float(w)) for i, w in enumerate(W)]


class _Horizon:
    """Batched cost of scaled plans for one OCP instance."""

    def __init__(self, w_k, t_k, ref, controller, bounds, cfg, p, w_start):
        self.w_k = w_k
        self.controller = controller
        self.bounds = bounds
        self.cfg = cfg
        self.p = p
        self.w_start = w_start
        self.N = None
        self.t_k = t_k
        self.ref = ref

    def set_horizon(self, N):
        self.N = N
        t = self.t_k + self.cfg.epsilon * np.arange(N + 1)
        self.w_ref = np.asarray(self.ref(t), dtype=float)
        if np.any(self.w_ref <= 0):
            raise DomainError("reference weight must be > 0 over the horizon")

    def cost_raw(self, U, check=False):
        W = rollout(self.w_k, U, self.cfg, self.p, check=check)
        return _plan_cost(W, U, self.w_ref, self.controller, self.cfg.epsilon, self.w_start)

    def __call__(self, X):
        X = np.asarray(X, dtype=float).reshape(-1, self.N, 3)
        return self.cost_raw(self.bounds.unscale(X))


def _plan_cost(W, U, w_ref, controller: Controller, eps, w_start):
    stage = controller.stage.evaluate(W[:, :-1], W[:, 1:], w_ref[None, :-1],
                                      U[:, :, 0], U[:, :, 1], U[:, :, 2], w_start)
    total = np.sum(stage, axis=1) * eps
    total = total + terminal_cost(W[:, -1], w_ref[-1], controller.terminal)
    return total


def horizon_cost(predicted, ref: ReferenceTrajectory, plan: ControlPlan, stage: StageCost,
                 term: TerminalCostParams, epsilon: float = 1.0, w_start=None) -> float:
    """Rectangle-rule horizon objective for one predicted trajectory."""
    if len(predicted) != len(plan) + 1:
        raise ValueError("predicted trajectory must have N + 1 states")
    W = np.array([[s.w for s in predicted]])
    w_ref = np.asarray(ref(np.array([s.t for s in predicted])), dtype=float)
    if np.any(w_ref <= 0):
        raise DomainError("reference weight must be > 0")
    c = float(_plan_cost(W, plan.to_array()[None], w_ref, Controller("", stage, term),
                         epsilon, w_start)[0])
    if not math.isfinite(c):
        raise SolverError("non-finite horizon cost")
    return c


def solve_ocp(w_k: float, ref: ReferenceTrajectory, stage: StageCost, term: TerminalCostParams,
              bounds: ControlBounds, warm: ControlPlan, cfg: SimConfig, p: GrowthParams,
              t_k: float = 0.0, w_start=None, options: SolverOptions = SolverOptions()) -> OcpResult:
    """Solve the finite-horizon problem from the measured weight ``w_k``.

    The horizon length is the warm-start plan length.  The returned plan lies
    in the bounds and costs no more than the warm start.
    """
    if not warm.within(bounds, tol=1e-9):
        raise SolverError("warm-start plan violates the control bounds")
    N = len(warm)
    prob = _Horizon(w_k, t_k, ref, Controller("", stage, term), bounds, cfg, p,
                    w_k if w_start is None else w_start)
    prob.set_horizon(N)
    x0 = np.clip(bounds.scale(warm.to_array()), 0.0, 1.0).ravel()
    started = time.perf_counter()
    res = minimize_box(prob, x0, fd_step=options.fd_step, rtol=options.rtol,
                       gtol=options.gtol, max_iter=options.max_iter)
    elapsed = time.perf_counter() - started
    if not math.isfinite(res.fun0):
        raise SolverError("non-finite cost at the warm start")
    U = bounds.clip(bounds.unscale(res.x.reshape(N, 3)))
    # evaluate the returned (clipped) plan exactly; fall back to the warm start otherwise
    cost = float(prob.cost_raw(U[None])[0])
    if not cost <= res.fun0:
        U, cost = warm.to_array(), res.fun0
    return OcpResult(ControlPlan.from_array(U), cost, res.nit, res.converged, res.fun0, elapsed)


def shift_warm_start(prev: ControlPlan) -> ControlPlan:
    """Drop the first action and repeat the last one."""
    return ControlPlan(prev.actions[1:] + prev.actions[-1:])


def run_closed_loop(w0: float, duration: float, controller: Controller, bounds: ControlBounds,
                    noise: NoiseConfig, ref: ReferenceTrajectory, cfg: SimConfig,
                    p: GrowthParams, horizon: HorizonConfig = HorizonConfig(),
                    options: SolverOptions = SolverOptions()) -> ClosedLoopResult:
    """Receding-horizon simulation over ``duration`` days.

    With noise enabled, each substep of the applied feeding rate and
    temperature gets zero-mean Gaussian noise with standard deviation equal
    to the RMS of the commanded signal so far times 10^(-snr_db/20), then is
    clipped to the bounds.  Prediction is always noise-free.
    """
    if not math.isclose(horizon.epsilon, cfg.epsilon):
        raise ConfigError("horizon epsilon and simulation epsilon differ")
    if not w0 > 0:
        raise DomainError("initial weight must be > 0")
    n_steps = int(round(duration / cfg.epsilon))
    if n_steps < 0 or not math.isclose(n_steps * cfg.epsilon, duration, abs_tol=1e-12):
        raise ConfigError("duration must be a whole multiple of epsilon")

    S = cfg.substeps
    rng = np.random.default_rng(noise.seed)
    ratio = noise.amplitude_ratio
    lo, hi = bounds.lo, bounds.hi

    states = [FishState(0.0, float(w0))]
    commanded, applied, feed, stats = [], [], [], []
    noise_samples = np.zeros((n_steps, S if noise.enabled else 0, 2))
    noise_std = np.zeros((n_steps, 2))
    sumsq = np.zeros(2)
    warm = ControlPlan.constant(bounds.mid(), horizon.N)
    wall = 0.0

    for k in range(n_steps):
        s = states[-1]
        try:
            res = solve_ocp(s.w, ref, controller.stage, controller.terminal, bounds, warm,
                            cfg, p, t_k=s.t, w_start=w0, options=options)
        except (SolverError, DomainError) as exc:
            raise SolverError(str(exc), step=k) from exc
        wall += res.solve_time
        stats.append(res)
        u = res.plan[0]
        commanded.append(u)

        if noise.enabled:
            sumsq += np.array([u.f, u.T]) ** 2
            std = np.sqrt(sumsq / (k + 1)) * ratio
            eta = rng.standard_normal((S, 2)) * std
            noise_samples[k] = eta
            noise_std[k] = std
            f_sub = np.clip(u.f + eta[:, 0], lo[0], hi[0])
            T_sub = np.clip(u.T + eta[:, 1], lo[1], hi[1])
            do_sub = np.full(S, u.DO)
            try:
                w_next = integrate_substeps(s.w, f_sub, T_sub, do_sub, cfg, p)
            except IntegrationError as exc:
                raise IntegrationError(f"step {k}: {exc}") from exc
            u_applied = ControlInput(float(np.mean(f_sub)), float(np.mean(T_sub)), u.DO)
        else:
            W = rollout(s.w, np.array([[u.as_tuple()]]), cfg, p, check=False)
            w_next = float(W[0, -1])
            u_applied = u
        if not math.isfinite(w_next):
            raise IntegrationError(f"step {k}: non-finite weight")

        applied.append(u_applied)
        feed.append(daily_feed_mass(u_applied.f, s.w, p))
        states.append(FishState((k + 1) * cfg.epsilon, w_next))
        warm = shift_warm_start(res.plan)

    return ClosedLoopResult(
        controller=controller.name,
        states=states,
        applied_controls=applied,
        commanded_controls=commanded,
        per_step_feed=np.array(feed, dtype=float),
        solver_stats=stats,
        wall_time=wall,
        reference=ref,
        noise_enabled=noise.enabled,
        noise_samples=noise_samples,
        noise_std=noise_std,
    )

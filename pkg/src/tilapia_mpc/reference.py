"""Desired live-weight trajectory w_d(t)."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .growth import ControlInput, GrowthParams, SimConfig, simulate

__all__ = [
    "ReferenceTrajectory",
    "NOMINAL_INPUT",
    "generate_nominal_reference",
    "load_reference",
    "save_reference",
    "sample_reference",
]

NOMINAL_INPUT = ControlInput(f=0.8, T=33.0, DO=2.0)


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Piecewise-linear reference built from (t_days, w_d_g) samples."""

    t: tuple
    w: tuple

    def __post_init__(self):
        if len(self.t) != len(self.w):
            raise ConfigError("reference time and weight columns differ in length")
        if len(self.t) < 2:
            raise ConfigError("reference needs at least 2 samples")
        t = np.asarray(self.t, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(w))):
            raise ConfigError("reference samples must be finite")
        if np.any(np.diff(t) <= 0):
            raise ConfigError("reference times must be strictly increasing")
        if np.any(w <= 0):
            raise ConfigError("reference weights must be > 0")
        object.__setattr__(self, "_t", t)
        object.__setattr__(self, "_w", w)

    @classmethod
    def from_samples(cls, samples) -> "ReferenceTrajectory":
        samples = list(samples)
        return cls(tuple(float(t) for t, _ in samples), tuple(float(w) for _, w in samples))

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.t, self.w))

    def __call__(self, t):
        """Vectorized :func:`sample_reference`."""
        out = np.interp(np.asarray(t, dtype=float), self._t, self._w)
        return float(out) if np.ndim(out) == 0 else out


def sample_reference(r: ReferenceTrajectory, t: float) -> float:
    """Linear interpolation, held constant outside the sampled range."""
    return r(t)


def generate_nominal_reference(w0: float, duration: float,
                               u_nominal: ControlInput = NOMINAL_INPUT,
                               cfg: SimConfig = SimConfig(),
                               p: GrowthParams = GrowthParams()) -> ReferenceTrajectory:
    """Reference curve from a model rollout under constant nominal inputs.

    Sampled once per sampling period; identical to :func:`simulate` output.
    """
    if duration < 1:
        raise ConfigError("reference duration must be >= 1 day")
    if not u_nominal.f > 0:
        raise ConfigError("nominal feeding rate must be > 0 for a growing reference")
    n = int(round(duration / cfg.epsilon))
    if not math.isclose(n * cfg.epsilon, duration):
        raise ConfigError("duration must be a whole multiple of epsilon")
    states = simulate(w0, [u_nominal] * n, cfg, p)
    ref = ReferenceTrajectory(tuple(s.t for s in states), tuple(s.w for s in states))
    if np.any(np.diff(ref._w) <= 0):
        raise ConfigError("nominal inputs do not produce a growing reference")
    return ref


def load_reference(path) -> ReferenceTrajectory:
    """Read a two-column CSV ``t_days,w_d_g``; a header row is optional."""
    ts, ws = [], []
    with open(Path(path), newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ConfigError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                t, w = float(row[0]), float(row[1])
            except ValueError:
                if lineno == 1 and not ts:
                    continue  # header
                raise ConfigError(f"{path}:{lineno}: non-numeric value in {row!r}") from None
            ts.append(t)
            ws.append(w)
    if len(ts) >= 2 and any(b <= a for a, b in zip(ts, ts[1:])):
        bad = next(i for i, (a, b) in enumerate(zip(ts, ts[1:])) if b <= a)
        raise ConfigError(f"{path}: time not strictly increasing at sample {bad + 2}")
    return ReferenceTrajectory(tuple(ts), tuple(ws))


def save_reference(r: ReferenceTrajectory, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_days", "w_d_g"])
        for t, w in r.samples:
            writer.writerow([repr(t), repr(w)])

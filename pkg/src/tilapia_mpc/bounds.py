"""Admissible input box and piecewise-constant control plans."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .growth import ControlInput

__all__ = ["ControlBounds", "ControlPlan"]


@dataclass(frozen=True)
class ControlBounds:
    """Componentwise box on (f, T, DO).

    The DO upper bound stands in for freshwater saturation.
    """

    lower: ControlInput = ControlInput(0.0, 24.0, 0.3)
    upper: ControlInput = ControlInput(1.0, 40.0, 8.0)

    def __post_init__(self):
        lo, hi = self.lo, self.hi
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ConfigError("control bounds must be finite")
        if np.any(lo > hi):
            raise ConfigError("control bounds: lower must be <= upper componentwise")

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.lower.as_tuple(), dtype=float)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.upper.as_tuple(), dtype=float)

    @property
    def span(self) -> np.ndarray:
        # degenerate channels get unit span so scaling stays finite
        s = self.hi - self.lo
        return np.where(s > 0, s, 1.0)

    def mid(self) -> ControlInput:
        return ControlInput(*((self.lo + self.hi) / 2).tolist())

    def scale(self, U):
        """Map raw inputs (..., 3) to [0, 1] per channel."""
        return (np.asarray(U, dtype=float) - self.lo) / self.span

    def unscale(self, X):
        return self.lo + np.asarray(X, dtype=float) * self.span

    def clip(self, U):
        return np.clip(np.asarray(U, dtype=float), self.lo, self.hi)

    def contains(self, u: ControlInput, tol: float = 0.0) -> bool:
        x = np.array(u.as_tuple())
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    @classmethod
    def from_dict(cls, data: dict) -> "ControlBounds":
        unknown = set(data) - {"lower", "upper"}
        if unknown:
            raise ConfigError(f"unknown bounds key(s): {sorted(unknown)}")
        base = cls()
        lo = data.get("lower", base.lower.as_tuple())
        hi = data.get("upper", base.upper.as_tuple())
        if isinstance(lo, dict):
            lo = (lo["f"], lo["T"], lo["DO"])
        if isinstance(hi, dict):
            hi = (hi["f"], hi["T"], hi["DO"])
        return cls(ControlInput(*map(float, lo)), ControlInput(*map(float, hi)))

    def to_dict(self) -> dict:
        return {"lower": list(self.lower.as_tuple()), "upper": list(self.upper.as_tuple())}


@dataclass(frozen=True)
class ControlPlan:
    """One control input per sampling period over the horizon."""

    actions: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.actions) < 1:
            raise ConfigError("a control plan needs at least one action")

    def __len__(self):
        return len(self.actions)

    def __getitem__(self, i):
        return self.actions[i]

    def to_array(self) -> np.ndarray:
        return np.array([u.as_tuple() for u in self.actions], dtype=float)

    @classmethod
    def from_array(cls, U) -> "ControlPlan":
        U = np.asarray(U, dtype=float).reshape(-1, 3)
        return cls(tuple(ControlInput(*map(float, row)) for row in U))

    @classmethod
    def constant(cls, u: ControlInput, N: int) -> "ControlPlan":
        return cls((u,) * N)

    def within(self, bounds: ControlBounds, tol: float = 1e-12) -> bool:
        return all(bounds.contains(u, tol) for u in self.actions)

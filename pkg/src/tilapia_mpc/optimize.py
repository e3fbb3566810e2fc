"""Projected BFGS on the unit box with finite-difference gradients.

The objective is supplied in batched form, ``fun(X) -> costs`` with ``X`` of
shape (B, n); central-difference probes and line-search trial points are each
evaluated in a single call.  Non-finite costs are treated as +inf.

Each iteration fixes the variables held at a bound by the sign of the
gradient (the active set), takes a quasi-Newton step in the free variables,
and backtracks along the projection arc ``P(x + a d)`` until an Armijo
condition holds.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["BoxResult", "minimize_box"]


@dataclass
class BoxResult:
    x: np.ndarray
    fun: float
    fun0: float
    nit: int
    nfev: int
    converged: bool
    message: str


def _safe(fun, X):
    with np.errstate(all="ignore"):
        v = np.asarray(fun(X), dtype=float)
    return np.where(np.isfinite(v), v, np.inf)


def _fd_gradient(fun, x, h):
    """Central differences, one-sided where a probe is non-finite, else zero."""
    n = x.size
    E = np.eye(n) * h
    v = _safe(fun, np.vstack([x + E, x - E, x[None, :]]))
    up, down, f0 = v[:n], v[n:2 * n], v[-1]
    with np.errstate(invalid="ignore"):
        g = np.where(np.isfinite(up) & np.isfinite(down), (up - down) / (2.0 * h),
                     np.where(np.isfinite(up), (up - f0) / h,
                              np.where(np.isfinite(down), (f0 - down) / h, 0.0)))
    return np.where(np.isfinite(g), g, 0.0)


def minimize_box(fun, x0, *, fd_step=1e-6, rtol=1e-8, gtol=1e-6, max_iter=500,
                 c1=1e-4, max_backtrack=30, init_step=0.1):
    """Minimize ``fun`` over [0, 1]^n starting from ``x0`` (clipped into the box).

    Converges when the projected-gradient norm drops below ``gtol`` or an
    accepted step lowers the cost by less than ``rtol`` relative.  The
    returned point never costs more than the start.
    """
    x = np.clip(np.asarray(x0, dtype=float).ravel(), 0.0, 1.0)
    n = x.size
    fx = float(_safe(fun, x[None, :])[0])
    nfev = 1
    f0 = fx
    if not np.isfinite(fx):
        return BoxResult(x, fx, f0, 0, nfev, False, "non-finite cost at start")

    alphas = 0.5 ** np.arange(max_backtrack)
    H = None
    g = _fd_gradient(fun, x, fd_step)
    nfev += 2 * n + 1
    message = "iteration limit"
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        pg = x - np.clip(x - g, 0.0, 1.0)
        pg_norm = float(np.linalg.norm(pg))
        if pg_norm < gtol:
            converged, message = True, "projected gradient below tolerance"
            it -= 1
            break

        eps_b = min(1e-3, pg_norm)
        active = ((x <= eps_b) & (g > 0)) | ((x >= 1.0 - eps_b) & (g < 0))
        free = ~active

        d = np.zeros(n)
        if H is not None:
            d[free] = -H[np.ix_(free, free)] @ g[free]
            # variables in the bound band take a diagonally scaled step onto the bound
            d[active] = -g[active] * np.diag(H)[active]
        if H is None or not g @ d < 0:
            H = None
            d = -g * (init_step / float(np.max(np.abs(g))))

        trial = np.clip(x[None, :] + alphas[:, None] * d[None, :], 0.0, 1.0)
        vals = _safe(fun, trial)
        nfev += len(alphas)
        armijo = vals <= fx + c1 * ((trial - x) @ g)
        ok = np.flatnonzero(armijo & (vals <= fx))
        if ok.size == 0:
            if H is not None:
                H = None  # retry once along steepest descent
                continue
            converged, message = True, "no decrease along projected descent direction"
            break

        x_new, f_new = trial[ok[0]], float(vals[ok[0]])
        g_new = _fd_gradient(fun, x_new, fd_step)
        nfev += 2 * n + 1
        s, y = x_new - x, g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)) and sy > 0:
            if H is None:
                H = np.eye(n) * (sy / float(y @ y))
            rho = 1.0 / sy
            V = np.eye(n) - rho * np.outer(s, y)
            H = V @ H @ V.T + rho * np.outer(s, s)
        rel = (fx - f_new) / max(abs(fx), 1e-300)
        x, fx, g = x_new, f_new, g_new
        if rel < rtol:
            converged, message = True, "relative decrease below tolerance"
            break

    return BoxResult(x, fx, f0, it, nfev, converged, message)

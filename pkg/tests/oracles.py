"""Independent reference implementations used to freeze expected values.

Written against the model equations with plain ``math`` and no shared code
with the package.
"""
import math

TABLE1 = dict(m=0.67, n=0.81, b=0.62, a=0.53, h=0.8, k_min=0.00133, j=0.0132, kappa=4.6,
              rho=1.0, T_opt=33.0, T_min=24.0, T_max=40.0, UIA_crit=0.06, UIA_max=1.4,
              DO_min=0.3, DO_crit=1.0)


def tau(T, c=TABLE1):
    if T > c["T_opt"]:
        return math.exp(-c["kappa"] * ((T - c["T_opt"]) / (c["T_max"] - c["T_opt"])) ** 4)
    if T < c["T_opt"]:
        return math.exp(-c["kappa"] * ((c["T_opt"] - T) / (c["T_opt"] - c["T_min"])) ** 4)
    return 1.0


def nu(uia, c=TABLE1):
    if uia < c["UIA_crit"]:
        return 1.0
    if uia < c["UIA_max"]:
        return (c["UIA_max"] - uia) / (c["UIA_max"] - c["UIA_crit"])
    return 0.0


def sigma(do, c=TABLE1):
    if do > c["DO_crit"]:
        return 1.0
    if do > c["DO_min"]:
        return (do - c["DO_min"]) / (c["DO_crit"] - c["DO_min"])
    return 0.0


def dwdt(w, f, T, do, uia, c=TABLE1):
    psi = c["h"] * c["rho"] * f * c["b"] * (1 - c["a"]) * tau(T, c) * sigma(do, c)
    k = c["k_min"] * math.exp(c["j"] * (T - c["T_min"]))
    w = max(w, 0.0)
    return psi * nu(uia, c) * w ** c["m"] - k * w ** c["n"]


def euler(w0, schedule, uia=0.05, steps_per_day=3600, c=TABLE1):
    """Forward Euler over daily piecewise-constant inputs; returns daily weights."""
    out = [w0]
    w = w0
    dt = 1.0 / steps_per_day
    for f, T, do in schedule:
        for _ in range(steps_per_day):
            w = max(w + dt * dwdt(w, f, T, do, uia, c), 0.0)
        out.append(w)
    return out


def richardson_euler(w0, schedule, uia=0.05, steps_per_day=3600):
    """First-order Euler error removed by Richardson extrapolation (2*fine - coarse)."""
    fine = euler(w0, schedule, uia, steps_per_day)
    coarse = euler(w0, schedule, uia, steps_per_day // 2)
    return [2 * a - b for a, b in zip(fine, coarse)]

"""Error-bound formulas for the l2-lasso and the constrained lasso."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gamma

from .geometry import OutOfRangeError, delta_l1_closed_form, delta_monte_carlo
from .regularizers import L1

__all__ = [
    "BoundVacuousError",
    "BoundInput",
    "BoundReport",
    "CurvePoint",
    "gamma_m",
    "t_for_failure_probability",
    "regularized_bound",
    "constrained_bound",
    "sharp_estimate",
    "bound_curve",
    "PROBABILITY_POSITIVE_T",
]

# 1 - 5 exp(-t^2/32) > 0  iff  t > sqrt(32 ln 5)
PROBABILITY_POSITIVE_T = math.sqrt(32 * math.log(5))


class BoundVacuousError(OutOfRangeError):
    """sqrt(delta) >= sqrt(m-1): lambda is outside (lam_min, lam_max)."""


# Gamma(x + 1/2) / (sqrt(x) Gamma(x)) = sum_i c_i x^-i for large x
_RATIO_SERIES = (1.0, -1 / 8, 1 / 128, 5 / 1024, -21 / 32768, -399 / 262144, 869 / 4194304)
_SERIES_FROM = 100.0


def gamma_m(m):
    """E||g|| for g ~ N(0, I_m), i.e. sqrt(2) Gamma((m+1)/2) / Gamma(m/2).

    A direct Gamma ratio below ``m = 200`` and an asymptotic series above;
    subtracting log-gammas would lose about ``log(m) * 1e-16 * m`` relative
    accuracy, which is visible in ``gamma_m^2 - sqrt(m (m-1)) ~ 1/(4m)``.
    """
    m = np.asarray(m, dtype=float)
    if np.any(m < 1):
        raise ValueError("m must be >= 1")
    x = m / 2
    small = x < _SERIES_FROM
    xs = np.where(small, x, 1.0)
    xl = np.where(small, _SERIES_FROM, x)
    direct = gamma(xs + 0.5) / gamma(xs)
    inv = 1.0 / xl
    series = np.zeros_like(xl)
    for c in reversed(_RATIO_SERIES):
        series = series * inv + c
    out = math.sqrt(2.0) * np.where(small, direct, np.sqrt(xl) * series)
    return float(out) if out.ndim == 0 else out


def t_for_failure_probability(p: float = 0.05) -> float:
    """The t with 5 exp(-t^2/32) = p."""
    if not 0 < p < 5:
        raise ValueError("p must lie in (0, 5)")
    return math.sqrt(32 * math.log(5 / p))


@dataclass(frozen=True)
class BoundInput:
    """Validated arguments of the regularized or constrained bound."""

    m: int
    delta: float
    t: float
    z_norm: float

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("need m >= 2")
        if self.delta < 0 or self.z_norm < 0:
            raise ValueError("delta and ||z|| must be nonnegative")
        slack = math.sqrt(self.m - 1) - math.sqrt(self.delta)
        if slack <= 0:
            raise BoundVacuousError(
                f"sqrt(delta)={math.sqrt(self.delta)!r} >= sqrt(m-1)={math.sqrt(self.m - 1)!r}")
        if not 0 < self.t < slack:
            raise OutOfRangeError(
                f"t={self.t!r} must lie in (0, sqrt(m-1) - sqrt(delta)) = (0, {slack!r})")

    @property
    def t_max(self) -> float:
        return math.sqrt(self.m - 1) - math.sqrt(self.delta)


@dataclass(frozen=True)
class BoundReport:
    value: float
    probability: float
    flavor: str
    t: float
    m: int
    delta: float
    z_norm: float

    @property
    def probability_meaningful(self) -> bool:
        """False when the success-probability formula is not positive."""
        return self.probability > 0


def regularized_bound(m: int, delta: float, t: float, z_norm: float) -> BoundReport:
    """``2||z|| (sqrt(delta) + t) / (sqrt(m-1) - sqrt(delta) - t)``.

    Holds for the l2-lasso with probability at least ``1 - 5 exp(-t^2/32)``.
    """
    b = BoundInput(m, delta, t, z_norm)
    sd = math.sqrt(delta)
    val = 2.0 * z_norm * (sd + t) / (b.t_max - t)
    return BoundReport(val, 1 - 5 * math.exp(-t * t / 32), "regularized", t, m, delta, z_norm)


def constrained_bound(m: int, delta_cone: float, t: float, z_norm: float) -> BoundReport:
    """Constrained-lasso counterpart, with probability ``1 - 6 exp(-t^2/26)``."""
    b = BoundInput(m, delta_cone, t, z_norm)
    sd = math.sqrt(delta_cone)
    val = z_norm * math.sqrt(m / (m - 1)) * (sd + t) / (b.t_max - t)
    return BoundReport(val, 1 - 6 * math.exp(-t * t / 26), "constrained", t, m, delta_cone, z_norm)


def sharp_estimate(m: int, delta: float, z_norm: float) -> float:
    """Small-noise, large-m error prediction ``||z|| sqrt(delta) / sqrt(m - delta)``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if delta >= m:
        raise OutOfRangeError(f"need delta < m, got delta={delta!r}, m={m}")
    return z_norm * math.sqrt(delta) / math.sqrt(m - delta)


@dataclass(frozen=True)
class CurvePoint:
    lam: float
    delta: float
    denominator: float  # sqrt(m-1) - sqrt(delta)
    value: Optional[float]  # None where the bound is vacuous
    stderr: float = 0.0

    @property
    def vacuous(self) -> bool:
        return self.value is None


def bound_curve(geometry, m: int, z_norm: float, t: float, lam_grid,
                method: str = "auto", samples: int = 20_000, seed=0) -> list:
    """Evaluate the regularized bound over a lambda grid.

    Points where ``t`` is not admissible are kept and marked vacuous.
    ``method="auto"`` uses the closed form for l1 and common-random-number
    Monte Carlo otherwise.
    """
    lams = np.asarray(lam_grid, dtype=float).ravel()
    if lams.size == 0:
        raise ValueError("empty lambda grid")
    if not t > 0:
        raise ValueError("t must be positive")
    if method == "auto":
        method = "closed_form" if isinstance(geometry.reg, L1) else "monte_carlo"
    if method == "closed_form":
        sig = geometry.signal
        deltas = np.atleast_1d(delta_l1_closed_form(sig.n, sig.k, lams))
        errs = np.zeros_like(deltas)
    elif method == "monte_carlo":
        deltas, errs = delta_monte_carlo(geometry, lams, samples, seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    out = []
    for lam, dl, se in zip(lams, deltas, errs):
        denom = math.sqrt(m - 1) - math.sqrt(dl)
        try:
            val = regularized_bound(m, float(dl), t, z_norm).value
        except OutOfRangeError:
            val = None
        out.append(CurvePoint(float(lam), float(dl), denom, val, float(se)))
    return out

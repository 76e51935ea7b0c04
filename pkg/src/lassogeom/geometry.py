"""Gaussian squared distance to the scaled subdifferential, and tuning.

``delta(lam)`` is ``E dist^2(h, lam * df(x0))`` for standard normal ``h``.
It is available exactly for the l1 norm, as an analytic upper bound for
l1 and nuclear norms, and by Monte Carlo for any supported geometry.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .model import SeedSpec, _as_seed
from .regularizers import L1, Nuclear, SubdiffGeometry

__all__ = [
    "OutOfRangeError",
    "DistanceQuery",
    "CalibrationReport",
    "delta_l1_closed_form",
    "delta_upper_bound",
    "delta_monte_carlo",
    "delta_cone_monte_carlo",
    "golden_section",
    "calibrate",
]

CHUNK = 2048
GOLDEN_TOL = 1e-8
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class OutOfRangeError(ValueError):
    """A parameter lies outside the range where a formula holds."""


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("LASSOGEOM_THREADS", "1")))
    except ValueError:
        return 1


def delta_l1_closed_form(n: int, k: int, lam):
    """Exact delta(lam * d||x0||_1) for a k-sparse x0 in R^n.

    Accepts a scalar or an array of lambdas.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0) or np.any(~np.isfinite(lam)):
        raise ValueError("lambda must be finite and nonnegative")
    l2 = lam * lam
    off = (1 + l2) * erfc(lam / math.sqrt(2)) - math.sqrt(2 / math.pi) * lam * np.exp(-l2 / 2)
    out = k * (1 + l2) + (n - k) * off
    return float(out) if out.ndim == 0 else out


def _l1_threshold(n, k):
    return math.sqrt(2 * math.log(n / k))


def delta_upper_bound(geometry: SubdiffGeometry, lam: float) -> float:
    """Error-function-free upper bound on delta, valid above a threshold lambda.

    l1: ``(lam^2 + 3) k`` for ``lam >= sqrt(2 log(n/k))``.
    Nuclear: ``lam^2 r + 2 sqrt(n) (r + 1)`` for ``lam >= 2 n^(1/4)``.
    """
    reg, sig = geometry.reg, geometry.signal
    if isinstance(reg, L1):
        n, k = sig.n, sig.k
        thr = _l1_threshold(n, k)
        if lam < thr * (1 - 1e-12):
            raise OutOfRangeError(f"l1 bound needs lambda >= sqrt(2 log(n/k)) = {thr!r}")
        return (lam * lam + 3.0) * k
    n, r = sig.n, sig.r
    thr = 2.0 * n ** 0.25
    if lam < thr * (1 - 1e-12):
        raise OutOfRangeError(f"nuclear bound needs lambda >= 2 n^(1/4) = {thr!r}")
    return lam * lam * r + 2.0 * math.sqrt(n) * (r + 1)


def _combine(stats):
    """Merge per-chunk (count, mean, M2) triples in order (Chan et al.)."""
    count, mean, m2 = 0, None, None
    for c, mu, s in stats:
        if mean is None:
            count, mean, m2 = c, mu.copy(), s.copy()
            continue
        tot = count + c
        dlt = mu - mean
        mean = mean + dlt * (c / tot)
        m2 = m2 + s + dlt * dlt * (count * c / tot)
        count = tot
    return count, mean, m2


def _chunked(samples, seed, work, workers):
    """Run ``work(rng, size)`` over fixed-size chunks keyed by chunk index.

    Each chunk draws from ``seed.child(j)``; reduction is in chunk order, so
    the result does not depend on ``workers``.
    """
    seed = _as_seed(seed)
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)

    def run(j):
        vals = work(seed.child(j).generator(), sizes[j])
        mu = vals.mean(axis=-1)
        dev = vals - mu[..., None]
        return vals.shape[-1], mu, (dev * dev).sum(axis=-1)

    workers = workers or default_workers()
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(workers) as ex:
            stats = list(ex.map(run, range(len(sizes))))
    else:
        stats = [run(j) for j in range(len(sizes))]
    count, mean, m2 = _combine(stats)
    stderr = np.sqrt(m2 / (count - 1) / count)
    return mean, stderr


def delta_monte_carlo(geometry: SubdiffGeometry, lam, samples: int, seed, workers=None):
    """Monte Carlo estimate of delta(lam * df(x0)) and its standard error.

    ``lam`` may be an array, in which case every lambda is evaluated on the
    same Gaussian samples and arrays are returned.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    lams = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lams < 0):
        raise ValueError("lambda must be nonnegative")
    n = geometry.n

    def work(rng, size):
        fn = geometry.dist_squared_fn(rng.standard_normal((size, n)))
        return np.stack([fn(lj) for lj in lams])

    est, se = _chunked(samples, seed, work, workers)
    if np.ndim(lam) == 0:
        return float(est[0]), float(se[0])
    return est, se


def golden_section(fn, lo, hi, tol=GOLDEN_TOL, maxiter=500):
    """Minimize a unimodal function on ``[lo, hi]``, elementwise over arrays.

    ``fn`` maps an array of abscissae (one per problem) to function values.
    Returns the midpoint of the final bracket.
    """
    a = np.array(lo, dtype=float)
    b = np.array(hi, dtype=float)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(maxiter):
        if np.all(b - a <= tol):
            break
        left = fc < fd
        # left: minimum in [a, d]; else in [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        nc = np.where(left, b - _INVPHI * (b - a), d)
        nd = np.where(left, c, a + _INVPHI * (b - a))
        fnew = fn(np.where(left, nc, nd))
        fc, fd = np.where(left, fnew, fd), np.where(left, fc, fnew)
        c, d = nc, nd
    else:
        raise ArithmeticError(
            f"golden section did not reach tol={tol} in {maxiter} steps; "
            f"max bracket {np.max(b - a)!r}")
    return (a + b) / 2


def _cone_dist2(geometry, h):
    """min over lam >= 0 of dist^2(h_i, lam * df(x0)) for a batch ``h``."""
    fn = geometry.dist_squared_fn(h)
    # dist(h, lam*C) >= lam*min||s|| - ||h||, so past this point it exceeds dist(h, {0})
    hi = 2.0 * np.linalg.norm(h, axis=1) / geometry.min_subgradient_norm + 1.0
    lam_star = golden_section(fn, np.zeros(h.shape[0]), hi)
    return np.minimum(fn(lam_star), fn(0.0))


def delta_cone_monte_carlo(geometry: SubdiffGeometry, samples: int, seed, workers=None):
    """Monte Carlo estimate of delta(cone(df(x0))).

    Each sample's squared distance to the cone is found by a 1-D golden
    section search over the scale ``lam >= 0`` (the objective is convex).
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    n = geometry.n

    def work(rng, size):
        return _cone_dist2(geometry, rng.standard_normal((size, n)))[None]

    est, se = _chunked(samples, seed, work, workers)
    return float(est[0]), float(se[0])


@dataclass(frozen=True)
class DistanceQuery:
    """A request for delta(lam * df(x0)) resolved by a named method.

    ``method`` is ``"closed_form"`` (l1 only), ``"analytic_bound"`` (above
    its threshold) or ``"monte_carlo"``.
    """

    geometry: SubdiffGeometry
    lam: float
    method: str = "closed_form"
    samples: int = 100_000
    seed: SeedSpec = field(default_factory=lambda: SeedSpec(0))

    def resolve(self):
        """Return ``(delta, stderr)``; stderr is 0 for deterministic methods."""
        if self.method == "closed_form":
            if not isinstance(self.geometry.reg, L1):
                raise ValueError("closed form is only available for the l1 norm")
            s = self.geometry.signal
            return delta_l1_closed_form(s.n, s.k, self.lam), 0.0
        if self.method == "analytic_bound":
            return delta_upper_bound(self.geometry, self.lam), 0.0
        if self.method == "monte_carlo":
            return delta_monte_carlo(self.geometry, self.lam, self.samples, self.seed)
        raise ValueError(f"unknown method {self.method!r}")


@dataclass
class CalibrationReport:
    """Tuning range of the regularized estimator for a given m.

    ``lam_min`` is None when ``n <= m - 1`` (no crossing left of the
    minimum); both ends are None when ``feasible`` is False.
    """

    m: int
    lam_best: float
    delta_best: float
    feasible: bool
    lam_min: Optional[float] = None
    lam_max: Optional[float] = None
    delta_min: Optional[float] = None
    delta_max: Optional[float] = None
    method: str = "closed_form"
    golden_tol: float = GOLDEN_TOL
    root_xtol: float = 1e-14

    def contains(self, lam: float) -> bool:
        """True iff lam lies in the open interval where the bound is meaningful."""
        if not self.feasible:
            return False
        lo = self.lam_min if self.lam_min is not None else -math.inf
        return lo < lam < self.lam_max


def _delta_function(geometry, method, samples, seed):
    if method == "closed_form":
        if not isinstance(geometry.reg, L1):
            raise ValueError("closed form is only available for the l1 norm")
        n, k = geometry.signal.n, geometry.signal.k
        return lambda lam: delta_l1_closed_form(n, k, lam)
    if method == "monte_carlo":
        # common random numbers: one fixed batch of h for every lambda
        h = _as_seed(seed).generator().standard_normal((samples, geometry.n))
        fn = geometry.dist_squared_fn(h)
        return lambda lam: float(fn(float(lam)).mean())
    raise ValueError(f"unknown calibration method {method!r}")


def calibrate(geometry: SubdiffGeometry, m: int, method: str = "closed_form",
              samples: int = 20_000, seed=0) -> CalibrationReport:
    """Locate lam_best (minimizer of delta) and the crossings delta = m - 1.

    lam_best comes from golden section; lam_min and lam_max from bracketed
    root finding on ``sqrt(delta) - sqrt(m - 1)``.
    """
    if m < 2:
        raise ValueError("need m >= 2")
    if method == "auto":
        method = "closed_form" if isinstance(geometry.reg, L1) else "monte_carlo"
    delta = _delta_function(geometry, method, samples, seed)
    vdelta = np.vectorize(delta, otypes=[float])

    hi = 1.0
    while delta(hi) < delta(hi / 2):
        hi *= 2.0
        if hi > 1e8:
            raise ArithmeticError("could not bracket the minimizer of delta")
    lam_best = float(golden_section(vdelta, 0.0, hi))
    d_best = delta(lam_best)
    target = math.sqrt(m - 1)
    rep = CalibrationReport(m=m, lam_best=lam_best, delta_best=d_best,
                            feasible=d_best < m - 1, method=method)
    if not rep.feasible:
        return rep

    def gap(lam):
        return math.sqrt(delta(lam)) - target

    if gap(0.0) > 0:
        rep.lam_min = brentq(gap, 0.0, lam_best, xtol=rep.root_xtol, rtol=1e-15, maxiter=500)
        rep.delta_min = delta(rep.lam_min)
    top = max(lam_best, 1e-3) * 2.0
    while gap(top) <= 0:
        top *= 2.0
        if top > 1e12:
            raise ArithmeticError("could not bracket lambda_max")
    rep.lam_max = brentq(gap, lam_best, top, xtol=rep.root_xtol, rtol=1e-15, maxiter=500)
    rep.delta_max = delta(rep.lam_max)
    return rep

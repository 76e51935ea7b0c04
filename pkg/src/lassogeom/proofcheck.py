"""Numerical checks of the ingredients behind the l2-lasso error bound.

The bound follows from a Gaussian comparison argument that replaces the
random matrix by two independent Gaussian vectors ``g`` (length m) and
``h`` (length n). The objects here evaluate the resulting scalar problem
``L(t; g, h)``, the three high-probability events it relies on, and the
deterministic inequality that turns those events into ``L > ||zbar||``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bounds import gamma_m, regularized_bound, sharp_estimate
from .geometry import OutOfRangeError, delta_l1_closed_form, delta_monte_carlo
from .model import ProblemInstance, SeedSpec, SignalModel, _as_seed
from .records import TrialRecord
from .regularizers import L1, Regularizer, SubdiffGeometry
from .solvers import ConvergenceError, SolveConfig, error_objective, solve_l2_lasso

__all__ = [
    "ProofScenario",
    "EventCheck",
    "ell_of_t",
    "L_value",
    "L_value_batch",
    "check_conditions",
    "phi",
    "radius_threshold",
    "comparison_check",
    "sample_scenario",
    "condition_frequencies",
    "comparison_monte_carlo",
    "concentration_tails",
    "end_to_end_bound_check",
]


def ell_of_t(m: int, delta: float, t: float, zbar_norm: float) -> float:
    """The error radius for ``||z|| = ||zbar|| / sqrt(m)``."""
    return regularized_bound(m, delta, t, zbar_norm / math.sqrt(m)).value


@dataclass(eq=False)
class ProofScenario:
    """One draw of the comparison problem.

    ``zbar = sqrt(m) z``. ``delta`` defaults to the exact l1 value when the
    geometry is l1; pass it explicitly otherwise.
    """

    geometry: SubdiffGeometry
    lam: float
    t: float
    m: int
    zbar: np.ndarray
    g: np.ndarray
    h: np.ndarray
    delta: Optional[float] = None
    ell: float = field(init=False)
    dist: float = field(init=False)

    def __post_init__(self):
        self.zbar = np.asarray(self.zbar, dtype=float).ravel()
        self.g = np.asarray(self.g, dtype=float).ravel()
        self.h = np.asarray(self.h, dtype=float).ravel()
        if self.zbar.size != self.m or self.g.size != self.m:
            raise ValueError("zbar and g must have length m")
        if self.delta is None:
            if not isinstance(self.geometry.reg, L1):
                raise ValueError("pass delta explicitly for non-l1 geometries")
            s = self.geometry.signal
            self.delta = delta_l1_closed_form(s.n, s.k, self.lam)
        # raises OutOfRangeError unless 0 < t < sqrt(m-1) - sqrt(delta)
        self.ell = ell_of_t(self.m, self.delta, self.t, float(np.linalg.norm(self.zbar)))
        self.dist = float(self.geometry.dist(self.lam, self.h))

    @property
    def zbar_norm(self) -> float:
        return float(np.linalg.norm(self.zbar))


@dataclass(frozen=True)
class EventCheck:
    index: int
    holds: bool
    margin: float


def L_value_batch(gnorm2, gz, zbar_norm2, dist, ell):
    """Vectorized ``min_{alpha >= ell} sqrt(alpha^2 a - 2 alpha b + c) - alpha d``.

    ``a = ||g||^2``, ``b = g^T zbar``, ``c = ||zbar||^2``, ``d = dist``. The
    objective is convex in alpha; when ``d < sqrt(a)`` its stationary point
    is ``(b + d sqrt((a c - b^2) / (a - d^2))) / a``, and the constrained
    minimizer is the larger of that and ``ell``. When ``d >= sqrt(a)`` the
    objective decreases without bound (``d > sqrt(a)``) or toward
    ``-b / sqrt(a)`` (equality), and that infimum is returned.
    """
    a, b, c, d, ell = np.broadcast_arrays(*(np.asarray(v, dtype=float)
                                            for v in (gnorm2, gz, zbar_norm2, dist, ell)))
    out = np.empty(a.shape)
    sa = np.sqrt(a)
    inner = d < sa
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = np.maximum(a * c - b * b, 0.0) / (a - d * d)
        stat = (b + d * np.sqrt(disc)) / a
    alpha = np.where(inner, np.maximum(stat, ell), ell)
    val = np.sqrt(np.maximum(alpha * alpha * a - 2 * alpha * b + c, 0.0)) - alpha * d
    out[...] = np.where(inner, val, np.where(d > sa, -np.inf, -b / np.where(sa > 0, sa, 1.0)))
    return float(out) if out.ndim == 0 else out


def L_value(sc: ProofScenario) -> float:
    """``L(t; g, h)`` for one scenario."""
    return L_value_batch(sc.g @ sc.g, sc.g @ sc.zbar, sc.zbar @ sc.zbar, sc.dist, sc.ell)


def _margins(gnorm, dist, gz, zbar_norm, m, delta, t):
    gm = gamma_m(m)
    return (gnorm - (gm - t / 4),
            (math.sqrt(delta) + t / 4) - dist,
            (t / 4) * zbar_norm - gz)


def check_conditions(sc: ProofScenario) -> list:
    """The three events: ``||g|| >= gamma_m - t/4``,
    ``dist(h) <= sqrt(delta) + t/4`` and ``g^T zbar <= (t/4) ||zbar||``."""
    ms = _margins(float(np.linalg.norm(sc.g)), sc.dist, float(sc.g @ sc.zbar),
                  sc.zbar_norm, sc.m, sc.delta, sc.t)
    return [EventCheck(i + 1, bool(mg >= 0), float(mg)) for i, mg in enumerate(ms)]


def phi(alpha, m, delta, t, zbar_norm):
    """Lower bound on the scalar objective when all three events hold."""
    alpha = np.asarray(alpha, dtype=float)
    gm = gamma_m(m)
    q = alpha ** 2 * (gm - t / 4) ** 2 + zbar_norm ** 2 - 0.5 * alpha * zbar_norm * t
    return np.sqrt(np.maximum(q, 0.0)) - alpha * (math.sqrt(delta) + t / 4)


def radius_threshold(m, delta, t, zbar_norm) -> float:
    """The alpha above which ``phi(alpha) > ||zbar||``.

    ``2 ||zbar|| (sqrt(delta) + t/2) / (gamma_m^2 - delta - (t/2)(gamma_m + sqrt(delta)))``.
    """
    gm = gamma_m(m)
    sd = math.sqrt(delta)
    den = gm * gm - delta - (t / 2) * (gm + sd)
    if den <= 0:
        return math.inf
    return 2 * zbar_norm * (sd + t / 2) / den


def _comparison_margins(m, delta, t, zbar_norm, ell, Lval, alpha_samples):
    alphas = np.geomspace(ell, 1e3 * ell, alpha_samples) if ell > 0 else np.zeros(1)
    phi_margin = float(np.min(phi(alphas, m, delta, t, zbar_norm) - zbar_norm))
    L_margin = float(Lval - zbar_norm)
    thr_margin = float(ell - radius_threshold(m, delta, t, zbar_norm))
    return phi_margin, L_margin, thr_margin


def comparison_check(sc: ProofScenario, alpha_samples: int = 512):
    """Verify ``phi(alpha) > ||zbar||`` on a log grid of ``[ell, 1000 ell]``,
    ``L(t; g, h) > ||zbar||``, and that ``ell`` exceeds the threshold.

    Returns ``(holds, min_margin)``. Requires all three events to hold.
    """
    if not all(c.holds for c in check_conditions(sc)):
        raise ValueError("scenario violates the high-probability events")
    ms = _comparison_margins(sc.m, sc.delta, sc.t, sc.zbar_norm, sc.ell, L_value(sc),
                             alpha_samples)
    return all(v > 0 for v in ms), min(ms)


def sample_scenario(geometry, lam, t, m, zbar, seed, delta=None) -> ProofScenario:
    """Draw ``g`` and ``h`` from ``seed`` (children 0 and 1)."""
    seed = _as_seed(seed)
    g = seed.child(0).generator().standard_normal(m)
    h = seed.child(1).generator().standard_normal(geometry.n)
    return ProofScenario(geometry, lam, t, m, zbar, g, h, delta)


def _resolve_delta(geometry, lam, delta, samples=100_000, seed=0):
    if delta is not None:
        return float(delta)
    if isinstance(geometry.reg, L1):
        s = geometry.signal
        return delta_l1_closed_form(s.n, s.k, lam)
    return delta_monte_carlo(geometry, lam, samples, seed)[0]


def _draw_stats(geometry, lam, m, zbar, samples, seed):
    """Per-sample ``||g||``, ``g^T zbar`` and ``dist(h, lam df)`` in chunks."""
    seed = _as_seed(seed)
    zbar = np.asarray(zbar, dtype=float)
    out_g, out_gz, out_d = [], [], []
    chunk = 4096
    for j, start in enumerate(range(0, samples, chunk)):
        size = min(chunk, samples - start)
        rng = seed.child(j).generator()
        G = rng.standard_normal((size, m))
        H = rng.standard_normal((size, geometry.n))
        out_g.append(np.linalg.norm(G, axis=1))
        out_gz.append(G @ zbar)
        out_d.append(np.sqrt(geometry.dist_squared_fn(H)(lam)))
    return np.concatenate(out_g), np.concatenate(out_gz), np.concatenate(out_d)


def condition_frequencies(geometry, lam, t, m, zbar, samples, seed, delta=None) -> dict:
    """Empirical frequency of each event and of all three jointly.

    Returned next to the analytic lower bounds ``1 - e``, ``1 - e``,
    ``1 - e/2`` and ``1 - 5e/2`` with ``e = exp(-t^2/32)``, and the
    binomial standard errors.
    """
    delta = _resolve_delta(geometry, lam, delta)
    gn, gz, dist = _draw_stats(geometry, lam, m, zbar, samples, seed)
    m1, m2, m3 = _margins(gn, dist, gz, float(np.linalg.norm(zbar)), m, delta, t)
    hits = [m1 >= 0, m2 >= 0, m3 >= 0]
    hits.append(hits[0] & hits[1] & hits[2])
    e = math.exp(-t * t / 32)
    freq = np.array([h.mean() for h in hits])
    return {
        "frequency": freq,
        "stderr": np.sqrt(freq * (1 - freq) / samples),
        "lower_bound": np.array([1 - e, 1 - e, 1 - e / 2, 1 - 2.5 * e]),
        "samples": samples,
        "delta": delta,
    }


def comparison_monte_carlo(geometry, lam, t, m, zbar, scenarios, seed, delta=None,
                       alpha_samples: int = 512) -> dict:
    """Run :func:`comparison_check` logic over many sampled scenarios.

    Only scenarios satisfying all three events are checked. Counts the
    failures of the whole check and of the threshold inequality separately.
    """
    delta = _resolve_delta(geometry, lam, delta)
    zbar = np.asarray(zbar, dtype=float)
    zn = float(np.linalg.norm(zbar))
    ell = ell_of_t(m, delta, t, zn)
    gn, gz, dist = _draw_stats(geometry, lam, m, zbar, scenarios, seed)
    m1, m2, m3 = _margins(gn, dist, gz, zn, m, delta, t)
    ok = (m1 >= 0) & (m2 >= 0) & (m3 >= 0)
    Lvals = L_value_batch(gn[ok] ** 2, gz[ok], zn * zn, dist[ok], ell)
    # phi and the threshold depend only on (m, delta, t, ||zbar||)
    phi_m, _, thr_m = _comparison_margins(m, delta, t, zn, ell, 0.0, alpha_samples)
    L_margin = np.atleast_1d(Lvals) - zn
    holds = (L_margin > 0) & (phi_m > 0) & (thr_m > 0)
    return {
        "scenarios": scenarios,
        "conforming": int(ok.sum()),
        "failures": int(np.sum(~holds)),
        "threshold_failures": 0 if thr_m > 0 else int(ok.sum()),
        "min_L_margin": float(L_margin.min()) if L_margin.size else math.nan,
        "phi_margin": phi_m,
        "threshold_margin": thr_m,
        "ell": ell,
        "delta": delta,
    }


def concentration_tails(geometry, lam, m, samples, seed, us=(0.5, 1.0, 1.5, 2.0, 2.5)) -> dict:
    """Upper/lower tail frequencies of ``||g|| - gamma_m`` and
    ``dist(h) - E dist(h)`` against the 1-Lipschitz bound ``exp(-u^2/2)``.

    ``E dist`` is the Monte Carlo mean of the same samples; its Jensen gap
    to ``sqrt(delta)`` is reported as well.
    """
    gn, _, dist = _draw_stats(geometry, lam, m, np.zeros(m), samples, seed)
    mean_dist = float(dist.mean())
    dg = gn - gamma_m(m)
    dd = dist - mean_dist
    us = np.asarray(us, dtype=float)
    rows = []
    for u in us:
        for name, dev in (("norm_g", dg), ("dist_h", dd)):
            for side, hit in (("upper", dev >= u), ("lower", dev <= -u)):
                p = float(hit.mean())
                rows.append({"quantity": name, "side": side, "u": float(u), "frequency": p,
                             "stderr": math.sqrt(max(p * (1 - p), 1.0 / samples) / samples),
                             "bound": math.exp(-u * u / 2)})
    delta = _resolve_delta(geometry, lam, None)
    return {"rows": rows, "mean_dist": mean_dist, "sqrt_delta": math.sqrt(delta),
            "jensen_gap": math.sqrt(delta) - mean_dist}


def end_to_end_bound_check(inst: ProblemInstance, f: Regularizer, lam: float, t: float,
                           cfg: SolveConfig = SolveConfig(), delta: Optional[float] = None,
                           seed=0, trial_id: int = 0, noise=None, probes: int = 64) -> TrialRecord:
    """Solve the l2-lasso on ``inst`` and compare the error with the bound.

    The bound is marked invalid (NaN) when ``t`` is not admissible. The
    record also carries a smoke test of the statement that the error-form
    objective exceeds ``||z||`` on the sphere of radius ``ell(t)``.
    """
    if delta is None:
        if not isinstance(f, L1):
            raise ValueError("pass delta explicitly for non-l1 regularizers")
        sig = SignalModel.sparse(inst.x0)
        delta = delta_l1_closed_form(sig.n, sig.k, lam)
    z_norm = float(np.linalg.norm(inst.z))
    degenerate = z_norm == 0.0
    try:
        sol = solve_l2_lasso(inst, f, lam, cfg)
    except ConvergenceError as exc:
        sol = exc.solution
    err = float(np.linalg.norm(sol.x - inst.x0))
    try:
        ell = regularized_bound(inst.m, delta, t, z_norm).value
    except OutOfRangeError:
        ell = math.nan
    try:
        sharp = sharp_estimate(inst.m, delta, z_norm)
    except OutOfRangeError:
        sharp = math.nan
    violated = bool(not degenerate and np.isfinite(ell) and err > ell)
    probe = math.nan
    if np.isfinite(ell) and ell > 0:
        rng = _as_seed(seed).child(99).generator()
        W = rng.standard_normal((probes, inst.n))
        W *= (ell * (1 + 1e-6)) / np.linalg.norm(W, axis=1, keepdims=True)
        probe = min(error_objective(inst, f, lam, w) for w in W) - z_norm
    seed = _as_seed(seed)
    return TrialRecord(
        trial_id=trial_id,
        seed=seed.stream[0] if seed.stream else seed.seed,
        lam=float(lam),
        noise_family=noise.family if noise is not None else "unknown",
        noise_param=noise.param if noise is not None else "",
        z_norm=z_norm,
        err=err,
        err_normalized=err / z_norm if not degenerate else math.nan,
        bound_l_t=ell,
        t=float(t),
        sharp_est=sharp,
        violated=violated,
        degenerate=degenerate,
        iterations=int(sol.iterations),
        converged=bool(sol.converged),
        probe_margin=probe,
    )

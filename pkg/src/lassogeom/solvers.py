"""First-order solvers for the constrained, l2 and squared-l2 lasso.

Every solver returns a :class:`Solution` carrying an optimality residual
that can be recomputed independently with the ``*_certificate`` functions.
For the l1 norm the first-order iterate is finished by an active-set
refinement: on the detected support with fixed signs the problem is smooth,
and a few Newton (or linear-algebra) steps reach machine precision. The
refined point is accepted only if its certificate passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import ProblemInstance
from .regularizers import L1, Nuclear, Regularizer

__all__ = [
    "SolveConfig",
    "Solution",
    "ConvergenceError",
    "operator_norm",
    "l2_lasso_objective",
    "l22_lasso_objective",
    "error_objective",
    "l2_lasso_certificate",
    "l22_lasso_certificate",
    "constrained_certificate",
    "solve_l2_lasso",
    "solve_l22_lasso",
    "solve_constrained",
    "proximal_denoise",
]


class ConvergenceError(RuntimeError):
    """Raised when a solver exhausts its iteration budget.

    ``solution`` holds the last iterate and its residuals.
    """

    def __init__(self, msg, solution):
        super().__init__(msg)
        self.solution = solution


@dataclass(frozen=True)
class SolveConfig:
    max_iter: int = 200_000
    obj_tol: float = 1e-10  # relative objective change over one window
    opt_tol: float = 1e-7
    window: int = 50
    step_safety: float = 0.95
    raise_on_failure: bool = True

    def __post_init__(self):
        if self.max_iter < 1 or self.window < 1:
            raise ValueError("max_iter and window must be >= 1")
        if not (self.obj_tol > 0 and self.opt_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.step_safety < 1:
            raise ValueError("step_safety must lie in (0, 1)")


@dataclass
class Solution:
    x: np.ndarray
    objective: float
    iterations: int
    residual: Optional[float]
    r: np.ndarray  # A x - y
    converged: bool
    nonunique: bool = False
    zero_residual: bool = False
    history: list = field(default_factory=list, repr=False)
    dual: Optional[np.ndarray] = field(default=None, repr=False)  # zero-residual certificate


def _check_inputs(inst: ProblemInstance, f: Regularizer, par: float, name: str):
    if f.n != inst.n:
        raise ValueError(f"regularizer acts on length {f.n}, instance has n={inst.n}")
    if not np.all(np.isfinite(inst.A)) or not np.all(np.isfinite(inst.y)):
        raise ValueError("instance data contain NaN or Inf")
    if not (np.isfinite(par) and par >= 0):
        raise ValueError(f"{name} must be finite and nonnegative")


def operator_norm(A, iters: int = 200, seed: int = 0) -> float:
    """Spectral norm of ``A`` by power iteration on ``A^T A``."""
    A = np.asarray(A, dtype=float)
    v = np.random.default_rng(seed).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        if abs(nw - est) <= 1e-12 * nw:
            break
        est = nw
    return math.sqrt(np.linalg.norm(A.T @ (A @ v)))


def l2_lasso_objective(inst, f, lam, x) -> float:
    """``||y - A x|| + (lam / sqrt(m)) f(x)``."""
    return float(np.linalg.norm(inst.y - inst.A @ x) + lam / math.sqrt(inst.m) * f.value(x))


def l22_lasso_objective(inst, f, tau, x) -> float:
    """``0.5 ||y - A x||^2 + (tau / sqrt(m)) f(x)``."""
    r = inst.y - inst.A @ x
    return float(0.5 * r @ r + tau / math.sqrt(inst.m) * f.value(x))


def error_objective(inst, f, lam, w) -> float:
    """The l2-lasso objective written in the error ``w = x - x0``.

    ``||A w - z|| + (lam / sqrt(m)) (f(x0 + w) - f(x0))``.
    """
    mu = lam / math.sqrt(inst.m)
    return float(np.linalg.norm(inst.A @ w - inst.z) + mu * (f.value(inst.x0 + w) - f.value(inst.x0)))


_ZERO_RES = 1e-12


def _support_tol(f):
    return 0.0 if isinstance(f, L1) else 1e-9


def l2_lasso_certificate(inst, f, lam, x, a=None) -> Optional[float]:
    """Optimality residual of ``x`` for the l2-lasso.

    With ``r = A x - y != 0`` this is ``dist(-(sqrt(m)/lam) A^T u, df(x))``
    for ``u = r/||r||`` (``||A^T u||`` when ``lam == 0``). When ``r``
    vanishes the loss is not differentiable and optimality needs a dual
    vector ``a`` with ``||a|| <= 1`` and ``-A^T a in (lam/sqrt(m)) df(x)``;
    given such an ``a`` the residual is ``max(||a|| - 1, 0) +
    dist(-(sqrt(m)/lam) A^T a, df(x))``, otherwise None is returned.
    """
    r = inst.A @ x - inst.y
    nr = np.linalg.norm(r)
    if nr <= _ZERO_RES * max(1.0, np.linalg.norm(inst.y)):
        if a is None or lam == 0:
            return None
        a = np.asarray(a, dtype=float)
        g = inst.A.T @ a
        return max(np.linalg.norm(a) - 1.0, 0.0) + f.dist_subdiff(
            x, -math.sqrt(inst.m) / lam * g, _support_tol(f))
    g = inst.A.T @ (r / nr)
    if lam == 0:
        return float(np.linalg.norm(g))
    return f.dist_subdiff(x, -math.sqrt(inst.m) / lam * g, _support_tol(f))


def l22_lasso_certificate(inst, f, tau, x) -> float:
    """dist(-(sqrt(m)/tau) A^T r, df(x)); ``||A^T r||`` when ``tau == 0``."""
    g = inst.A.T @ (inst.A @ x - inst.y)
    if tau == 0:
        return float(np.linalg.norm(g))
    return f.dist_subdiff(x, -math.sqrt(inst.m) / tau * g, _support_tol(f))


def constrained_certificate(inst, f, budget, x, step=None):
    """Return ``(feasible, fixed_point_residual)`` for the constrained lasso.

    The residual is ``||x - P(x - eta A^T r)|| / eta`` with ``P`` the
    projection onto ``{f <= budget}``.
    """
    if step is None:
        step = 1.0 / operator_norm(inst.A) ** 2
    g = inst.A.T @ (inst.A @ x - inst.y)
    feas = f.value(x) <= budget + 1e-9
    res = np.linalg.norm(x - f.project_ball(x - step * g, budget)) / step
    return bool(feas), float(res)


# --- l1 active-set refinements ------------------------------------------------

def _refine_l2_l1(inst, mu, x):
    """Newton on the support of ``x`` with signs held fixed; None on failure."""
    S = np.flatnonzero(x)
    if S.size == 0 or S.size >= inst.m:
        return None
    A_S, y = inst.A[:, S], inst.y
    s = np.sign(x[S])
    xs = x[S].copy()

    def phi(v):
        return np.linalg.norm(A_S @ v - y) + mu * s @ v

    val = phi(xs)
    for _ in range(50):
        r = A_S @ xs - y
        nr = np.linalg.norm(r)
        if nr == 0:
            return None
        u = r / nr
        grad = A_S.T @ u + mu * s
        if np.linalg.norm(grad) <= 1e-15 * (1 + mu):
            break
        B = A_S - np.outer(u, u @ A_S)
        H = B.T @ B / nr
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            return None
        dec = grad @ step
        if not dec > 0:
            break
        t = 1.0
        while t > 1e-12:
            cand = xs - t * step
            cval = phi(cand)
            if cval <= val - 0.25 * t * dec or abs(cval - val) <= 1e-16 * abs(val):
                break
            t *= 0.5
        else:
            break
        if np.allclose(cand, xs, rtol=0, atol=1e-16):
            xs = cand
            break
        xs, val = cand, cval
    if np.any(np.sign(xs) != s):
        return None
    out = np.zeros_like(x)
    out[S] = xs
    return out


def _refine_interpolating_l1(inst, mu, x):
    """Refinement for the regime where the l2-lasso interpolates (r = 0).

    Solves ``A_S x_S = y`` on the support of ``x`` and builds the
    minimum-norm dual vector ``a`` with ``A_S^T a = -mu sign(x_S)``.
    Returns ``(x, a)`` or None when the pattern is inconsistent.
    """
    S = np.flatnonzero(x)
    if S.size == 0 or S.size > inst.m:
        return None
    A_S = inst.A[:, S]
    s = np.sign(x[S])
    xs, *_ = np.linalg.lstsq(A_S, inst.y, rcond=None)
    if np.linalg.norm(A_S @ xs - inst.y) > _ZERO_RES * max(1.0, np.linalg.norm(inst.y)):
        return None
    if np.any(np.sign(xs) != s):
        return None
    a, *_ = np.linalg.lstsq(A_S.T, -mu * s, rcond=None)
    out = np.zeros_like(x)
    out[S] = xs
    return out, a


def _basis_pursuit_l1(inst, mu):
    """Candidates ``(x, a)`` from ``min ||x||_1 s.t. A x = y`` (HiGHS dual simplex).

    When the square-root lasso interpolates, its solution is a basis
    pursuit solution. The LP equality multipliers, scaled by ``mu``, and the
    minimum-norm dual on the LP support are both offered; the caller keeps
    whichever certifies.
    """
    from scipy.optimize import linprog

    A, y, n = inst.A, inst.y, inst.n
    res = linprog(np.ones(2 * n), A_eq=np.hstack([A, -A]), b_eq=y, bounds=(0, None),
                  method="highs-ds")
    if res.status != 0:
        return []
    x = res.x[:n] - res.x[n:]
    x[np.abs(x) <= 1e-12 * max(1.0, np.abs(x).max())] = 0.0
    nu = np.asarray(res.eqlin.marginals, dtype=float)
    out = [(x, -mu * nu), (x, mu * nu)]
    ref = _refine_interpolating_l1(inst, mu, x)
    if ref is not None:
        out.insert(0, ref)
    return out


def _refine_l22_l1(inst, mu, x):
    S = np.flatnonzero(x)
    if S.size == 0 or S.size > inst.m:
        return None
    A_S = inst.A[:, S]
    s = np.sign(x[S])
    try:
        xs = np.linalg.solve(A_S.T @ A_S, A_S.T @ inst.y - mu * s)
    except np.linalg.LinAlgError:
        return None
    if np.any(np.sign(xs) != s):
        return None
    out = np.zeros_like(x)
    out[S] = xs
    return out


def _refine_constrained_l1(inst, budget, x):
    S = np.flatnonzero(x)
    if S.size == 0 or S.size > inst.m:
        return None
    A_S = inst.A[:, S]
    s = np.sign(x[S])
    k = S.size
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = A_S.T @ A_S
    K[:k, k] = s
    K[k, :k] = s
    rhs = np.concatenate([A_S.T @ inst.y, [budget]])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        return None
    xs, nu = sol[:k], sol[k]
    if nu < 0 or np.any(np.sign(xs) != s):
        return None
    out = np.zeros_like(x)
    out[S] = xs
    return out


# --- solvers ------------------------------------------------------------------

def _window_converged(hist, tol):
    if len(hist) < 2:
        return False
    prev, cur = hist[-2], hist[-1]
    return abs(prev - cur) <= tol * max(1.0, abs(cur))


def _least_squares(inst):
    x, _, rank, _ = np.linalg.lstsq(inst.A, inst.y, rcond=None)
    return x, rank < inst.n


def solve_l2_lasso(inst: ProblemInstance, f: Regularizer, lam: float,
                   cfg: SolveConfig = SolveConfig(), x_init=None) -> Solution:
    """Minimize ``||y - A x|| + (lam/sqrt(m)) f(x)`` (square-root lasso).

    Primal-dual splitting on ``max_{||a|| <= 1} a^T (A x - y) + mu f(x)``
    with step sizes ``tau = sigma = step_safety / ||A||``.
    """
    _check_inputs(inst, f, lam, "lambda")
    A, y, m = inst.A, inst.y, inst.m
    mu = lam / math.sqrt(m)
    if lam == 0:
        x, nonunique = _least_squares(inst)
        r = A @ x - y
        return Solution(x, l2_lasso_objective(inst, f, lam, x), 0,
                        l2_lasso_certificate(inst, f, lam, x), r, True, nonunique,
                        zero_residual=bool(np.linalg.norm(r) <= _ZERO_RES * max(1, np.linalg.norm(y))))
    L = operator_norm(A) * 1.01
    tau = sigma = cfg.step_safety / L
    x = np.zeros(inst.n) if x_init is None else np.array(x_init, dtype=float)
    xbar = x.copy()
    a = np.zeros(m)
    hist = []
    best = None
    it = 0
    is_l1 = isinstance(f, L1)
    tried_bp = False
    while it < cfg.max_iter:
        for _ in range(cfg.window):
            a = a + sigma * (A @ xbar - y)
            na = np.linalg.norm(a)
            if na > 1:
                a /= na
            x_new = f.prox(tau * mu, x - tau * (A.T @ a))
            xbar = 2 * x_new - x
            x = x_new
        it += cfg.window
        obj = l2_lasso_objective(inst, f, lam, x)
        hist.append(obj)
        cand, dual = x, a
        if is_l1:
            ref = _refine_l2_l1(inst, mu, x)
            if ref is not None and l2_lasso_objective(inst, f, lam, ref) <= obj + 1e-12 * abs(obj):
                cand = ref
            else:
                ref = _refine_interpolating_l1(inst, mu, x)
                if ref is not None and l2_lasso_objective(inst, f, lam, ref[0]) <= obj + 1e-12 * abs(obj):
                    cand, dual = ref
        res = l2_lasso_certificate(inst, f, lam, cand, dual)
        if res is not None and res <= cfg.opt_tol:
            best = (cand, res, dual)
            break
        if is_l1 and not tried_bp and np.linalg.norm(A @ x - y) <= 1e-3 * np.linalg.norm(y):
            # near-interpolating iterate: try the exact basis pursuit solution once
            tried_bp = True
            for xb, ab in _basis_pursuit_l1(inst, mu):
                rb = l2_lasso_certificate(inst, f, lam, xb, ab)
                if (rb is not None and rb <= cfg.opt_tol
                        and l2_lasso_objective(inst, f, lam, xb) <= obj + 1e-12 * abs(obj)):
                    best = (xb, rb, ab)
                    break
            if best is not None:
                break
        if res is None and _window_converged(hist, cfg.obj_tol):
            best = (cand, None, dual)
            break
    if best is None:
        r = A @ x - y
        sol = Solution(x, l2_lasso_objective(inst, f, lam, x), it,
                       l2_lasso_certificate(inst, f, lam, x), r, False, history=hist)
        if cfg.raise_on_failure:
            raise ConvergenceError(
                f"l2-lasso did not converge in {it} iterations (residual {sol.residual!r})", sol)
        return sol
    xf, res, dual = best
    r = A @ xf - y
    zero = bool(np.linalg.norm(r) <= _ZERO_RES * max(1.0, np.linalg.norm(y)))
    return Solution(xf, l2_lasso_objective(inst, f, lam, xf), it, res, r, True,
                    zero_residual=zero, history=hist, dual=dual if zero else None)


def _fista(inst, f, objective, prox_step, x0, cfg, certificate, refine):
    """Monotone FISTA with function-value restart; shared by two solvers."""
    A, y = inst.A, inst.y
    L2 = operator_norm(A) ** 2 * 1.01
    eta = 1.0 / L2 if L2 > 0 else 1.0
    x = x0.copy()
    fx = objective(x)
    yk = x.copy()
    theta = 1.0
    hist = [fx]
    it = 0
    while it < cfg.max_iter:
        for _ in range(cfg.window):
            x_new = prox_step(yk - eta * (A.T @ (A @ yk - y)), eta)
            f_new = objective(x_new)
            if f_new > fx + 4e-16 * abs(fx):
                # restart: drop momentum and take a plain proximal-gradient
                # step from x, which cannot increase the objective
                theta = 1.0
                x_new = prox_step(x - eta * (A.T @ (A @ x - y)), eta)
                f_new = objective(x_new)
                yk = x_new.copy()
            else:
                theta_new = (1 + math.sqrt(1 + 4 * theta * theta)) / 2
                yk = x_new + ((theta - 1) / theta_new) * (x_new - x)
                theta = theta_new
            x, fx = x_new, f_new
        it += cfg.window
        hist.append(fx)
        cand = x
        if refine is not None:
            ref = refine(x)
            if ref is not None and objective(ref) <= fx + 1e-12 * max(1.0, abs(fx)):
                cand = ref
        res = certificate(cand, eta)
        if res <= cfg.opt_tol:
            return cand, res, it, hist, True
    return x, certificate(x, eta), it, hist, False


def solve_l22_lasso(inst: ProblemInstance, f: Regularizer, tau: float,
                    cfg: SolveConfig = SolveConfig(), x_init=None) -> Solution:
    """Minimize ``0.5 ||y - A x||^2 + (tau/sqrt(m)) f(x)`` by accelerated
    proximal gradient."""
    _check_inputs(inst, f, tau, "tau")
    mu = tau / math.sqrt(inst.m)
    if tau == 0:
        x, nonunique = _least_squares(inst)
        return Solution(x, l22_lasso_objective(inst, f, tau, x), 0,
                        l22_lasso_certificate(inst, f, tau, x), inst.A @ x - inst.y, True, nonunique)
    x0 = np.zeros(inst.n) if x_init is None else np.array(x_init, dtype=float)
    refine = (lambda v: _refine_l22_l1(inst, mu, v)) if isinstance(f, L1) else None
    x, res, it, hist, ok = _fista(
        inst, f,
        objective=lambda v: l22_lasso_objective(inst, f, tau, v),
        prox_step=lambda v, eta: f.prox(eta * mu, v),
        x0=x0, cfg=cfg,
        certificate=lambda v, eta: l22_lasso_certificate(inst, f, tau, v),
        refine=refine)
    sol = Solution(x, l22_lasso_objective(inst, f, tau, x), it, res, inst.A @ x - inst.y, ok,
                   history=hist)
    if not ok and cfg.raise_on_failure:
        raise ConvergenceError(f"l2^2-lasso did not converge in {it} iterations", sol)
    return sol


def solve_constrained(inst: ProblemInstance, f: Regularizer, budget: float,
                      cfg: SolveConfig = SolveConfig(), x_init=None) -> Solution:
    """Minimize ``||y - A x||`` subject to ``f(x) <= budget``.

    Runs projected accelerated gradient on the squared loss, which has the
    same minimizers over a convex set. The reported objective is the
    unsquared residual norm.
    """
    _check_inputs(inst, f, 0.0, "budget")
    if not (np.isfinite(budget) and budget >= 0):
        raise ValueError("budget must be finite and nonnegative")
    A, y = inst.A, inst.y
    if budget == 0:
        x = np.zeros(inst.n)
        return Solution(x, float(np.linalg.norm(y)), 0, 0.0, -y.copy(), True)
    x0 = np.zeros(inst.n) if x_init is None else f.project_ball(x_init, budget)
    refine = (lambda v: _refine_constrained_l1(inst, budget, v)) if isinstance(f, L1) else None

    def certificate(v, eta):
        feas, res = constrained_certificate(inst, f, budget, v, eta)
        return res if feas else math.inf

    def objective(v):
        r = A @ v - y
        return 0.5 * float(r @ r)

    x, res, it, hist, ok = _fista(
        inst, f, objective=objective,
        prox_step=lambda v, eta: f.project_ball(v, budget),
        x0=x0, cfg=cfg, certificate=certificate, refine=refine)
    r = A @ x - y
    sol = Solution(x, float(np.linalg.norm(r)), it, res, r, ok, history=hist)
    if not ok and cfg.raise_on_failure:
        raise ConvergenceError(f"constrained lasso did not converge in {it} iterations", sol)
    return sol


def proximal_denoise(f: Regularizer, lam: float, sigma: float, y) -> np.ndarray:
    """argmin_x 0.5 ||y - x||^2 + lam sigma f(x), in closed form."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return f.prox(lam * sigma, y)

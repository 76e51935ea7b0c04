"""The l1 and nuclear norms: values, proximal maps, ball projections and
distances to (scaled) subdifferentials.

Vectors of length ``n = d*d`` are identified with ``d x d`` matrices by
row-major reshaping when the nuclear norm is in use.
"""

from __future__ import annotations

import numpy as np

from .model import SignalModel

__all__ = [
    "Regularizer",
    "L1",
    "Nuclear",
    "SubdiffGeometry",
    "value",
    "shrink",
    "prox",
    "project_simplex",
    "project_l1_ball",
    "dist_to_scaled_subdiff",
]


def shrink(chi, lam):
    """Soft threshold: move ``chi`` toward zero by ``lam``, stopping at 0."""
    if np.any(np.asarray(lam) < 0):
        raise ValueError("threshold must be nonnegative")
    chi = np.asarray(chi, dtype=float)
    out = np.sign(chi) * np.maximum(np.abs(chi) - lam, 0.0)
    return float(out) if out.ndim == 0 else out


def project_simplex(v, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{x >= 0, sum x = radius}``.

    Sort-based; O(n log n).
    """
    v = np.asarray(v, dtype=float)
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if radius == 0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - radius
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def project_l1_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection onto ``{x : ||x||_1 <= radius}``."""
    v = np.asarray(v, dtype=float)
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if np.abs(v).sum() <= radius:
        return v.copy()
    return np.sign(v) * project_simplex(np.abs(v), radius)


class Regularizer:
    """Base for the norms the estimators use."""

    name = "abstract"

    def __init__(self, n: int):
        self.n = int(n)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected vectors of length {self.n}, got shape {x.shape}")
        return x

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"

    def geometry(self, signal: SignalModel) -> "SubdiffGeometry":
        return SubdiffGeometry(self, signal)


class L1(Regularizer):
    name = "l1"

    def value(self, x) -> float:
        return float(np.abs(self._check(x)).sum())

    def prox(self, theta: float, v) -> np.ndarray:
        if theta < 0:
            raise ValueError("theta must be nonnegative")
        return shrink(self._check(v), theta)

    def project_ball(self, v, radius: float) -> np.ndarray:
        return project_l1_ball(self._check(v), radius)

    def dist_subdiff(self, x, v, tol: float = 0.0) -> float:
        """dist(v, df(x)) at an arbitrary point; ``|x_i| <= tol`` counts as zero."""
        x, v = self._check(x), self._check(v)
        on = np.abs(x) > tol
        r_on = v[on] - np.sign(x[on])
        r_off = np.maximum(np.abs(v[~on]) - 1.0, 0.0)
        return float(np.sqrt(r_on @ r_on + r_off @ r_off))

    def min_subgradient_norm(self, signal: SignalModel) -> float:
        return float(np.sqrt(signal.k))


class Nuclear(Regularizer):
    name = "nuclear"

    def __init__(self, d: int):
        super().__init__(d * d)
        self.d = int(d)

    def __repr__(self):
        return f"Nuclear(d={self.d})"

    def _mat(self, x) -> np.ndarray:
        x = self._check(x)
        return x.reshape(x.shape[:-1] + (self.d, self.d))

    def value(self, x) -> float:
        return float(np.linalg.svd(self._mat(x), compute_uv=False).sum())

    def prox(self, theta: float, v) -> np.ndarray:
        if theta < 0:
            raise ValueError("theta must be nonnegative")
        U, s, Vt = np.linalg.svd(self._mat(v))
        return ((U * shrink(s, theta)) @ Vt).ravel()

    def project_ball(self, v, radius: float) -> np.ndarray:
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        U, s, Vt = np.linalg.svd(self._mat(v))
        if s.sum() <= radius:
            return np.asarray(v, dtype=float).copy()
        return ((U * project_simplex(s, radius)) @ Vt).ravel()

    def dist_subdiff(self, x, v, tol: float = 1e-10) -> float:
        """dist(v, d||.||_*(X)); singular values below ``tol * s_max`` count as zero."""
        X, Vm = self._mat(x), self._mat(v)
        U, s, Wt = np.linalg.svd(X)
        r = int(np.sum(s > tol * max(s[0], 1e-300))) if s[0] > 0 else 0
        return _nuclear_dist(U[:, :r], Wt[:r].T, 1.0, Vm[None])[0]

    def min_subgradient_norm(self, signal: SignalModel) -> float:
        return float(np.sqrt(signal.r))


def _nuclear_dist(U, V, lam, H):
    """Batched dist(H_i, lam * d||X||_*) for X with tangent factors U, V."""
    d = H.shape[-1]
    Pu = np.eye(d) - U @ U.T
    Pv = np.eye(d) - V @ V.T
    Hperp = Pu @ H @ Pv
    E = H - Hperp - lam * (U @ V.T)
    s = np.linalg.svd(Hperp, compute_uv=False)
    tail = np.maximum(s - lam, 0.0)
    return np.sqrt(np.einsum("...ij,...ij->...", E, E) + (tail * tail).sum(-1))


class SubdiffGeometry:
    """A regularizer paired with the point x0 where its subdifferential is taken.

    Caches the sign pattern (l1) or tangent-space projectors (nuclear) so
    repeated distance evaluations are cheap.
    """

    def __init__(self, reg: Regularizer, signal: SignalModel):
        if reg.n != signal.n:
            raise ValueError("regularizer and signal dimensions differ")
        self.reg = reg
        self.signal = signal
        if isinstance(reg, L1):
            if signal.kind != "sparse":
                raise ValueError("the l1 geometry needs a sparse signal")
            on = np.zeros(signal.n, dtype=bool)
            on[signal.support] = True
            self._on = on
            self._signs = signal.signs
            assert np.all(self._signs != 0)
        elif isinstance(reg, Nuclear):
            if signal.kind != "lowrank" or signal.d != reg.d:
                raise ValueError("the nuclear geometry needs a matching low-rank signal")
            U, V = signal.U, signal.V
            d = reg.d
            self._UVt = U @ V.T
            self._Pu = np.eye(d) - U @ U.T
            self._Pv = np.eye(d) - V @ V.T
        else:
            raise TypeError(f"unsupported regularizer {reg!r}")

    @property
    def n(self) -> int:
        return self.reg.n

    @property
    def min_subgradient_norm(self) -> float:
        """Smallest Euclidean norm of an element of df(x0)."""
        return self.reg.min_subgradient_norm(self.signal)

    def dist(self, lam: float, h) -> np.ndarray | float:
        """dist(h, lam * df(x0)); ``h`` may be a batch of shape (N, n)."""
        return self.dist_and_proj(lam, h)[0]

    def dist_and_proj(self, lam: float, h):
        """Distance and the nearest point ``s*`` of ``lam * df(x0)``."""
        if lam < 0:
            raise ValueError("lambda must be nonnegative")
        h = self.reg._check(h)
        if isinstance(self.reg, L1):
            s = np.clip(h, -lam, lam)
            s[..., self._on] = lam * self._signs
        else:
            d = self.reg.d
            H = h.reshape(h.shape[:-1] + (d, d))
            Hperp = self._Pu @ H @ self._Pv
            W, sv, Zt = np.linalg.svd(Hperp)
            S = (W * np.minimum(sv, lam)[..., None, :]) @ Zt + lam * self._UVt
            s = S.reshape(h.shape)
        diff = h - s
        dist = np.sqrt(np.einsum("...i,...i->...", diff, diff))
        if dist.ndim == 0:
            dist = float(dist)
        return dist, s

    def dist_squared_batch(self, lam, h) -> np.ndarray:
        """dist^2 for a batch ``h`` (N, n) and one or more lambdas.

        Returns shape (N,) for scalar ``lam`` and (len(lam), N) otherwise.
        """
        fn = self.dist_squared_fn(h)
        lams = np.atleast_1d(np.asarray(lam, dtype=float))
        out = np.stack([fn(lj) for lj in lams])
        return out[0] if np.ndim(lam) == 0 else out

    def dist_squared_fn(self, h):
        """Precompute the lambda-free parts for a fixed batch ``h`` (N, n).

        Returns ``lam -> dist^2(h_i, lam * df(x0))`` as an (N,) array; ``lam``
        may also be an (N,) array giving each sample its own scale. Used
        wherever many lambdas share the same samples (Monte Carlo hot path,
        common-random-number calibration, cone distances).
        """
        h = np.atleast_2d(self.reg._check(h))
        if isinstance(self.reg, L1):
            hon = h[:, self._on] * self._signs
            # zeroed support columns shrink to 0 for any lam >= 0
            habs = np.abs(h)
            habs[:, self._on] = 0.0
            buf = np.empty_like(habs)

            def fn(lam):
                lam = _column(lam)
                a = hon - lam
                np.subtract(habs, lam, out=buf)
                np.maximum(buf, 0.0, out=buf)
                return np.einsum("ij,ij->i", a, a) + np.einsum("ij,ij->i", buf, buf)
        else:
            d = self.reg.d
            H = h.reshape(-1, d, d)
            Hperp = self._Pu @ H @ self._Pv
            Ht = H - Hperp
            sv = np.linalg.svd(Hperp, compute_uv=False)
            tt = np.einsum("ijk,ijk->i", Ht, Ht)
            cross = np.einsum("ijk,jk->i", Ht, self._UVt)
            r = self.signal.r

            def fn(lam):
                lam = _column(lam)
                tail = np.maximum(sv - lam, 0.0)
                lam = lam[:, 0]
                return tt - 2 * lam * cross + lam * lam * r + (tail * tail).sum(-1)
        return fn


def _column(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lambda must be nonnegative")
    return lam.reshape(-1, 1)


def value(f: Regularizer, x) -> float:
    return f.value(x)


def prox(f: Regularizer, theta: float, v) -> np.ndarray:
    """argmin_x 0.5 ||v - x||^2 + theta f(x)."""
    return f.prox(theta, v)


def dist_to_scaled_subdiff(g: SubdiffGeometry, lam: float, h) -> float:
    return g.dist(lam, h)

"""Problem data: structured signals, Gaussian measurement instances, noise.

All randomness goes through :class:`SeedSpec`, which maps a (master seed,
stream index) pair onto an independent Philox stream. Trial ``i`` of an
experiment always draws from stream ``i`` so results never depend on how
trials are scheduled across workers. Normal variates come from numpy's
ziggurat sampler (``Generator.standard_normal``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "SeedSpec",
    "SignalModel",
    "NoiseSpec",
    "ProblemInstance",
    "generate_sparse_signal",
    "generate_lowrank_signal",
    "generate_instance",
    "sample_standard_gaussian",
]

_ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class SeedSpec:
    """A reproducible random stream: ``(seed, stream)`` -> one Philox generator.

    ``child(i)`` derives a sub-stream, used e.g. for Monte Carlo chunks.
    """

    seed: int
    stream: tuple = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        s = self.stream
        if isinstance(s, (int, np.integer)):
            s = (int(s),)
        object.__setattr__(self, "stream", tuple(int(v) for v in s))

    def child(self, index: int) -> "SeedSpec":
        return SeedSpec(self.seed, self.stream + (int(index),))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=self.stream)
        return np.random.Generator(np.random.Philox(ss))


def _as_seed(seed) -> SeedSpec:
    if isinstance(seed, SeedSpec):
        return seed
    return SeedSpec(int(seed))


@dataclass(frozen=True, eq=False)
class SignalModel:
    """The structured unknown x0.

    ``kind`` is ``"sparse"`` or ``"lowrank"``. Sparse signals carry the
    support and the values on it; low-rank ones carry orthonormal factors
    ``U, V`` (d x r) and the positive singular values, with ``n = d**2`` and
    the vector form being the row-major flattening of ``U diag(s) V^T``.
    """

    kind: str
    n: int
    support: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    U: Optional[np.ndarray] = None
    V: Optional[np.ndarray] = None
    singular_values: Optional[np.ndarray] = None
    x0: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind == "sparse":
            sup = np.asarray(self.support, dtype=np.intp)
            vals = np.asarray(self.values, dtype=float)
            k = sup.size
            if not 1 <= k <= self.n:
                raise ValueError(f"need 1 <= k <= n, got k={k}, n={self.n}")
            if sup.shape != vals.shape:
                raise ValueError("support and values must have the same length")
            if np.unique(sup).size != k or sup.min() < 0 or sup.max() >= self.n:
                raise ValueError("support indices must be distinct and in [0, n)")
            if np.any(vals == 0):
                raise ValueError("values on the support must be nonzero")
            order = np.argsort(sup)
            sup, vals = sup[order], vals[order]
            object.__setattr__(self, "support", sup)
            object.__setattr__(self, "values", vals)
            x0 = np.zeros(self.n)
            x0[sup] = vals
        elif self.kind == "lowrank":
            U = np.asarray(self.U, dtype=float)
            V = np.asarray(self.V, dtype=float)
            s = np.asarray(self.singular_values, dtype=float)
            d, r = U.shape
            if d * d != self.n or V.shape != (d, r) or s.shape != (r,):
                raise ValueError("inconsistent low-rank factor shapes")
            if not 1 <= r <= d:
                raise ValueError(f"need 1 <= r <= d, got r={r}, d={d}")
            eye = np.eye(r)
            if (np.abs(U.T @ U - eye).max() > _ORTHO_TOL
                    or np.abs(V.T @ V - eye).max() > _ORTHO_TOL):
                raise ValueError("U and V must have orthonormal columns")
            if np.any(s <= 0):
                raise ValueError("singular values must be strictly positive")
            x0 = ((U * s) @ V.T).ravel()
        else:
            raise ValueError(f"unknown signal kind {self.kind!r}")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)

    @property
    def k(self) -> int:
        if self.kind != "sparse":
            raise AttributeError("k is only defined for sparse signals")
        return int(self.support.size)

    @property
    def d(self) -> int:
        if self.kind != "lowrank":
            raise AttributeError("d is only defined for low-rank signals")
        return int(self.U.shape[0])

    @property
    def r(self) -> int:
        if self.kind != "lowrank":
            raise AttributeError("r is only defined for low-rank signals")
        return int(self.U.shape[1])

    @property
    def signs(self) -> np.ndarray:
        return np.sign(self.values)

    @classmethod
    def sparse(cls, x0) -> "SignalModel":
        """Wrap an explicit vector; the support is its nonzero pattern."""
        x0 = np.asarray(x0, dtype=float).ravel()
        sup = np.flatnonzero(x0)
        return cls("sparse", x0.size, support=sup, values=x0[sup])

    @classmethod
    def lowrank(cls, X0, rank: Optional[int] = None, rtol: float = 1e-10) -> "SignalModel":
        """Wrap an explicit square matrix via its SVD."""
        X0 = np.asarray(X0, dtype=float)
        d = X0.shape[0]
        if X0.shape != (d, d):
            raise ValueError("low-rank signals must be square matrices")
        U, s, Vt = np.linalg.svd(X0)
        if rank is None:
            rank = int(np.sum(s > rtol * max(s[0], 1e-300)))
        return cls("lowrank", d * d, U=U[:, :rank], V=Vt[:rank].T,
                   singular_values=s[:rank])


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Noise distribution, always drawn independently of the matrix.

    ``family`` is one of ``gaussian`` (param = sigma), ``student_t``
    (params = nu, scale), ``uniform`` (param = a, support [-a, a]) or
    ``fixed`` (a given vector).
    """

    family: str
    sigma: float = 1.0
    nu: float = 3.0
    scale: float = 1.0
    a: float = 1.0
    vector: Optional[np.ndarray] = None

    def __post_init__(self):
        fam = self.family
        if fam == "gaussian":
            if not self.sigma > 0:
                raise ValueError("gaussian noise needs sigma > 0")
        elif fam == "student_t":
            if not (self.nu > 0 and self.scale > 0):
                raise ValueError("student_t noise needs nu > 0 and scale > 0")
        elif fam == "uniform":
            if not self.a > 0:
                raise ValueError("uniform noise needs a > 0")
        elif fam == "fixed":
            if self.vector is None:
                raise ValueError("fixed noise needs a vector")
            v = np.array(self.vector, dtype=float).ravel()
            v.setflags(write=False)
            object.__setattr__(self, "vector", v)
        else:
            raise ValueError(f"unknown noise family {fam!r}")

    @classmethod
    def gaussian(cls, sigma: float) -> "NoiseSpec":
        return cls("gaussian", sigma=sigma)

    @classmethod
    def student_t(cls, nu: float, scale: float = 1.0) -> "NoiseSpec":
        return cls("student_t", nu=nu, scale=scale)

    @classmethod
    def uniform(cls, a: float) -> "NoiseSpec":
        return cls("uniform", a=a)

    @classmethod
    def fixed(cls, vector) -> "NoiseSpec":
        return cls("fixed", vector=vector)

    @property
    def param(self) -> str:
        """Short parameter label used in CSV output."""
        if self.family == "gaussian":
            return repr(float(self.sigma))
        if self.family == "student_t":
            return f"{float(self.nu)!r}/{float(self.scale)!r}"
        if self.family == "uniform":
            return repr(float(self.a))
        return f"len{self.vector.size}"

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        if self.family == "gaussian":
            return self.sigma * rng.standard_normal(m)
        if self.family == "student_t":
            return self.scale * rng.standard_t(self.nu, size=m)
        if self.family == "uniform":
            return rng.uniform(-self.a, self.a, size=m)
        if self.vector.size != m:
            raise ValueError(f"fixed noise has length {self.vector.size}, expected {m}")
        return self.vector.copy()


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Measurements ``y = A x0 + z``."""

    A: np.ndarray
    x0: np.ndarray
    z: np.ndarray
    y: np.ndarray = field(init=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        x0 = np.array(self.x0, dtype=float).ravel()
        z = np.array(self.z, dtype=float).ravel()
        if A.ndim != 2 or A.shape != (z.size, x0.size):
            raise ValueError(f"shape mismatch: A {A.shape}, x0 {x0.shape}, z {z.shape}")
        if A.shape[0] < 2:
            raise ValueError("need m >= 2 measurements")
        y = A @ x0 + z
        for arr in (A, x0, z, y):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


def generate_sparse_signal(n: int, k: int, seed) -> SignalModel:
    """Random k-sparse unit-norm vector with a uniformly drawn support."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = _as_seed(seed).generator()
    support = rng.choice(n, size=k, replace=False)
    values = rng.standard_normal(k)
    while np.any(values == 0):
        values = rng.standard_normal(k)
    values /= np.linalg.norm(values)
    return SignalModel("sparse", n, support=support, values=values)


def generate_lowrank_signal(d: int, r: int, seed) -> SignalModel:
    """Random rank-r d x d matrix with unit Frobenius norm.

    Factors come from QR of Gaussian matrices; singular values are
    ``|N(0,1)|`` draws scaled to unit Euclidean norm.
    """
    if not 1 <= r <= d:
        raise ValueError(f"need 1 <= r <= d, got r={r}, d={d}")
    rng = _as_seed(seed).generator()
    U, _ = np.linalg.qr(rng.standard_normal((d, r)))
    V, _ = np.linalg.qr(rng.standard_normal((d, r)))
    s = np.abs(rng.standard_normal(r))
    while np.any(s == 0):
        s = np.abs(rng.standard_normal(r))
    s /= np.linalg.norm(s)
    return SignalModel("lowrank", d * d, U=U, V=V, singular_values=s)


def generate_instance(signal, m: int, noise: NoiseSpec, seed) -> ProblemInstance:
    """Draw ``A`` with i.i.d. N(0, 1/m) entries and noise, independently.

    ``A`` and ``z`` use separate sub-streams (children 0 and 1), so scaling
    a Gaussian noise level rescales ``z`` exactly while ``A`` stays put.
    """
    if m < 2:
        raise ValueError(f"need m >= 2, got m={m}")
    x0 = signal.x0 if isinstance(signal, SignalModel) else np.asarray(signal, float).ravel()
    seed = _as_seed(seed)
    A = seed.child(0).generator().standard_normal((m, x0.size)) / np.sqrt(m)
    z = noise.sample(m, seed.child(1).generator())
    return ProblemInstance(A, x0, z)


def sample_standard_gaussian(dim: int, seed) -> np.ndarray:
    """i.i.d. N(0,1) vector of length ``dim``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return _as_seed(seed).generator().standard_normal(dim)

import itertools

import numpy as np
import pytest

from lassogeom import L1, Nuclear, SignalModel


def l1_geometry(x0):
    x0 = np.asarray(x0, dtype=float)
    return L1(x0.size).geometry(SignalModel.sparse(x0))


def nuclear_geometry(X0, rank=None):
    X0 = np.asarray(X0, dtype=float)
    return Nuclear(X0.shape[0]).geometry(SignalModel.lowrank(X0, rank))


def grid_minimize(obj, center, half_width=2.0, step=0.05, radius=3, shrink=4, min_step=1e-8,
                  chunk=200_000):
    """Exhaustive box search, then local grid refinement.

    Grid nodes of the box are aligned to multiples of the step so that zero
    coordinates are representable. The local phase evaluates the
    ``(2 radius + 1)^n`` grid around the incumbent, re-centres until the
    incumbent is interior, then divides the step by ``shrink``. ``obj`` maps
    a (N, n) batch to (N,).
    """
    center = np.asarray(center, dtype=float)
    n = center.size
    lo = np.floor((center - half_width) / step) * step
    hi = np.ceil((center + half_width) / step) * step
    axes = [np.arange(l, h + step / 2, step) for l, h in zip(lo, hi)]
    best_x, best_v = None, np.inf
    rest = np.array(list(itertools.product(*axes[1:]))) if n > 1 else np.zeros((1, 0))
    sections = min(len(axes[0]), max(1, len(axes[0]) * len(rest) // chunk))
    for a0 in np.array_split(axes[0], sections):
        pts = np.column_stack([np.repeat(a0, len(rest)), np.tile(rest, (len(a0), 1))])
        vals = obj(pts)
        i = int(np.argmin(vals))
        if vals[i] < best_v:
            best_v, best_x = float(vals[i]), pts[i]
    offsets = np.array(list(itertools.product(range(-radius, radius + 1), repeat=n)), float)
    while step > min_step:
        pts = best_x + step * offsets
        vals = obj(pts)
        i = int(np.argmin(vals))
        if vals[i] < best_v:
            best_v, best_x = float(vals[i]), pts[i]
            if np.max(np.abs(offsets[i])) == radius:
                continue
        step /= shrink
    return best_x, best_v


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from lassogeom import L1, Nuclear, SignalModel, dist_to_scaled_subdiff, prox, shrink, value
from lassogeom.regularizers import project_l1_ball, project_simplex

from conftest import l1_geometry, nuclear_geometry

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_values():
    assert value(L1(3), [1, -2, 0]) == 3
    assert math.isclose(value(Nuclear(2), np.diag([3.0, 4.0]).ravel()), 7.0, rel_tol=1e-14)
    th = 0.7
    Q = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    assert math.isclose(value(Nuclear(2), (2.5 * Q).ravel()), 5.0, rel_tol=1e-14)
    with pytest.raises(ValueError):
        value(L1(3), [1.0, 2.0])


def test_shrink_cases():
    assert shrink(2.5, 1) == 1.5
    assert shrink(0.3, 1) == 0.0
    assert shrink(-2, 0.5) == -1.5
    with pytest.raises(ValueError):
        shrink(1.0, -0.1)


def test_prox_examples():
    assert np.array_equal(prox(L1(2), 1.0, [3.0, -0.2]), [2.0, 0.0])
    v = np.array([0.3, -1.2, 4.0])
    assert np.array_equal(prox(L1(3), 0.0, v), v)
    out = prox(Nuclear(2), 1.0, np.diag([3.0, 0.5]).ravel())
    assert np.allclose(out, np.diag([2.0, 0.0]).ravel(), atol=1e-14)


def test_l1_distance_example_against_grid():
    g = l1_geometry([1.0, 0.0, 0.0])
    h = np.array([0.5, 2.0, -0.5])
    assert math.isclose(dist_to_scaled_subdiff(g, 1.0, h), math.sqrt(1.25), rel_tol=1e-14)
    grid = np.linspace(-1, 1, 2001)
    s2, s3 = np.meshgrid(grid, grid, indexing="ij")
    brute = np.sqrt((h[0] - 1) ** 2 + (h[1] - s2) ** 2 + (h[2] - s3) ** 2).min()
    assert abs(brute - math.sqrt(1.25)) < 1e-6


def test_distance_at_zero_lambda_is_norm(rng):
    for g in (l1_geometry([0.0, 2.0, -1.0, 0.0]), nuclear_geometry(np.diag([1.0, 0.5, 0.0]))):
        h = rng.standard_normal(g.n)
        assert math.isclose(g.dist(0.0, h), np.linalg.norm(h), rel_tol=1e-14)


def test_nuclear_distance_example():
    g = nuclear_geometry(np.diag([1.0, 0.0]))
    H = np.diag([1.0, 2.0]).ravel()
    assert math.isclose(g.dist(1.0, H), 1.0, rel_tol=1e-12)
    w = np.linspace(-1, 1, 200001)
    brute = np.sqrt((1 - 1) ** 2 + (2 - w) ** 2).min()
    assert abs(brute - 1.0) < 1e-9


def test_distance_rejects_bad_input():
    g = l1_geometry([1.0, 0.0])
    with pytest.raises(ValueError):
        g.dist(-1.0, np.zeros(2))
    with pytest.raises(ValueError):
        g.dist(1.0, np.zeros(3))


@pytest.mark.parametrize("lam", [0.0, 0.3, 1.0, 2.0, 3.5])
def test_l1_distance_vs_brute_projection(lam, rng):
    # support {0}, sign -1; the set is {-lam} x [-lam, lam]^2
    g = l1_geometry([-2.0, 0.0, 0.0])
    for _ in range(5):
        h = 2 * rng.standard_normal(3)
        grid = np.linspace(-lam, lam, 801)
        s2, s3 = np.meshgrid(grid, grid, indexing="ij")
        brute = np.sqrt((h[0] + lam) ** 2 + (h[1] - s2) ** 2 + (h[2] - s3) ** 2).min()
        assert abs(g.dist(lam, h) - brute) < 1e-3


@pytest.mark.parametrize("lam", [0.2, 1.0, 2.5])
def test_nuclear_distance_vs_brute_projection(lam, rng):
    # rank one in 2x2: df = {u v^T + w u_perp v_perp^T : |w| <= 1}
    a, b = rng.uniform(0, 2 * math.pi, 2)
    u = np.array([math.cos(a), math.sin(a)])
    v = np.array([math.cos(b), math.sin(b)])
    up, vp = np.array([-u[1], u[0]]), np.array([-v[1], v[0]])
    g = nuclear_geometry(1.7 * np.outer(u, v))
    ws = np.linspace(-1, 1, 4001)
    for _ in range(5):
        H = 2 * rng.standard_normal((2, 2))
        S = lam * (np.outer(u, v)[None] + ws[:, None, None] * np.outer(up, vp)[None])
        brute = np.sqrt(((H[None] - S) ** 2).sum(axis=(1, 2))).min()
        assert abs(g.dist(lam, H.ravel()) - brute) < 1e-3


def test_batch_matches_single(rng):
    for g in (l1_geometry(rng.standard_normal(6) * (rng.random(6) < 0.5) + [1, 0, 0, 0, 0, 0]),
              nuclear_geometry(rng.standard_normal((4, 2)) @ rng.standard_normal((2, 4)))):
        H = rng.standard_normal((7, g.n))
        single = np.array([g.dist(1.3, h) for h in H])
        assert np.allclose(g.dist(1.3, H), single, rtol=1e-13)
        assert np.allclose(g.dist_squared_batch(1.3, H), single ** 2, rtol=1e-12)
        lams = rng.uniform(0, 3, 7)
        per = g.dist_squared_fn(H)(lams)
        assert np.allclose(per, [g.dist(l, h) ** 2 for l, h in zip(lams, H)], rtol=1e-11)


@settings(max_examples=60, deadline=None)
@given(arrays(float, 5, elements=finite), arrays(float, 5, elements=finite),
       st.floats(0, 5))
def test_l1_distance_is_1_lipschitz(h1, h2, lam):
    g = l1_geometry([0.0, 1.0, 0.0, -3.0, 0.0])
    assert abs(g.dist(lam, h1) - g.dist(lam, h2)) <= np.linalg.norm(h1 - h2) * (1 + 1e-12) + 1e-12


@settings(max_examples=40, deadline=None)
@given(arrays(float, 9, elements=finite), arrays(float, 9, elements=finite),
       st.floats(0, 5))
def test_nuclear_distance_is_1_lipschitz(h1, h2, lam):
    g = nuclear_geometry(np.diag([2.0, 1.0, 0.0]))
    assert abs(g.dist(lam, h1) - g.dist(lam, h2)) <= np.linalg.norm(h1 - h2) * (1 + 1e-9) + 1e-9


@settings(max_examples=60, deadline=None)
@given(arrays(float, 6, elements=finite), arrays(float, 6, elements=finite))
def test_subgradient_inequality_l1(h, w):
    x0 = np.array([1.5, 0.0, -0.2, 0.0, 0.0, 4.0])
    g = l1_geometry(x0)
    _, s = g.dist_and_proj(1.0, h)
    f = L1(6)
    assert f.value(x0 + w) >= f.value(x0) + s @ w - 1e-9


@settings(max_examples=40, deadline=None)
@given(arrays(float, 9, elements=finite), arrays(float, 9, elements=finite))
def test_subgradient_inequality_nuclear(h, w):
    X0 = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [1.0, 3.0, 0.0]])
    g = nuclear_geometry(X0, rank=2)
    _, s = g.dist_and_proj(1.0, h)
    f = Nuclear(3)
    assert f.value(X0.ravel() + w) >= f.value(X0.ravel()) + s @ w - 1e-9


@settings(max_examples=60, deadline=None)
@given(arrays(float, 7, elements=finite), st.floats(0.01, 5))
def test_prox_optimality_l1(v, theta):
    f = L1(7)
    p = f.prox(theta, v)
    assert f.dist_subdiff(p, (v - p) / theta) * theta <= 1e-9


@settings(max_examples=40, deadline=None)
@given(arrays(float, 9, elements=finite), st.floats(0.01, 5))
def test_prox_optimality_nuclear(v, theta):
    f = Nuclear(3)
    p = f.prox(theta, v)
    assert f.dist_subdiff(p, (v - p) / theta, tol=1e-9) * theta <= 1e-9 * max(1.0, np.abs(v).max())


@pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0])
def test_max_min_exchange(alpha, rng):
    # max over ||w|| = alpha of min over s in lam df of (h - s)^T w equals alpha * dist
    lam = 1.2
    g = l1_geometry([0.8, 0.0])
    th = np.linspace(0, 2 * math.pi, 3601)
    W = alpha * np.column_stack([np.cos(th), np.sin(th)])
    s2 = np.linspace(-lam, lam, 1201)
    S = np.column_stack([np.full_like(s2, lam), s2])
    for _ in range(4):
        h = 2 * rng.standard_normal(2)
        inner = ((h[None, :] - S) @ W.T).min(axis=0)  # min over s for every w
        assert abs(inner.max() - alpha * g.dist(lam, h)) < 2e-3 * alpha


def test_projections(rng):
    v = rng.standard_normal(20)
    p = project_simplex(v, 2.0)
    assert np.all(p >= 0) and math.isclose(p.sum(), 2.0, rel_tol=1e-12)
    b = project_l1_ball(v, 1.5)
    assert math.isclose(np.abs(b).sum(), 1.5, rel_tol=1e-12)
    inside = v / np.abs(v).sum()
    assert np.array_equal(project_l1_ball(inside, 1.5), inside)
    X = Nuclear(4).project_ball(v[:16], 1.0)
    assert Nuclear(4).value(X) <= 1.0 + 1e-12


@settings(max_examples=50, deadline=None)
@given(arrays(float, 6, elements=finite), st.floats(0.1, 10))
def test_l1_ball_projection_is_nearest(v, radius):
    p = project_l1_ball(v, radius)
    assert np.abs(p).sum() <= radius * (1 + 1e-12)
    # variational inequality: (v - p)^T (q - p) <= 0 for feasible q
    rng = np.random.default_rng(0)
    for _ in range(20):
        q = rng.standard_normal(6)
        q = q / np.abs(q).sum() * radius * rng.random()
        assert (v - p) @ (q - p) <= 1e-9 * max(1.0, np.abs(v).max()) ** 2


def test_geometry_requires_matching_signal():
    with pytest.raises(ValueError):
        L1(3).geometry(SignalModel.sparse([1.0, 0.0]))
    with pytest.raises(ValueError):
        L1(4).geometry(SignalModel.lowrank(np.eye(2)))

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from lassogeom import (BoundVacuousError, L1, OutOfRangeError, SeedSpec, bound_curve, calibrate,
                       constrained_bound, gamma_m, generate_sparse_signal, regularized_bound,
                       sharp_estimate, t_for_failure_probability)
from lassogeom.bounds import PROBABILITY_POSITIVE_T, BoundInput

# sqrt(2) Gamma((m+1)/2) / Gamma(m/2) at 40 significant digits
GAMMA_REF = {2: 1.2533141373155002512, 3: 1.5957691216057307118, 10: 3.0843277597998638995,
             140: 11.811049742992783298, 1000: 31.614871896980080088,
             10**6: 999.99975000003125004}


def test_gamma_closed_forms():
    assert abs(gamma_m(2) - math.sqrt(math.pi / 2)) <= 1e-12
    assert abs(gamma_m(3) - 2 * math.sqrt(2) / math.sqrt(math.pi)) <= 1e-12


@pytest.mark.parametrize("m", sorted(GAMMA_REF))
def test_gamma_reference(m):
    assert math.isclose(gamma_m(m), GAMMA_REF[m], rel_tol=1e-13)


def test_gamma_identities_wide_range():
    ms = np.arange(2, 10**6 + 1)
    g = gamma_m(ms)
    assert np.all(g <= np.sqrt(ms))
    assert np.all(g * g > np.sqrt(ms) * np.sqrt(ms - 1))


def test_gamma_matches_monte_carlo():
    G = np.random.default_rng(0).standard_normal((200_000, 7))
    norms = np.linalg.norm(G, axis=1)
    assert abs(norms.mean() - gamma_m(7)) < 4 * norms.std() / math.sqrt(len(norms))


def test_regularized_examples():
    rep = regularized_bound(401, 100, 2, 1)
    assert math.isclose(rep.value, 3.0, rel_tol=1e-14)
    assert rep.flavor == "regularized"
    assert math.isclose(regularized_bound(401, 121, 2, 1).value, 2 * 13 / 7, rel_tol=1e-14)
    rep16 = regularized_bound(10**4, 100, 16, 1)
    assert math.isclose(rep16.probability, 1 - 5 * math.exp(-8), rel_tol=1e-14)
    assert abs(rep16.probability - 0.99832) < 1e-5


def test_regularized_errors():
    with pytest.raises(BoundVacuousError):
        regularized_bound(101, 100, 0.1, 1)
    with pytest.raises(OutOfRangeError):
        regularized_bound(401, 100, 0.0, 1)
    with pytest.raises(OutOfRangeError):
        regularized_bound(401, 100, 20 - 10, 1)  # t at the boundary
    with pytest.raises(ValueError):
        regularized_bound(1, 0.0, 0.1, 1)
    with pytest.raises(ValueError):
        regularized_bound(401, 100, 1, -1)


def test_constrained_examples():
    rep = constrained_bound(401, 100, 2, 1)
    assert math.isclose(rep.value, math.sqrt(401) / 20 * 12 / 8, rel_tol=1e-14)
    assert abs(rep.value - 1.5019) < 1e-4
    assert math.isclose(rep.probability, 1 - 6 * math.exp(-4 / 26), rel_tol=1e-14)
    reg = regularized_bound(401, 100, 2, 1).value
    assert math.isclose(rep.value, reg / 2 * math.sqrt(401 / 400), rel_tol=1e-14)
    with pytest.raises(OutOfRangeError):
        constrained_bound(401, 100, math.sqrt(400) - 10, 1)


def test_sharp_examples():
    assert math.isclose(sharp_estimate(140, 100, 1), 10 / math.sqrt(40), rel_tol=1e-14)
    assert sharp_estimate(140, 0.0, 3.0) == 0.0
    with pytest.raises(OutOfRangeError):
        sharp_estimate(140, 140, 1)


def test_sharp_below_regularized_for_all_t():
    slack = math.sqrt(139) - 10
    for t in np.linspace(1e-6, slack * (1 - 1e-9), 200):
        assert sharp_estimate(140, 100, 1) <= regularized_bound(140, 100, t, 1).value


def test_probability_threshold():
    assert PROBABILITY_POSITIVE_T == pytest.approx(math.sqrt(32 * math.log(5)))
    assert abs(PROBABILITY_POSITIVE_T - 7.17) < 0.01
    below = regularized_bound(10**4, 1.0, PROBABILITY_POSITIVE_T * 0.99, 1)
    above = regularized_bound(10**4, 1.0, PROBABILITY_POSITIVE_T * 1.01, 1)
    assert not below.probability_meaningful and above.probability_meaningful
    t = t_for_failure_probability(0.05)
    assert math.isclose(5 * math.exp(-t * t / 32), 0.05, rel_tol=1e-13)
    assert abs(t - 12.14) < 0.01


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 10**5), st.floats(0, 1e4), st.floats(1e-3, 50), st.floats(1e-3, 10))
def test_monotonicity(m, delta, t, z):
    slack = math.sqrt(m - 1) - math.sqrt(delta)
    assume(0 < t < slack * 0.9)
    base = regularized_bound(m, delta, t, z).value
    assert base > 0
    assert regularized_bound(m, delta, t * 1.05, z).value > base
    d2 = (math.sqrt(delta) + 0.01 * (slack - t)) ** 2
    assert regularized_bound(m, d2, t, z).value > base
    assert regularized_bound(m + 1, delta, t, z).value < base


def test_bound_input_t_max():
    b = BoundInput(401, 100, 2, 1)
    assert b.t_max == 10.0


def test_bound_curve_shape_and_vacuous():
    sig = generate_sparse_signal(340, 10, SeedSpec(0))
    g = L1(340).geometry(sig)
    rep = calibrate(g, 140)
    lams = np.linspace(0.1, 5, 200)
    curve = bound_curve(g, 140, 1.0, 1.0, lams)
    assert len(curve) == 200
    for p in curve:
        inside = rep.contains(p.lam)
        if not inside:
            assert p.vacuous
    denom = np.array([p.denominator for p in curve])
    i = int(np.argmax(denom))
    assert np.all(np.diff(denom[: i + 1]) > 0) and np.all(np.diff(denom[i:]) < 0)
    vals = [(p.value, p.lam) for p in curve if not p.vacuous]
    best_grid = lams[np.argmin(np.abs(lams - rep.lam_best))]
    assert min(vals)[1] == best_grid
    with pytest.raises(ValueError):
        bound_curve(g, 140, 1.0, 1.0, [])
    with pytest.raises(ValueError):
        bound_curve(g, 140, 1.0, 0.0, lams)


def test_bound_curve_monte_carlo_vs_closed_form():
    sig = generate_sparse_signal(340, 10, SeedSpec(0))
    g = L1(340).geometry(sig)
    lams = np.linspace(0.8, 3.0, 12)
    exact = bound_curve(g, 140, 1.0, 1.0, lams)
    mc = bound_curve(g, 140, 1.0, 1.0, lams, method="monte_carlo", samples=40_000,
                     seed=SeedSpec(6))
    for a, b in zip(exact, mc):
        assert abs(a.delta - b.delta) <= 3 * b.stderr

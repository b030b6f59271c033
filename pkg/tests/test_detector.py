import numpy as np
import pytest
from hypothesis import assume, given, seed, settings
from hypothesis import strategies as st

from chargecheck.detector import (Decision, SocPair, Support, Thresholds, posterior_curve,
                                  posterior_h1, ternary_decision, ternary_decisions,
                                  update_prior, weighted_bonus, xd_dist_h1, xd_mixture)
from chargecheck.errors import DomainError
from chargecheck.predictor import EmpiricalDist, dist_stats
from chargecheck.priors import UndeclaredModel

from oracles import brute_force_posterior, brute_force_xd_h1

W = 0.1


def slab(p1=0.5, bins=10, lo_bins=0):
    return UndeclaredModel(p1, lo_bins * W, bins * W)


def random_dist(rng, n_bins=20, first=100):
    m = rng.random(n_bins)
    m[rng.random(n_bins) < 0.2] = 0.0
    m[0] = m[-1] = 0.5 + m[0]
    return EmpiricalDist(W, first, m / m.sum(), 1000)


def point(c):
    return EmpiricalDist(W, c, [1.0], 1)


def test_point_mass_correlation():
    d = xd_dist_h1(point(50), slab(bins=4))
    assert d.first_bin == 46 and d.last_bin == 49
    assert d.masses == pytest.approx([0.25] * 4)


def test_one_bin_slab_is_shift():
    xc = random_dist(np.random.default_rng(0))
    d = xd_dist_h1(xc, slab(bins=1))
    assert d.first_bin == xc.first_bin - 1
    assert np.allclose(d.masses, xc.masses, atol=1e-15)


@pytest.mark.parametrize("s", range(5))
@pytest.mark.parametrize("lo_bins", [0, 3])
def test_correlation_matches_brute_force(s, lo_bins):
    xc = random_dist(np.random.default_rng(s))
    model = slab(bins=10 + lo_bins, lo_bins=lo_bins)
    d = xd_dist_h1(xc, model)
    ref = brute_force_xd_h1(xc.first_bin, xc.masses, lo_bins, 10 + lo_bins)
    for j in range(d.first_bin - 3, d.last_bin + 4):
        assert d.mass_at(j) == pytest.approx(ref.get(j, 0.0), abs=1e-12)


def test_grid_mismatch_rejected():
    with pytest.raises(DomainError):
        xd_dist_h1(point(50), UndeclaredModel(0.5, 0, 0.35 + 0.05 / 3))


def test_h1_support_and_mixture():
    xc = random_dist(np.random.default_rng(1), first=200)
    model = slab(p1=0.3, bins=10)
    h1 = xd_dist_h1(xc, model)
    assert h1.first_bin == xc.first_bin - 10
    assert h1.last_bin == xc.last_bin - 1
    mix = xd_mixture(xc, model)
    # mixture support on the grid is [min x_c - x_u_max, max x_c]
    assert (mix.first_bin, mix.last_bin) == (xc.first_bin - 10, xc.last_bin)
    assert abs(mix.masses.sum() - 1) < 1e-9
    j = np.arange(mix.first_bin, mix.last_bin + 1)
    assert np.allclose(mix.masses, 0.3 * h1.mass_at(j) + 0.7 * xc.mass_at(j), atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 30), st.integers(1, 12), st.integers(0, 5),
       st.floats(0, 1))
@seed(23)
def test_posterior_matches_enumeration(s, n_bins, m, lo_bins, p1):
    xc = random_dist(np.random.default_rng(s), n_bins=n_bins, first=60)
    model = slab(p1=p1, bins=m + lo_bins, lo_bins=lo_bins)
    curve = posterior_curve(xc, model)
    for j in curve.bins:
        ref = brute_force_posterior(xc.first_bin, xc.masses, lo_bins, m + lo_bins, p1, int(j))
        got = posterior_h1(xc, model, (j + 0.5) * W)
        assert got.xd_bin_index == j
        assert got.support_flag is Support.INSIDE
        if ref is None:
            assert got.posterior_h1 == p1
        else:
            assert got.posterior_h1 == pytest.approx(ref, abs=1e-12)
        assert curve.at_bins(j) == got.posterior_h1


def test_equal_likelihoods_give_prior():
    # flat x_c over a long range: f_h1 equals f_h0 well inside it
    xc = EmpiricalDist(W, 100, np.full(50, 0.02), 50)
    out = posterior_h1(xc, slab(p1=0.37, bins=5), 125.5 * W)
    assert out.f_h0_at_xd == pytest.approx(out.f_h1_at_xd)
    assert out.posterior_h1 == pytest.approx(0.37)


def test_below_x_c_but_reachable_is_certain():
    xc = random_dist(np.random.default_rng(2), first=100)
    for p1 in (0.01, 0.5, 0.99):
        out = posterior_h1(xc, slab(p1=p1, bins=10), 95.5 * W)
        assert out.f_h0_at_xd == 0 and out.f_h1_at_xd > 0
        assert out.posterior_h1 == 1.0 and out.decision is Decision.H1
        assert out.support_flag is Support.INSIDE


def test_negative_x_d_is_trivial_detection():
    out = posterior_h1(point(100), slab(bins=350), -2.0)
    assert out.posterior_h1 == 1.0


def test_out_of_support_rules():
    xc = random_dist(np.random.default_rng(3), first=100)
    below = posterior_h1(xc, slab(bins=10), 80 * W)
    assert below.support_flag is Support.BELOW and below.posterior_h1 == 1.0
    above = posterior_h1(xc, slab(bins=10), 500 * W)
    assert above.support_flag is Support.ABOVE and above.posterior_h1 == 0.0
    assert above.decision is Decision.H0
    curve = posterior_curve(xc, slab(bins=10))
    assert list(curve.at_bins([80, 500])) == [1.0, 0.0]


def test_above_h1_reach_is_zero():
    xc = random_dist(np.random.default_rng(4), first=100)
    out = posterior_h1(xc, slab(bins=10), (xc.last_bin + 0.5) * W)
    assert out.f_h1_at_xd == 0 and out.f_h0_at_xd > 0
    assert out.posterior_h1 == 0.0


def test_interior_zero_over_zero_falls_back_to_prior():
    xc = EmpiricalDist(W, 100, np.r_[0.5, np.zeros(20), 0.5], 2)
    out = posterior_h1(xc, slab(p1=0.2, bins=2), 110.5 * W)
    assert out.f_h0_at_xd == 0 and out.f_h1_at_xd == 0
    assert out.posterior_h1 == 0.2 and out.support_flag is Support.INSIDE


@pytest.mark.parametrize("s", range(4))
def test_posterior_at_mode_not_above_half(s):
    xc = random_dist(np.random.default_rng(10 + s))
    mode = dist_stats(xc).mode
    assert posterior_h1(xc, slab(0.5, 7), mode).posterior_h1 <= 0.5


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.01, 0.98), st.floats(0.001, 0.01))
@seed(29)
def test_posterior_increasing_in_p1(s, p1, dp):
    xc = random_dist(np.random.default_rng(s))
    x_d = (xc.first_bin + 3.5) * W
    a = posterior_h1(xc, slab(p1, 8), x_d)
    b = posterior_h1(xc, slab(p1 + dp, 8), x_d)
    assume(a.f_h1_at_xd > 0 and a.f_h0_at_xd > 0)
    assert b.posterior_h1 > a.posterior_h1


def test_bin_width_invariance():
    # same masses on a coarser grid give the same posterior at the matching bin
    rng = np.random.default_rng(6)
    fine = random_dist(rng)
    coarse = EmpiricalDist(1.0, fine.first_bin, fine.masses, 1000)
    a = posterior_h1(fine, UndeclaredModel(0.5, 0, 1.0), (fine.first_bin + 4.5) * 0.1)
    b = posterior_h1(coarse, UndeclaredModel(0.5, 0, 10.0), fine.first_bin + 4.5)
    assert a.posterior_h1 == pytest.approx(b.posterior_h1, abs=1e-15)


@pytest.mark.parametrize("p,expected", [(0.0, Decision.H0), (0.4, Decision.H0),
                                        (0.4000001, Decision.E), (0.5, Decision.E),
                                        (0.6, Decision.E), (0.6000001, Decision.H1),
                                        (1.0, Decision.H1)])
def test_ternary_decision(p, expected):
    assert ternary_decision(p) is expected


@pytest.mark.parametrize("p", [-0.01, 1.01, float("nan")])
def test_ternary_decision_domain(p):
    with pytest.raises(DomainError):
        ternary_decision(p)


@given(st.floats(0, 1))
@seed(31)
def test_decision_partition(p):
    d = ternary_decision(p)
    in_h0, in_h1 = p <= 0.4, p > 0.6
    assert (d is Decision.H0) == in_h0 and (d is Decision.H1) == in_h1
    assert (d is Decision.E) == (not in_h0 and not in_h1)
    assert ternary_decisions([p])[0] == {Decision.H0: 0, Decision.H1: 1, Decision.E: 2}[d]


def test_custom_thresholds():
    t = Thresholds(0.2, 0.9)
    assert ternary_decision(0.3, t) is Decision.E
    with pytest.raises(DomainError):
        Thresholds(0.7, 0.6)


@pytest.mark.parametrize("post,lam,expected", [(0.8, 1.0, 0.8), (0.8, 0.0, 0.0),
                                               (0.5, 0.9, 0.45)])
def test_update_prior(post, lam, expected):
    assert update_prior(post, lam) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("post,g,expected", [(0.0, 40.0, 40.0), (1.0, 40.0, 0.0),
                                             (0.25, 100.0, 75.0)])
def test_weighted_bonus(post, g, expected):
    assert weighted_bonus(post, g) == expected


def test_update_and_bonus_domain():
    with pytest.raises(DomainError):
        update_prior(0.5, 1.5)
    with pytest.raises(DomainError):
        weighted_bonus(0.5, -1)


def test_soc_pair():
    s = SocPair(30.0, 12.5)
    assert s.x_d == 17.5
    s.check(35)
    with pytest.raises(DomainError):
        SocPair(36, 1).check(35)
    with pytest.raises(DomainError):
        SocPair(3, -1).check(35)


def test_nonfinite_x_d_rejected():
    with pytest.raises(DomainError):
        posterior_h1(point(10), slab(), float("nan"))

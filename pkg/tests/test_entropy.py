import numpy as np
import pytest
from hypothesis import given, strategies as st

from ibvpcheck import entropy as ent
from ibvpcheck.boundary import FORMS, flux_comparison
from ibvpcheck.flux import get_flux

reals = st.floats(-3, 3, allow_nan=False)


def test_sign_helpers_at_zero():
    assert ent.sgn(0.0) == 0.0
    assert ent.sgn_plus(0.0) == 0.0 and ent.sgn_minus(0.0) == 0.0
    assert ent.sgn_plus(2.0) == 1.0 and ent.sgn_minus(-2.0) == -1.0
    s = np.array([-2.0, 0.0, 3.0])
    np.testing.assert_array_equal(ent.pos_part(s) - ent.neg_part(s), s)
    np.testing.assert_array_equal(ent.sgn_plus(s) + ent.sgn_minus(s), ent.sgn(s))


def test_parse_sign_rejects_garbage():
    assert ent.parse_sign("+") == 1 and ent.parse_sign(-1) == -1
    with pytest.raises(ValueError):
        ent.parse_sign("up")


def test_interval_hull():
    assert ent.interval_hull(2.0, -1.0) == (-1.0, 2.0)
    with pytest.raises(ValueError):
        ent.interval_hull(np.nan, 0.0)
    assert ent.in_hull(0.5, 1.0, 0.0) and not ent.in_hull(1.5, 1.0, 0.0)


def test_kruzkov_flux_by_hand(burgers):
    p = ent.kruzkov_pair(burgers, 0.5)
    # sgn(2 - 0.5) (2 - 0.125)
    assert p.q(0.0, 0.3, 2.0) == pytest.approx(1.875)
    assert p.q(0.0, 0.3, -1.0) == pytest.approx(-(0.5 - 0.125))
    assert p.eta(-1.0) == 1.5


@pytest.mark.parametrize("name", ["burgers", "linear:1", "nonautonomous-demo"])
def test_catalog_pairs_verify(name):
    flux = get_flux(name)
    pairs = [ent.kruzkov_pair(flux, 0.3), ent.semi_kruzkov_pair(flux, -0.2, "+"),
             ent.semi_kruzkov_pair(flux, 0.1, "-"), ent.quadratic_pair(flux, 0.4),
             ent.smooth_abs_family(flux, 0.0, 50)]
    for p in pairs:
        rep = ent.verify_entropy_pair(p, samples=200)
        assert rep.passed, rep.as_dict()
    for bp in [ent.smoothed_semi_pair(flux, "+", 20), ent.smoothed_semi_pair(flux, "-", 20),
               ent.distance_pair_family(flux, 0.3, 10), ent.distance_pair_family(flux, -0.4)]:
        rep = ent.verify_boundary_pair(bp, samples=200)
        assert rep.passed, rep.as_dict()


def test_corrupted_pair_is_caught(burgers):
    good = ent.kruzkov_pair(burgers, 0.2)
    bad = ent.EntropyPair(good.eta, good.eta_prime, lambda t, x, u: 1.1 * good.q(t, x, u),
                          good.div_q, burgers, name="bad", k=good.k)
    rep = ent.verify_entropy_pair(bad, samples=200)
    assert rep.failed() == ["compatibility"]
    concave = ent.EntropyPair(lambda u: -np.asarray(u) ** 2, lambda u: -2 * np.asarray(u),
                              lambda t, x, u: -2.0 * np.asarray(u) ** 3 / 3.0,
                              lambda t, x, u: 0.0 * np.asarray(u), burgers, name="concave")
    assert "convexity" in ent.verify_entropy_pair(concave, samples=200).failed()


def test_boundary_pair_off_diagonal_caught(burgers):
    p = ent.smoothed_semi_pair(burgers, "+", 10)
    shifted = ent.BoundaryEntropyPair(lambda z, w: p.H(z, w) + 0.01, p.dH_dz, p.Q, p.div_Q, burgers)
    assert "diagonal_H" in ent.verify_boundary_pair(shifted, samples=100).failed()


@pytest.mark.parametrize("n", [10, 100, 1000])
def test_smoothed_semi_rate(n):
    z = np.linspace(-2, 2, 4001)
    for sign, part in (("+", ent.pos_part), ("-", ent.neg_part)):
        p = ent.smoothed_semi_pair(get_flux("burgers"), sign, n)
        err = np.abs(p.H(z, 0.3) - part(z - 0.3)).max()
        assert err <= 1.0 / n


@pytest.mark.parametrize("n", [10, 100, 1000])
def test_smooth_abs_rate(n):
    z = np.linspace(-2, 2, 4001)
    p = ent.smooth_abs_family(get_flux("burgers"), -0.7, n)
    assert np.abs(p.eta(z) - np.abs(z + 0.7)).max() <= n ** -0.5


def test_smooth_abs_second_derivative_matches_fd():
    z = np.linspace(-1, 1, 11)
    h = 1e-4
    p = ent.smooth_abs_family(get_flux("burgers"), 0.1, 20)
    fd = (p.eta(z + h) - 2 * p.eta(z) + p.eta(z - h)) / h ** 2
    np.testing.assert_allclose(ent.smooth_abs_second_derivative(z, 0.1, 20), fd, rtol=1e-5)


def test_quadratic_flux_matches_closed_form(burgers):
    # q = int_k^u 2(l - k) l dl for f = u^2/2
    k = 0.3
    u = np.linspace(-2, 2, 9)
    exact = 2 * (u ** 3 / 3 - k * u ** 2 / 2) - 2 * (k ** 3 / 3 - k ** 3 / 2)
    np.testing.assert_allclose(ent.quadratic_pair(burgers, k).q(0.0, 0.5, u), exact, atol=1e-12)


@pytest.mark.parametrize("name", ["burgers", "linear:1", "nonautonomous-demo"])
def test_three_forms_agree(name):
    flux = get_flux(name)
    rng = np.random.default_rng(4)
    n = 20_000
    t = rng.uniform(0, 1, n)
    x = rng.uniform(0, 1, n)
    z, w, k = rng.uniform(-2, 2, (3, n))
    ties = rng.random(n) < 0.1
    k[ties] = w[ties]
    vals = [flux_comparison(flux, t, x, z, w, k, form=f) for f in FORMS]
    for v in vals[1:]:
        assert np.abs(v - vals[0]).max() <= 1e-12


@given(reals, reals, st.floats(0, 1))
def test_zero_on_hull(w, k, theta):
    flux = get_flux("nonautonomous-demo")
    z = theta * w + (1 - theta) * k
    if not ent.in_hull(z, w, k):
        return  # rounding pushed z out
    for f in ("piecewise", "semi-sign"):
        assert flux_comparison(flux, 0.4, 0.6, z, w, k, form=f) == 0.0
    # the half-sum cancels only up to rounding
    assert abs(flux_comparison(flux, 0.4, 0.6, z, w, k, form="sign-average")) <= 1e-12


def test_unknown_form(burgers):
    with pytest.raises(ValueError):
        flux_comparison(burgers, 0, 0, 1, 0, 0, form="nope")


def test_distance_limit_flux_equals_flux_comparison():
    flux = get_flux("nonautonomous-demo")
    rng = np.random.default_rng(1)
    t, x = rng.uniform(0, 1, (2, 200))
    z, w = rng.uniform(-2, 2, (2, 200))
    k = 0.25
    p = ent.distance_pair_family(flux, k)
    np.testing.assert_allclose(p.Q(t, x, z, w), flux_comparison(flux, t, x, z, w, k), atol=1e-9)


def test_cumulative_path_matches_direct(burgers):
    # n >= 256 takes the grouped cumulative path
    rng = np.random.default_rng(2)
    u = rng.uniform(-2, 2, 600)
    p = ent.smooth_abs_family(burgers, 0.2, 30)
    batched = p.q(0.0, 0.5, u)
    one_by_one = np.array([p.q(0.0, 0.5, np.array([v]))[0] for v in u[:40]])
    np.testing.assert_allclose(batched[:40], one_by_one, atol=1e-10)


def test_shifted_limit_pair_cases(burgers):
    base = ent.kruzkov_pair(burgers, 0.0)
    p = ent.shifted_limit_pair(base, 0.0)
    assert p.H(0.5, 1.0) == 0.0          # between
    assert p.H(1.0, -1.0) == 1.0         # k separates
    assert p.H(2.0, 1.0) == pytest.approx(1.0)  # w separates


def test_smooth_abs_value_at_k(burgers):
    for n in (4, 100):
        assert ent.smooth_abs_family(burgers, 0.3, n).eta(0.3) == pytest.approx(n ** -0.5)


def test_distance_pair_limit_value(burgers):
    # w = 0, k = 1, u = 2: distance 1, flux f(2) - f(1)
    p = ent.distance_pair_family(burgers, 1.0)
    assert p.H(2.0, 0.0) == 1.0
    assert float(p.Q(0.0, 0.5, 2.0, 0.0)) == pytest.approx(1.5, abs=1e-10)
    assert ent.distance_to_hull(2.0, 0.0, 1.0)[0] == ent.distance_to_hull(2.0, 1.0, 0.0)[0]


def test_smoothed_semi_flux_limit(burgers):
    gaps = [abs(float(ent.smoothed_semi_pair(burgers, "+", n).Q(0.0, 0.5, 1.0, 0.0)) - 0.5)
            for n in (10, 100, 1000)]
    for g, n in zip(gaps, (10, 100, 1000)):
        assert g <= 1.0 / n


def test_shifted_family_needs_zero_at_k(burgers):
    with pytest.raises(ValueError):
        ent.shifted_pair_family(ent.quadratic_pair(burgers, 0.0), 0.5, 10)

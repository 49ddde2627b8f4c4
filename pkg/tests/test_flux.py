import numpy as np
import pytest

from ibvpcheck.flux import (FluxModel, extremum_on_interval, get_flux, lipschitz_norm)


@pytest.mark.parametrize("name", ["burgers", "linear:1", "linear:-2.5", "buckley-leverett",
                                  "buckley-leverett:0.3", "nonautonomous-demo"])
def test_catalog_derivatives_consistent(name):
    flux = get_flux(name)
    assert flux.derivative_mode == "analytic"
    flux.self_check(n=200)


def test_unknown_and_bad_names():
    with pytest.raises(ValueError, match="unknown flux"):
        get_flux("kdv")
    with pytest.raises(ValueError, match="bad flux parameter"):
        get_flux("linear:abc")


def test_wrong_derivative_rejected():
    with pytest.raises(ValueError, match="inconsistent"):
        FluxModel(f=lambda t, x, u: u ** 2, df_du=lambda t, x, u: u)


def test_missing_derivative_falls_back():
    flux = FluxModel(f=lambda t, x, u: np.sin(u))
    assert flux.derivative_mode == "finite-difference-fallback"
    u = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(flux.df_du(0.0, 0.0, u), np.cos(u), atol=1e-8)


def test_lipschitz_values():
    assert lipschitz_norm(get_flux("burgers"), 1.0, (0, 1), 1.0) == pytest.approx(1.0, rel=1e-6)
    assert lipschitz_norm(get_flux("burgers"), 1.0, (0, 1), 2.5) == pytest.approx(2.5, rel=1e-6)
    # sup of a(x)|u| with a = 1 + sin(2 pi x)/2 on |u| <= 1
    assert lipschitz_norm(get_flux("nonautonomous-demo"), 1.0, (0, 1), 1.0) == pytest.approx(1.5, rel=1e-3)
    sin_flux = FluxModel(f=lambda t, x, u: np.sin(u), df_du=lambda t, x, u: np.cos(u))
    assert lipschitz_norm(sin_flux, 1.0, (0, 1), 3.0) == pytest.approx(1.0, rel=1e-6)


def test_extremum_matches_dense_scan():
    rng = np.random.default_rng(3)
    lo = rng.uniform(-2, 1, 50)
    hi = lo + rng.uniform(0, 2, 50)

    def fun(u, rows):
        return np.sin(3 * u) + 0.1 * u

    vmax, _ = extremum_on_interval(fun, lo, hi, maximize=True)
    vmin, _ = extremum_on_interval(fun, lo, hi, maximize=False)
    dense = lo[:, None] + (hi - lo)[:, None] * np.linspace(0, 1, 20001)
    ref = fun(dense, None)
    assert np.all(vmax >= ref.max(axis=1) - 1e-9)
    assert np.all(vmin <= ref.min(axis=1) + 1e-9)

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ibvpcheck import _backend
from ibvpcheck.experiments import RIEMANN_FIXTURES, constant_state_problem, riemann_problem
from ibvpcheck.flux import get_flux
from ibvpcheck.solver import (Grid1D, IBVPProblem, SolverError, conservation_defects,
                              extract_trace, godunov_numflux, load_binary, solve)

needs_compiled = pytest.mark.skipif(_backend.compiled_kernels is None,
                                    reason="compiled kernels not built")


def oracle_flux(flux, t, x, uL, uR, n=20001):
    lam = np.linspace(min(uL, uR), max(uL, uR), n)
    vals = flux.f(t, x, lam)
    return vals.min() if uL <= uR else vals.max()


@pytest.mark.parametrize("name", ["burgers", "linear:-0.7", "buckley-leverett", "nonautonomous-demo"])
@given(uL=st.floats(-2, 2), uR=st.floats(-2, 2), t=st.floats(0, 1), x=st.floats(0, 1))
def test_godunov_flux_against_dense_scan(name, uL, uR, t, x):
    flux = get_flux(name)
    got = godunov_numflux(flux, t, x, uL, uR)
    ref = oracle_flux(flux, t, x, uL, uR)
    # the scan misses an interior extremum by O(h^2) at most
    assert abs(got - ref) <= 1e-7


def test_godunov_flux_consistent(burgers):
    u = np.linspace(-2, 2, 17)
    np.testing.assert_array_equal(godunov_numflux(burgers, 0.0, 0.5, u, u), 0.5 * u * u)


@needs_compiled
def test_backends_agree_on_flux():
    rng = np.random.default_rng(0)
    uL, uR = rng.uniform(-2, 2, (2, 500))
    x = rng.uniform(0, 1, 500)
    for name in ("burgers", "buckley-leverett", "nonautonomous-demo"):
        flux = get_flux(name)
        a = godunov_numflux(flux, 0.3, x, uL, uR, backend="python")
        b = godunov_numflux(flux, 0.3, x, uL, uR, backend="compiled")
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-13)


def test_constant_state_preserved():
    # u = 1 with matching data on both ends, 1000 fixed steps
    p = IBVPProblem(get_flux("burgers"), lambda x: 1.0 + 0 * x, lambda t: 1.0 + 0 * t,
                    lambda t: 1.0 + 0 * t, horizon=1000 * 0.002)
    f = solve(p, Grid1D(100), dt=0.002, store=False)
    assert f.times.size - 1 == 1000
    assert np.abs(f.values[-1] - 1.0).max() <= 1e-14


def test_constant_state_field_is_exactly_one(const_field):
    assert np.abs(const_field.values - 1.0).max() <= 1e-14


FIXTURES = [constant_state_problem()] + [riemann_problem(n) for n in RIEMANN_FIXTURES]


@pytest.mark.parametrize("problem", FIXTURES, ids=lambda p: p.name)
def test_maximum_principle(problem):
    lo, hi = problem.data_bound()
    f = solve(problem, Grid1D(200))
    assert f.values.min() >= lo - 1e-14 and f.values.max() <= hi + 1e-14


@pytest.mark.parametrize("problem", FIXTURES, ids=lambda p: p.name)
def test_conservation_telescopes(problem):
    f = solve(problem, Grid1D(150))
    assert conservation_defects(f).max() <= 1e-12


def test_maximum_principle_smooth(advection):
    f = solve(advection, Grid1D(128))
    assert f.values.min() >= 0.25 - 1e-14 and f.values.max() <= 0.75 + 1e-14


def test_fixed_dt_over_cfl_rejected(const_state):
    with pytest.raises(SolverError):
        solve(const_state, Grid1D(100), dt=0.1)


def test_bad_grid():
    with pytest.raises(ValueError):
        Grid1D(2)
    with pytest.raises(ValueError):
        Grid1D(10, cfl=1.5)


@needs_compiled
@pytest.mark.parametrize("name", ["inflow-shock", "sonic-left"])
def test_backends_give_same_field(name):
    p = riemann_problem(name)
    a = solve(p, Grid1D(120), backend="python")
    b = solve(p, Grid1D(120), backend="compiled")
    np.testing.assert_array_equal(a.times, b.times)
    np.testing.assert_allclose(a.values, b.values, rtol=0, atol=1e-13)


def test_upwind_advection_converges(advection):
    # u(T, x) = u0(x - T); first order, so the error halves with dx
    errs = []
    for m in (100, 200, 400):
        f = solve(advection, Grid1D(m), store=False)
        x = f.grid.centers
        exact = 0.5 + 0.25 * np.sin(2 * np.pi * (x - f.times[-1]))
        errs.append(np.abs(f.values[-1] - exact).mean())
    assert errs[1] < 0.6 * errs[0] and errs[2] < 0.6 * errs[1]


def test_trace_extraction(const_field):
    tr = extract_trace(const_field, "right")
    np.testing.assert_array_equal(tr.values, 1.0)
    rich = extract_trace(const_field, "left", richardson=True)
    np.testing.assert_allclose(rich.values, 1.0, atol=1e-15)


def test_binary_round_trip(tmp_path):
    f = solve(riemann_problem("inflow-shock"), Grid1D(40))
    path = tmp_path / "field.bin"
    f.save_binary(path)
    head, times, values = load_binary(path)
    assert head["cells"] == 40 and head["snapshots"] == f.times.size
    np.testing.assert_array_equal(times, f.times)
    np.testing.assert_array_equal(values, f.values)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError):
        load_binary(path)


def test_csv_round_trip(tmp_path):
    f = solve(riemann_problem("sonic-left"), Grid1D(16), store=True)
    path = tmp_path / "field.csv"
    f.to_csv(path)
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(rows[:, 2], f.values.ravel())
    f.trace_to_csv(tmp_path / "trace.csv")
    assert (tmp_path / "trace.csv").read_text().startswith("t,side,offset,value")

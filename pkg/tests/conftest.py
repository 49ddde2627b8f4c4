import numpy as np
import pytest
from hypothesis import settings

from ibvpcheck.experiments import constant_state_problem
from ibvpcheck.flux import get_flux
from ibvpcheck.solver import Grid1D, IBVPProblem, solve

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def burgers():
    return get_flux("burgers")


@pytest.fixture(scope="session")
def const_state():
    return constant_state_problem()


@pytest.fixture(scope="session")
def const_field(const_state):
    return solve(const_state, Grid1D(200))


def _u0(x):
    return 0.5 + 0.25 * np.sin(2.0 * np.pi * np.asarray(x, dtype=float))


@pytest.fixture(scope="session")
def advection():
    """f = u on (0, 1): u(t, x) = u0(x - t), inflow datum at 0, outflow at 1."""
    flux = get_flux("linear:1")
    return IBVPProblem(flux, _u0, lambda t: _u0(-np.asarray(t, dtype=float)),
                       lambda t: 0.0 * np.asarray(t, dtype=float), horizon=0.5, name="advection")


@pytest.fixture(scope="session")
def advection_exact():
    from ibvpcheck.residuals import SmoothSolution
    c = 2.0 * np.pi
    return SmoothSolution(lambda t, x: _u0(x - t),
                          lambda t, x: -0.25 * c * np.cos(c * (x - t)),
                          lambda t, x: 0.25 * c * np.cos(c * (x - t)), name="advection")

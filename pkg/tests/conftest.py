import math

import numpy as np
import pytest

from varevo import (
    EvolutionConfig,
    GainConfig,
    ProblemModel,
    brachistochrone,
    double_integrator,
    evolve,
    init_feedback_double_integrator,
    init_straightline_brachistochrone,
)

G = 10.0


def make_sled(with_constraint=False):
    """Brachistochrone dynamics with a running cost and a time-varying terminal cost.

    Every term of the control gradient is non-zero here, unlike the two
    benchmark problems.
    """

    def f(x, u, t):
        V, s, c = x[2], math.sin(u[0]), math.cos(u[0])
        return np.array([V * s, -V * c, G * c])

    def f_x(x, u, t):
        s, c = math.sin(u[0]), math.cos(u[0])
        return np.array([[0.0, 0.0, s], [0.0, 0.0, -c], [0.0, 0.0, 0.0]])

    def f_u(x, u, t):
        V, s, c = x[2], math.sin(u[0]), math.cos(u[0])
        return np.array([[V * c], [V * s], [-G * s]])

    extra = {}
    if with_constraint:
        extra = dict(
            g=lambda x, t: np.array([x[0] - 2.0]),
            g_x=lambda x, t: np.array([[1.0, 0.0, 0.0]]),
            g_t=lambda x, t: np.zeros(1),
            q=1,
        )
    return ProblemModel(
        n=3,
        m=1,
        x0=[0.0, 0.0, 0.0],
        terminal_time=None,
        f=f,
        f_x=f_x,
        f_u=f_u,
        L=lambda x, u, t: 0.5 * u[0] ** 2 + 0.05 * x[2] ** 2,
        L_x=lambda x, u, t: np.array([0.0, 0.0, 0.1 * x[2]]),
        L_u=lambda x, u, t: np.array([u[0]]),
        phi=lambda x, t: 0.1 * x[2] ** 2 * t + 0.2 * x[0] + 0.3 * x[1] * x[0],
        phi_x=lambda x, t: np.array([0.2 + 0.3 * x[1], 0.3 * x[0], 0.2 * x[2] * t]),
        phi_t=lambda x, t: 0.1 * x[2] ** 2,
        phi_tx=lambda x, t: np.array([0.0, 0.0, 0.2 * x[2]]),
        phi_xx=lambda x, t: np.array([[0.0, 0.3, 0.0], [0.3, 0.0, 0.0], [0.0, 0.0, 0.2 * t]]),
        name="sled",
        **extra,
    )


@pytest.fixture
def di():
    return double_integrator()


@pytest.fixture
def di_init():
    return init_feedback_double_integrator(41)


@pytest.fixture
def brach():
    return brachistochrone()


@pytest.fixture
def brach_init():
    return init_straightline_brachistochrone(101)


@pytest.fixture
def sled():
    return make_sled()


@pytest.fixture(scope="session")
def ex1_report():
    return evolve(double_integrator(), init_feedback_double_integrator(41), GainConfig.scalar(1, 0.1), EvolutionConfig())


@pytest.fixture(scope="session")
def ex2_report():
    return evolve(
        brachistochrone(), init_straightline_brachistochrone(101), GainConfig.scalar(1, 0.1, 0.05), EvolutionConfig()
    )

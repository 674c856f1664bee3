import numpy as np
import pytest

from gpe_multigrid import BoxDomain, LevelOperators, ProblemParams, Potential, build_initial_mesh, solve_coarse


def sine_mode(dim):
    """Normalized ground state of -Laplace on the unit box and its gradient."""
    def u(p):
        return np.prod(np.sqrt(2.0) * np.sin(np.pi * p), axis=-1)

    def grad(p):
        s = np.sqrt(2.0) * np.sin(np.pi * p)
        c = np.sqrt(2.0) * np.pi * np.cos(np.pi * p)
        out = np.empty_like(p)
        for i in range(dim):
            t = c[..., i].copy()
            for j in range(dim):
                if j != i:
                    t = t * s[..., j]
            out[..., i] = t
        return out

    return u, grad


def small_problem(dim, cells, zeta=1.0, gammas=None):
    pot = Potential(tuple(gammas)) if gammas is not None else None
    params = ProblemParams(BoxDomain.unit(dim), zeta, pot)
    return LevelOperators(build_initial_mesh(params.domain, cells), params)


@pytest.fixture(scope="session")
def converged_2d():
    ops = small_problem(2, 8, zeta=10.0, gammas=(1.0, 1.0))
    return ops, solve_coarse(ops)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

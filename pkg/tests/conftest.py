import os

import pytest
from hypothesis import HealthCheck, settings

from reference_values import ACCEPTANCE_LINES

settings.register_profile("default", max_examples=40, deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("stress", max_examples=400, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def solved05():
    from dp3 import solve_period_problem

    return solve_period_problem(0.5)


@pytest.fixture(scope="session")
def pieces05(solved05):
    """Piece and conjugate piece at resolution 64 plus a resolution 32 piece."""
    from dp3.surface import build_domain_grid, integrate_grid_edges, integrate_piece

    grid = build_domain_grid(solved05.params, 64)
    edges = integrate_grid_edges(grid)
    piece = integrate_piece(grid, edges=edges)
    conj = integrate_piece(grid, conjugate=True, edges=edges)
    coarse = integrate_piece(build_domain_grid(solved05.params, 32))
    return {"grid": grid, "edges": edges, "piece": piece, "conj": conj, "coarse": coarse}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

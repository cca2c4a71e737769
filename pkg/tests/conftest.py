import numpy as np
import pytest

from nlsfem.mesh import FeSpace, build_uniform_mesh


def dense_p1_matrices(m: int, L: float = 1.0):
    """Closed-form P1 mass and stiffness on a uniform mesh, interior nodes only."""
    h = L / m
    n = m - 1
    M = (h / 6) * (4 * np.eye(n) + np.eye(n, k=1) + np.eye(n, k=-1))
    A = (1 / h) * (2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1))
    return M, A


def dense_cn_step(M, A, U, k):
    """One free Crank-Nicolson step M (U1 - U)/k = -i A (U1 + U)/2 by dense solve."""
    return np.linalg.solve(M / k + 0.5j * A, (M / k - 0.5j * A) @ U)


@pytest.fixture
def p1_space():
    return FeSpace(build_uniform_mesh(0.0, 1.0, 32), 1)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)

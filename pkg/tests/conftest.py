import numpy as np
import pytest

from vvhori.core import HermitianOperator, PerturbationProblem, validate_problem

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def two_level(max_order=2):
    return validate_problem(PerturbationProblem(
        e0=np.array([1.0, 2.0]), perturbations={1: HermitianOperator(SX)}, max_order=max_order))


def exact_two_level(eps):
    """Closed-form eigenvalues of [[1, eps], [eps, 2]]."""
    r = np.sqrt(1 + 4 * eps**2)
    return np.array([(3 - r) / 2, (3 + r) / 2])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])

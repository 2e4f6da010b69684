# Standard Library Imports
from pathlib import Path

# Third-Party Library Imports
import numpy as np
import pytest

# Local Application Imports
from src.common import SolverSettings
from src.common.constants import CASES_DIR
from src.network import NetworkCase, load_case
from src.sdp import SDPProblem, make_block

FIXTURES_DIR = Path(__file__).resolve().parent / "fixtures"


def admittance_oracle(case: NetworkCase) -> np.ndarray:
    """Bus admittance matrix rebuilt from the line records, independent of the library code."""
    y = np.zeros((case.n, case.n), dtype=complex)
    for line in case.lines:
        ys = 1.0 / complex(line.r, line.x)
        t = line.tap * np.exp(1j * line.shift)
        f, to = line.from_bus, line.to_bus
        y[f, f] += (ys + 0.5j * line.b_sh) / abs(t) ** 2
        y[f, to] += -ys / np.conj(t)
        y[to, f] += -ys / t
        y[to, to] += ys + 0.5j * line.b_sh
    for k, bus in enumerate(case.buses):
        y[k, k] += complex(bus.g_shunt, bus.b_shunt)
    return y


def random_voltages(case: NetworkCase, rng: np.random.Generator, spread: float = 0.3) -> np.ndarray:
    """Voltages inside the magnitude bounds with small angles, reference angle zero."""
    magnitude = rng.uniform(case.v_min, case.v_max)
    angle = rng.uniform(-spread, spread, size=case.n)
    angle[case.ref_bus] = 0.0
    return magnitude * np.exp(1j * angle)


def two_by_two() -> SDPProblem:
    """min y1 + y2 subject to [[y1, 1], [1, y2]] >= 0; optimum 2 at y = (1, 1)."""
    block = make_block(
        "det",
        np.array([[0.0, 1.0], [1.0, 0.0]]),
        [(0, np.array([[1.0, 0.0], [0.0, 0.0]])), (1, np.array([[0.0, 0.0], [0.0, 1.0]]))],
        2,
    )
    return SDPProblem.build(c=[1.0, 1.0], blocks=[block])


@pytest.fixture(scope="session")
def cases_dir() -> Path:
    return CASES_DIR


@pytest.fixture(scope="session")
def case2() -> NetworkCase:
    return load_case(CASES_DIR / "case2.m")


@pytest.fixture(scope="session")
def wb2() -> NetworkCase:
    return load_case(CASES_DIR / "wb2.m")


@pytest.fixture(scope="session")
def case5() -> NetworkCase:
    return load_case(CASES_DIR / "case5.m")


@pytest.fixture(scope="session")
def case9() -> NetworkCase:
    return load_case(CASES_DIR / "case9.m")


@pytest.fixture(scope="session")
def case14() -> NetworkCase:
    return load_case(CASES_DIR / "case14.m")


@pytest.fixture(scope="session")
def bundled_cases(case2, wb2, case5, case9, case14):
    return [case2, wb2, case5, case9, case14]


@pytest.fixture
def solver_settings() -> SolverSettings:
    return SolverSettings(tol=1e-8, max_iter=200)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)

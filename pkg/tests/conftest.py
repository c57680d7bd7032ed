import pytest

from sirsat import ControlPair, CostWeights, ModelParams, SirState, TimeGrid, fbs_solve, simulate

TABLE2 = ModelParams(A=100, beta=0.1, alpha=0.5, d=0.004, delta=0.02, gamma=0.7, r=0.4, b=0.05)
TABLE2_WEIGHTS = CostWeights(a1=0.01, a2=0.08, b1=0.8, b2=0.1)
X0 = SirState(50.0, 4.0, 0.01)
GRID = TimeGrid(0.0, 20.0, 2000)

# bifurcation scenario; beta is a free choice here, 0.0125 gives R0 ~ 0.916
FIGURE1 = ModelParams(A=11, beta=0.0125, alpha=0.5, d=0.000039, delta=0.02, gamma=0.08, r=0.4, b=2.21)
FIGURE1_U = ControlPair(0.5, 0.5)


@pytest.fixture
def table2():
    return TABLE2


@pytest.fixture
def figure1():
    return FIGURE1


@pytest.fixture(scope="session")
def baseline_run():
    return simulate(TABLE2, X0, GRID)


@pytest.fixture(scope="session")
def optimized_both():
    return fbs_solve(TABLE2, TABLE2_WEIGHTS, X0, GRID, active="both")


# acceptance summary ---------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import pytest

from replica_lifetime import validate_params

# Frozen with mpmath at 40 digits from the Poisson closed form (see
# tests/test_stationary.py::test_frozen_values_match_mpmath for the recipe).
THETA0_RHO4 = 0.01831563888873418029
THETA4_RHO4 = 0.19536681481316458980
MU1 = 0.90842180555632909853  # 1 * mu * P{N >= 2}, rho = 4
MU2 = 1.52379338889291131236  # 2 * mu * P{N >= 3}, rho = 4
MEAN_D2 = 1.45421090277816454927  # first-step analysis: 1/lam + mu_1 / (2 lam^2)
SECOND_D2 = 4.68366960229593324285  # 2 gamma S^-2 e, exact rational arithmetic in mpmath
COND_THETA4 = 0.19901184388025651135  # theta_4 / (1 - theta_0)


@pytest.fixture
def base():
    return validate_params(1.0, 4.0, 1.0, 2)


def params(lam=1.0, beta=4.0, mu=1.0, d=2):
    return validate_params(lam, beta, mu, d)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

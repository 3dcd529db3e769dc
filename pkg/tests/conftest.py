import pytest

from fastslow_epi import ModelParams


@pytest.fixture
def sir_p():
    return ModelParams(beta=2.0, gamma=1.0, xi=1.0, epsilon=1e-3)


@pytest.fixture
def pertussis():
    return ModelParams(beta=260.0, gamma=17.0, xi=0.0125, kappa=0.1, nu=5.0, epsilon=1.0)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)

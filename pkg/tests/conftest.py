import numpy as np
import pytest

from imcf_chn import flow
from imcf_chn.sphere import ZetaGrid

# runs shared across test modules; each takes about a second


@pytest.fixture(scope="session")
def grid2():
    return ZetaGrid(2, 201)


@pytest.fixture(scope="session")
def generic_run(grid2):
    """n = 2, rho0 = 8 + 0.5 zeta up to t = 15, profiles every half unit."""
    rec = np.round(np.arange(0.0, 15.0001, 0.5), 10)
    return flow.run(grid2.profile(lambda z: 8 + 0.5 * z), 15.0, record_times=rec)


@pytest.fixture(scope="session")
def generic_run_n3():
    g = ZetaGrid(3, 201)
    return flow.run(g.profile(lambda z: 8 + 0.5 * z), 15.0)


@pytest.fixture(scope="session")
def q_run(grid2):
    """Moderate radius so that dQ/dt is well above the differencing error."""
    rec = np.round(np.arange(0.0, 15.0001, 0.05), 10)
    return flow.run(grid2.profile(lambda z: 2 + 0.5 * z), 15.0, record_times=rec)


# acceptance criteria: one PASS/FAIL line each, repeated in the terminal summary

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance(capsys):
    def record(number: int, title: str, ok: bool, measured: str):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {measured}"
        _ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

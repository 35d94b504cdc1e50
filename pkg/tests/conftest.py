import numpy as np
import pytest

from jrc11ad.waveform import RadarParams, make_golay_pair, schedule_train

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_line(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, ok: bool, text: str):
        line = f"[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {text}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


@pytest.fixture(scope="session")
def params():
    return RadarParams()


@pytest.fixture(scope="session")
def pair512():
    return make_golay_pair(9)


@pytest.fixture(scope="session")
def trains(pair512, params):
    return {m: schedule_train(pair512, params.packets_per_cpi, m) for m in ("SG", "MG")}


@pytest.fixture
def small_params():
    # short CPI and sequences for fast statistical tests
    return RadarParams(packets_per_cpi=16, fast_time_bins=32, noise_power=1.0)


def direct_autocorr(x):
    """O(N^2) aperiodic autocorrelation, lags -(N-1)..N-1."""
    x = [int(v) for v in x]
    n = len(x)
    return np.array([sum(x[i] * x[i + k] for i in range(n - k)) for k in range(n - 1, 0, -1)]
                    + [sum(x[i] * x[i + k] for i in range(n - k)) for k in range(n)])

import math

import mpmath as mp
import numpy as np
import pytest


def ml_series_oracle(alpha: float, beta: float, z: float, dps: int = 80) -> float:
    """Mittag-Leffler series summed in high precision until terms drop below 10^-dps."""
    with mp.workdps(dps):
        a = mp.mpf(alpha)
        b = mp.mpf(beta)
        x = mp.mpf(z)
        total = mp.mpf(0)
        eps = mp.mpf(10) ** (-dps + 5)
        n = 0
        while True:
            term = x**n * mp.rgamma(a * n + b)
            total += term
            if n > 10 and abs(term) < eps * max(1, abs(total)):
                break
            n += 1
            if n > 20000:
                raise RuntimeError("oracle series did not converge")
        return float(total)


@pytest.fixture
def ml_oracle():
    return ml_series_oracle


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


GAMMA = math.gamma


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import math

import numpy as np
import pytest

_CRITERIA = []


def ks_distance(samples, cdf, chunk=100_000):
    """Kolmogorov-Smirnov distance of angle samples against ``cdf`` on [-pi, pi)."""
    x = np.sort(np.mod(np.asarray(samples) + math.pi, 2 * math.pi) - math.pi)
    n = len(x)
    F = np.concatenate([cdf(x[i:i + chunk]) for i in range(0, n, chunk)])
    i = np.arange(1, n + 1)
    return max(np.max(i / n - F), np.max(F - (i - 1) / n))


@pytest.fixture
def criterion(request):
    """Record a one-line acceptance verdict for the terminal summary."""
    def record(name, passed, detail):
        _CRITERIA.append((name, bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")

import numpy as np
import pytest

from nucleation.geometry import GridField

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def stripes(N=64, T=8.0, axis=0, periods=4, values=(1.0, -1.0)):
    """Two-valued stripe laminate in chi_11 varying along ``axis``, equal volume fractions."""
    x = (np.arange(N) + 0.5) / N
    prof = np.where((x * periods) % 1.0 < 0.5, values[0], values[1])
    c = np.zeros((2, N, N))
    c[0] = prof[:, None] if axis == 0 else prof[None, :]
    return GridField(2, T, N, c)


@pytest.fixture
def stripe_field():
    return stripes


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {msg}")

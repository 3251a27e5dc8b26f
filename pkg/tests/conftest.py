import numpy as np
import pytest

P1, P2, EPS = 0.75, 0.25, 0.5
# closed-form qubit geodesic endpoint at t = 1, theta = 0 (p1 cos^2 + p2 sin^2, ...)
RHO_END = np.array(
    [
        [0.635075576467035, -0.21036774620197413],
        [-0.21036774620197413, 0.36492442353296506],
    ]
)

SIGMA_Y = np.array([[0, -1j], [1j, 0]])


def qubit_rho(t, p1=P1, p2=P2, eps=EPS, theta=0.0):
    c, s = np.cos(eps * t), np.sin(eps * t)
    off = (p2 - p1) * c * s
    return np.array(
        [
            [p1 * c**2 + p2 * s**2, np.exp(1j * theta) * off],
            [np.exp(-1j * theta) * off, p1 * s**2 + p2 * c**2],
        ]
    )


def qubit_xi(eps=EPS, theta=0.0):
    return np.array([[0, eps * np.exp(1j * theta)], [-eps * np.exp(-1j * theta), 0]])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def rho_q():
    return np.diag([P1, P2]).astype(complex)


_results = []


@pytest.fixture
def criterion():
    """Record one acceptance line; printed in the terminal summary."""

    def record(num, title, passed, detail=""):
        _results.append((num, title, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, passed, detail in sorted(_results, key=lambda r: r[0]):
        terminalreporter.write_line(
            f"[{'PASS' if passed else 'FAIL'}] criterion {num:>2}: {title}  {detail}"
        )

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "qlmass",
    derandomize=True,
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("qlmass")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_coeffs(rng, Lc, real=True):
    """Random coefficient array of degree <= Lc, obeying the reality condition if asked."""
    c = np.zeros((Lc + 1, 2 * Lc + 1), dtype=complex)
    for l in range(Lc + 1):
        for m in range(-l, l + 1):
            c[l, Lc + m] = rng.normal() + 1j * rng.normal()
    if real:
        for l in range(Lc + 1):
            c[l, Lc] = c[l, Lc].real
            for m in range(1, l + 1):
                c[l, Lc - m] = (-1) ** m * np.conj(c[l, Lc + m])
    return c


def smooth_tau(rng, grid, degree=4, amplitude=0.1, decay=0.4):
    """Random smooth time function with geometrically decaying spectrum."""
    from qlmass.sphere_spectral import synthesize

    c = random_coeffs(rng, degree) * (amplitude * decay ** np.arange(degree + 1))[:, None]
    return synthesize(grid, c)


ACCEPTANCE_LINES = []


def record_criterion(label, ok, detail):
    """Store and print one PASS/FAIL line for an acceptance criterion."""
    line = f"{label}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

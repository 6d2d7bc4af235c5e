"""Shared fixtures and the acceptance report.

Acceptance tests record one line each through the `acceptance` fixture;
the collected lines are printed as a block after the test summary so the
pass/fail verdicts and measured values are visible in one place even
when individual assertions fail.
"""

_LINES = []


import numpy as np
import pytest

from hhgsqueeze import PulseParams, wavelength_to_omega


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def strong_pulse():
    """4e14 W/cm^2, 800 nm, 2-cycle sin^2 pulse at cep = 0."""
    return PulseParams(intensity_wcm2=4.0e14,
                       omega=wavelength_to_omega(800.0),
                       cep=0.0, n_cycles=2)


@pytest.fixture
def acceptance():
    """record(number, name, passed, detail) -> passed; logs one line."""

    def record(number: int, name: str, passed: bool, detail: str) -> bool:
        _LINES.append((number, name, bool(passed), detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _LINES:
        return
    terminalreporter.write_sep("=", "acceptance report")
    for number, name, passed, detail in sorted(_LINES):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(
            f"[{number:02d}] {name}: {verdict} ({detail})")

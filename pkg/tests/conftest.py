import logging

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_solver_warnings():
    # objective-increase warnings are expected on inexact inner loops
    logging.getLogger("lge.solver").setLevel(logging.ERROR)
    yield


@pytest.fixture(scope="session")
def sparsity_cells():
    """Per-seed sparsity-table results at the default settings (5 seeds, d = 0.1..1.0)."""
    from lge import experiments
    from lge.io import fixed_threads

    with fixed_threads(1):
        cells = experiments.sparsity_cells()
    return dict(zip(experiments.TABLE2_D, cells))


_ACCEPTANCE = {}


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def _report(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[n] = line
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])

import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("quadbench", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("quadbench")

ACCEPTANCE = {}


def record(n: int, ok: bool, detail: str):
    """Store one acceptance criterion's outcome for the terminal summary."""
    ACCEPTANCE[n] = (ok, detail)


@pytest.fixture(scope="session", autouse=True)
def _compiled_kernels():
    from quadbench.frontend import warmup

    warmup()


def pytest_terminal_summary(terminalreporter):
    names = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" in nodeid and rep.when == "call" or (
                    "test_acceptance.py::test_criterion_" in nodeid and outcome == "error"):
                n = int(nodeid.split("test_criterion_")[1].split("_")[0])
                names[n] = "PASS" if outcome == "passed" else "FAIL"
    if not names:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(names):
        detail = ACCEPTANCE.get(n, (None, "no detail recorded"))[1]
        terminalreporter.write_line(f"criterion {n:2d}: {names[n]}  {detail}")

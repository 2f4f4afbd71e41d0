import os

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance check, in collection order."""
    reports = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when == "call" and "test_acceptance.py" in rep.nodeid:
                reports.append((rep.nodeid, outcome))
    if not reports:
        return
    terminalreporter.section("acceptance")
    for nodeid, outcome in sorted(reports, key=lambda t: _order(t[0])):
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")


def _order(nodeid):
    from test_acceptance import CHECK_ORDER
    name = nodeid.split("::")[-1]
    return CHECK_ORDER.index(name) if name in CHECK_ORDER else len(CHECK_ORDER)


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(20240611)

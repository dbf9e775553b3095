import os
from pathlib import Path

import numpy as np
import pytest


def _data_path(var):
    path = os.environ.get(var)
    return Path(path) if path and Path(path).is_file() else None


@pytest.fixture
def danish_path():
    path = _data_path("MGLCOP_DANISH")
    if path is None:
        pytest.skip("data: set MGLCOP_DANISH to the Danish fire CSV to run")
    return path


@pytest.fixture
def quake_path():
    path = _data_path("MGLCOP_EARTHQUAKE")
    if path is None:
        pytest.skip("data: set MGLCOP_EARTHQUAKE to the earthquake CSV to run")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance bookkeeping ---------------------------------------------------

CRITERIA = {
    1: "special functions: inverse roundtrip and closed forms",
    2: "tail dependence coefficient",
    3: "copula calculus consistency",
    4: "sampler validity",
    5: "extreme-value limit and Pickands function",
    6: "analytic regression gradient",
    7: "simulation study at desk scale",
    8: "Danish fire reproduction (data)",
    9: "earthquake reproduction (data)",
    10: "data-free property suite end to end",
}

_outcomes = {}
_session = {}


def pytest_sessionstart(session):
    import time
    _session["start"] = time.perf_counter()
    _session["reports"] = []


def session_elapsed():
    import time
    return time.perf_counter() - _session.get("start", time.perf_counter())


def session_failures():
    """Node ids of failed tests so far, excluding data-gated criteria and criterion 10."""
    return [r.nodeid for r in _session.get("reports", [])
            if r.failed and not ({8, 9, 10} & set(r.criteria))]


def pytest_collection_modifyitems(items):
    for item in items:
        item.user_properties.append(
            ("criteria", tuple(m.args[0] for m in item.iter_markers("criterion"))))
    # the end-to-end check judges everything else, so it runs last
    items.sort(key=lambda item: 10 in dict(item.user_properties)["criteria"])


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criteria", ())
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        report.criteria = crit
        _session.setdefault("reports", []).append(report)
        for c in crit:
            _outcomes.setdefault(c, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(CRITERIA):
        res = _outcomes.get(c)
        if not res:
            status = "NOT RUN"
        elif "failed" in res:
            status = "FAIL"
        elif all(r == "skipped" for r in res):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"criterion {c:>2}: {status:<7} {CRITERIA[c]}")

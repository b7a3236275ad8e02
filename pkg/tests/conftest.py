import random

import pytest

from horizdpa.accelerator import run_kp
from horizdpa.pipeline import random_scalar

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(id, title): exit criterion, reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _ACCEPTANCE.append((marker.args[0], marker.args[1], rep.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid, title, outcome, detail in sorted(_ACCEPTANCE, key=lambda r: int(r[0])):
        status = "PASS" if outcome == "passed" else "FAIL"
        tr.write_line(f"[{status}] AC{cid:>2} {title}" + (f" -- {detail}" if detail else ""))


@pytest.fixture(scope="session")
def scalar0():
    return random_scalar(0)


@pytest.fixture(scope="session")
def execution0(scalar0):
    return run_kp(scalar0)


@pytest.fixture
def rng():
    return random.Random(20190101)

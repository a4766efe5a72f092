import os
from dataclasses import replace

import pytest

from gridfed.economy import ClusterSpec
from gridfed.workload import JobSpec, Preference

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion exercised by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    n, text = mark.args
    ok = rep.passed if rep.when == "call" else False
    prev = _criteria.get(n, (True, text))
    _criteria[n] = (prev[0] and ok, text)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        ok, text = _criteria[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}")


def cluster(cid, procs=16, speed=100.0, bandwidth=1.0, price=1.0, name=None):
    return ClusterSpec(cid, name or f"c{cid}", procs, float(speed), float(bandwidth), float(price))


def job(origin, jid, submit=0.0, run=100.0, procs=1, speed=100.0, bandwidth=1.0, price=1.0,
        comm_fraction=0.0, budget=None, deadline=None, pref=Preference.OFC, user=-1):
    """A job built so that its run time on an origin with `speed` is `run`."""
    length = (1 - comm_fraction) * run * speed * procs
    comm = comm_fraction * run
    j = JobSpec((origin, jid), user, origin, float(submit), length, procs, comm,
                budget=2 * price * (1 - comm_fraction) * run if budget is None else budget,
                deadline=2 * run if deadline is None else deadline, preference=pref)
    return j


def with_pref(j, pref):
    return replace(j, preference=pref)


@pytest.fixture
def fixtures_dir():
    return FIXTURES

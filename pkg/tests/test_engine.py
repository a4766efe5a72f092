import io
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gridfed.engine import EventKind, PastTime, Simulator


def recorder(sim):
    seen = []
    for kind in EventKind:
        sim.on(kind, lambda ev: seen.append((ev.fire_at, ev.seq, ev.payload)))
    return seen


def test_schedule_and_fire():
    sim = Simulator()
    seen = recorder(sim)
    sim.schedule(5, EventKind.JobArrival, "a")
    assert sim.now() == 0
    sim.run()
    assert seen == [(5, 0, "a")] and sim.now() == 5


def test_ties_in_insertion_order():
    sim = Simulator()
    seen = recorder(sim)
    sim.schedule(5, EventKind.JobArrival, "first")
    sim.schedule(5, EventKind.JobCompletion, "second")
    sim.run()
    assert [p for _, _, p in seen] == ["first", "second"]


def test_past_time_rejected():
    sim = Simulator()
    sim.run_until(2)
    with pytest.raises(PastTime):
        sim.schedule(1, EventKind.JobArrival)


def test_run_until_counts_and_clock():
    sim = Simulator()
    assert sim.run_until(10) == 0 and sim.now() == 10
    sim = Simulator()
    for t in (1, 2, 3):
        sim.schedule(t, EventKind.JobArrival, t)
    assert sim.run_until(2) == 2
    assert sim.now() == 2 and sim.pending() == 1


def test_clock_after_drain_reports_horizon():
    sim = Simulator()
    sim.schedule(7, EventKind.JobArrival)
    sim.run_until(7)
    assert sim.now() == 7
    sim.schedule(42, EventKind.JobArrival)
    sim.run_until(100)
    assert sim.now() == 100


def test_cancel():
    sim = Simulator()
    seen = recorder(sim)
    h = sim.schedule(3, EventKind.JobArrival, "x")
    sim.schedule(4, EventKind.JobArrival, "y")
    h.cancel()
    assert sim.run() == 1
    assert [p for *_, p in seen] == ["y"]


@given(st.lists(st.integers(0, 20), max_size=60))
def test_order_is_lexicographic(times):
    sim = Simulator()
    seen = recorder(sim)
    for t in times:
        sim.schedule(t, EventKind.JobArrival)
    sim.run()
    keys = [(t, s) for t, s, _ in seen]
    assert keys == sorted(keys)
    assert len(keys) == len(times)


def test_handlers_scheduling_future_events_never_go_back():
    sim = Simulator()
    rng = random.Random(4)
    fired = []

    def h(ev):
        fired.append(ev.fire_at)
        if len(fired) < 200:
            sim.schedule(sim.now() + rng.choice([0, 0.5, 3]), EventKind.JobArrival)

    sim.on(EventKind.JobArrival, h)
    for t in (0, 1, 2):
        sim.schedule(t, EventKind.JobArrival)
    sim.run()
    assert fired == sorted(fired)


def _replay(seed):
    buf = io.StringIO()
    sim = Simulator(log=buf)
    rng = random.Random(seed)

    def h(ev):
        if ev.payload < 50:
            sim.schedule(sim.now() + rng.randint(0, 5), EventKind.JobDispatch, ev.payload + 1)

    sim.on(EventKind.JobDispatch, h)
    for i in range(5):
        sim.schedule(rng.randint(0, 10), EventKind.JobDispatch, i * 10)
    sim.run()
    return buf.getvalue()


def test_replay_is_byte_identical():
    a, b = _replay(9), _replay(9)
    assert a == b and a.count("\n") > 50
    first = a.splitlines()[0].split("\t")
    assert len(first) == 4 and first[2] == "JobDispatch"

import io
from collections import Counter
from dataclasses import replace

import pytest

from gridfed.economy import exec_cost, reference_roster
from gridfed.federation import Federation, Mode, MsgKind, ProtocolMessage, entries_traversed
from gridfed.lrms import GuaranteeViolation
from gridfed.workload import JobSpec, Preference

from conftest import cluster, job

OFT, OFC = Preference.OFT, Preference.OFC


def run(clusters, jobs, mode=Mode.ECONOMY, **kw):
    fed = Federation(clusters, mode=mode, record_messages=True, **kw)
    fed.submit(jobs)
    outs = {o.job_id: o for o in fed.run()}
    return fed, outs


def ladder(n=4):
    # ids 1..n, speed and price falling with id, 4 procs each
    return [cluster(i, procs=4, speed=100 * (n + 1 - i), price=n + 1 - i) for i in range(1, n + 1)]


def blockers(k, n=4):
    """Jobs that pin clusters 1..k busy until t=1000; each only fits at its own origin."""
    return [job(i, 0, run=1000, procs=4, speed=100 * (n + 1 - i), price=n + 1 - i,
                deadline=1000, pref=OFT) for i in range(1, k + 1)]


def probe(pref=OFT):
    return job(4, 1, submit=1, run=100, procs=4, speed=100, price=1, pref=pref)


def test_ofc_picks_cheapest_table1_cluster():
    roster = reference_roster(published=True)
    j = job(1, 1, run=1000, procs=4, speed=850, budget=1e9, deadline=1e9)
    fed, outs = run(roster, [j])
    o = outs[j.id]
    assert o.accepted and fed.clusters[o.host].price == 3.59
    assert o.attempts == 1 and o.messages == 4 and entries_traversed(o.messages) == 1


def test_two_cluster_ofc_choice():
    a = cluster(1, price=3.98, speed=700)
    b = cluster(2, price=3.59, speed=630)
    j = job(1, 1, run=10, speed=700, budget=1e6, deadline=1e6)
    _, outs = run([a, b], [j])
    assert outs[j.id].host == 2


@pytest.mark.parametrize("r", [1, 2, 3])
def test_remote_acceptance_message_count(r):
    fed, outs = run(ladder(), blockers(r - 1) + [probe()])
    o = outs[(4, 1)]
    assert o.accepted and o.host == r and o.attempts == r
    assert o.messages == 2 * r + 2
    assert entries_traversed(o.messages) == r


def test_oft_second_fastest_after_saturation():
    _, outs = run(ladder(), blockers(1) + [probe()])
    assert outs[(1, 0)].host == 1 and outs[(1, 0)].messages == 2
    assert outs[(4, 1)].host == 2


def test_local_acceptance_two_messages():
    fed, outs = run(ladder(), [probe(OFC)])
    o = outs[(4, 1)]
    assert o.host == 4 and o.messages == 2 and entries_traversed(2) == 1
    assert fed.gfas[4].local_total == 2
    assert sum(g.remote_total for g in fed.gfas.values()) == 0
    kinds = [m.kind for m in fed.messages]
    assert kinds == [MsgKind.Negotiate, MsgKind.Reply]


def test_endpoint_tallies_remote_r1():
    fed, outs = run(ladder(), [probe()])
    assert outs[(4, 1)].host == 1
    assert fed.gfas[4].local_total == 4 and fed.gfas[4].remote_total == 0
    assert fed.gfas[1].remote_total == 4 and fed.gfas[1].local_total == 0
    assert fed.gfas[1].remote_messages == Counter({k: 1 for k in MsgKind})


def test_endpoint_tallies_remote_r2():
    fed, _ = run(ladder(), blockers(1) + [probe()])
    assert fed.gfas[4].local_total == 6
    assert fed.gfas[1].local_total == 2 and fed.gfas[1].remote_total == 2
    assert fed.gfas[2].remote_total == 4


def test_oversized_job_rejected_without_messages():
    j = JobSpec((1, 1), -1, 1, 0.0, 1e6, 8, 0.0, 1e9, 1e9)
    fed, outs = run(ladder(), [j])
    o = outs[j.id]
    assert not o.accepted and o.host is None
    assert o.attempts == 4 and o.messages == 0
    assert o.origin_expected_cost > 0


def test_rejection_after_probing_seven_remote():
    roster = reference_roster(published=True)
    by_id = {c.id: c for c in roster}
    base = job(5, 1, run=1000, procs=4, speed=930, deadline=1.0, pref=OFT)
    # budget admits everyone but the origin itself, which is dearest per unit of work
    budget = max(exec_cost(base, c) for c in roster if c.id != 5)
    j = replace(base, budget=budget)
    assert exec_cost(j, by_id[5]) > budget
    fed, outs = run(roster, [j])
    o = outs[j.id]
    assert not o.accepted and o.attempts == 8
    assert o.messages == 14 and fed.gfas[5].local_total == 14
    assert sum(g.remote_total for g in fed.gfas.values()) == 14
    assert all(m.dst != 5 for m in fed.messages if m.kind is MsgKind.Negotiate)


def test_deadline_boundary_is_inclusive():
    j = job(1, 1, run=100, deadline=100, pref=OFC)
    _, outs = run([cluster(1)], [j])
    assert outs[j.id].accepted and outs[j.id].finish == 100
    j = job(1, 1, run=100, deadline=99.999, pref=OFC)
    _, outs = run([cluster(1)], [j])
    assert not outs[j.id].accepted


def test_fastest_first_table1_overflow_to_nasa():
    roster = reference_roster()
    blocker = job(1, 0, run=5000, procs=512, speed=850, deadline=5000)
    j = job(1, 1, submit=10, run=1000, procs=64, speed=850)
    fed, outs = run(roster, [blocker, j], mode=Mode.FASTEST_FIRST)
    assert outs[blocker.id].host == 1
    assert fed.clusters[outs[j.id].host].name == "NASA iPSC"
    assert outs[j.id].attempts == 2 and outs[j.id].messages == 6


def test_fastest_first_ignores_budget():
    j = job(2, 1, run=100, procs=4, budget=0.0)
    _, outs = run(ladder(), [j], mode=Mode.FASTEST_FIRST)
    assert outs[j.id].accepted and outs[j.id].host == 2


def test_independent_mode_stays_home():
    jobs = blockers(3) + [job(1, 1, submit=1, run=100, procs=4, speed=400, price=4), probe(OFT)]
    fed, outs = run(ladder(), jobs, mode=Mode.INDEPENDENT)
    assert not outs[(1, 1)].accepted and outs[(1, 1)].messages == 2
    assert outs[(4, 1)].host == 4 and outs[(4, 1)].messages == 2
    assert all(m.src == m.dst for m in fed.messages)
    assert sum(g.remote_total for g in fed.gfas.values()) == 0


def _check_run(fed, outs):
    accepted = [o for o in outs.values() if o.accepted]
    for o in accepted:
        assert o.finish <= o.job.submit + o.job.deadline
        assert o.cost_paid <= o.job.budget or fed.mode is not Mode.ECONOMY
        assert o.attempts >= 1
    assert sum(g.incentive for g in fed.gfas.values()) == pytest.approx(sum(o.cost_paid for o in accepted))
    assert sum(g.local_total for g in fed.gfas.values()) == sum(o.messages for o in outs.values())


def _protocol_sound(fed):
    per_job = {}
    for m in fed.messages:
        per_job.setdefault(m.job_id, []).append(m)
    for msgs in per_job.values():
        open_neg = None
        accepted = False
        for m in msgs:
            if m.kind is MsgKind.Negotiate:
                assert open_neg is None
                open_neg = m
            elif m.kind is MsgKind.Reply:
                assert open_neg is not None and (m.src, m.dst) == (open_neg.dst, open_neg.src)
                accepted = bool(m.accept)
                open_neg = None
            elif m.kind is MsgKind.JobSubmission:
                assert accepted
                accepted = False


def _mixed_jobs(n_jobs=60, seed=3):
    import random
    rng = random.Random(seed)
    roster = ladder()
    jobs = []
    for k in range(n_jobs):
        origin = rng.randint(1, 4)
        c = roster[origin - 1]
        jobs.append(job(origin, k, submit=rng.randint(0, 500), run=rng.choice([20, 80, 300]),
                        procs=rng.choice([1, 2, 4]), speed=c.speed, price=c.price,
                        comm_fraction=0.1, pref=rng.choice([OFT, OFC])))
    return roster, jobs


@pytest.mark.parametrize("mode", list(Mode))
def test_soundness_and_conservation(mode):
    roster, jobs = _mixed_jobs()
    fed, outs = run(roster, jobs, mode=mode)
    assert len(outs) == len(jobs)
    _check_run(fed, outs)
    _protocol_sound(fed)


def test_protocol_trace_lines():
    buf = io.StringIO()
    fed = Federation(ladder(), trace=buf)
    fed.submit([probe()])
    fed.run()
    lines = buf.getvalue().splitlines()
    assert len(lines) == 4
    fields = lines[1].split("\t")
    assert fields[1:5] == ["Reply", "1", "4", "4:1"] and fields[5].startswith("accept")


def test_latency_bounce_and_retry():
    fast, mid, slow = cluster(1, procs=4, speed=400, price=4), cluster(2, procs=4, speed=200, price=2), \
        cluster(3, procs=4, speed=100, price=1)
    # both negotiate with the empty fast cluster; b's guarantee fails once a is admitted
    a = job(2, 1, run=400, procs=4, speed=200, price=2, pref=OFT)
    b = job(3, 1, run=400, procs=4, speed=100, price=1, pref=OFT, deadline=250)
    fed, outs = run([fast, mid, slow], [a, b], message_latency=1.0)
    assert outs[a.id].host == 1
    ob = outs[b.id]
    assert ob.accepted and ob.host == 2 and ob.attempts == 2
    bounces = [m for m in fed.messages if m.job_id == b.id and m.kind is MsgKind.Reply
               and m.src == 1 and not m.accept]
    assert len(bounces) == 1
    assert ob.messages == 8
    _check_run(fed, outs)


def test_latency_runs_stay_sound():
    roster, jobs = _mixed_jobs(80, seed=8)
    for lat in (0.5, 5.0, 60.0):
        fed, outs = run(roster, jobs, message_latency=lat)
        assert len(outs) == len(jobs)
        _check_run(fed, outs)


def test_zero_latency_slip_is_an_error():
    fed = Federation(ladder())
    fed.submit([probe()])
    # a submission to a cluster that can no longer honour the deadline
    fed.gfas[1].lrms.admit(job(1, 9, run=1e5, procs=4, speed=400), 0)
    with pytest.raises(GuaranteeViolation):
        fed.handle_submission(ProtocolMessage(MsgKind.JobSubmission, 4, 1, (4, 1)))


def test_bad_inputs():
    with pytest.raises(ValueError):
        Federation(ladder(), message_latency=-1)
    with pytest.raises(ValueError):
        Federation([cluster(1), cluster(1)])
    fed = Federation(ladder())
    with pytest.raises(ValueError):
        fed.submit([job(9, 1)])
    fed.submit([probe()])
    with pytest.raises(ValueError):
        fed.submit([probe()])

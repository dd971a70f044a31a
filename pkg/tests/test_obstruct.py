import numpy as np
import pytest

import _cases as C
from rmltq import obstruct, stset
from rmltq.cli import load_expectations
from rmltq.lingroup import subgroup_orbits, sylow_subgroup

EXP = load_expectations()


@pytest.fixture(scope="module")
def k360():
    return C.group("4.k-360")


def test_negative_control_full_orbit(k360):
    g = k360
    full = range(g.n)
    sizes = obstruct.intersection_sizes(g, full, full)
    assert sizes == {g.n}
    cert = obstruct.intersection_certificate(g, full, full)
    assert not cert.hypothesis_holds


def test_scan_order_does_not_matter(k360):
    g = k360
    orbs = sorted(subgroup_orbits(sylow_subgroup(g, 5)), key=lambda o: (len(o), min(o)))
    A, B = orbs[0], orbs[1]
    perm = np.random.default_rng(1).permutation(g.order)
    assert obstruct.intersection_sizes(g, A, B) == obstruct.intersection_sizes(g, A, B, order=perm)


def test_invalid_prime_rejected(k360):
    with pytest.raises(ValueError):
        obstruct.find_obstruction(k360, 4)
    with pytest.raises(ValueError):
        obstruct.find_obstruction(k360, 7)
    with pytest.raises(ValueError):
        obstruct.find_obstruction(k360, 5, "bogus")


@pytest.mark.parametrize("cid", ["4.k-360", "4.k-720"])
def test_certificate_and_enumeration_agree(cid):
    want = EXP["obstruct"][cid]
    g = C.group(cid)
    cert = obstruct.find_obstruction(g, want["q"], want["strategy"], case_id=cid)
    assert cert.hypothesis_holds
    assert len(cert.orbit_A) == len(cert.orbit_B) == want["orbit_length"]
    assert set(cert.intersection_sizes) <= set(want["sizes"])
    assert all(s % g.p == 0 for s in cert.intersection_sizes)
    assert stset.enumerate_cliques(stset.build_graph(g), g.n - 1) == []
    assert cert.to_json()["case_id"] == cid


def test_certificate_recomputes(k360):
    cert = obstruct.find_obstruction(k360, 5)
    again = obstruct.intersection_certificate(k360, cert.orbit_A, cert.orbit_B)
    assert again.intersection_sizes == cert.intersection_sizes


def test_no_certificate_where_cliques_exist():
    g = C.group("4.e-960")
    for q, strategy in ((5, "sylow"), (5, "normalizer"), (3, "sylow")):
        cert = obstruct.find_obstruction(g, q, strategy)
        assert not cert.hypothesis_holds and cert.orbit_A == ()
    assert len(C.cliques("4.e-960")) > 0


def test_search_cases_have_no_certificate_and_cliques():
    # a passing certificate and a nonempty enumeration never coexist
    for cid in ("4.a-48", "4.b", "4.c"):
        g = C.group(cid)
        for q in sorted({r for r in (2, 3, 5, 7) if g.order % r == 0}):
            assert not obstruct.find_obstruction(g, q).hypothesis_holds, (cid, q)


def test_conjugacy_orbit_reps_are_conjugacy_classes(k360):
    g = k360
    rows = np.arange(g.order, dtype=np.int64)[:, None]
    reps, sizes = obstruct.conjugacy_orbit_reps(rows, g.conj_table)
    classes = {frozenset(int(v) for v in g.conj_table[:, x]) for x in range(g.order)}
    assert len(reps) == len(classes) and sum(sizes) == g.order
    with pytest.raises(obstruct.CheckpointMismatch):
        obstruct.conjugacy_orbit_reps(rows[:-1], g.conj_table)


def test_pipeline_mismatch_raises():
    report = obstruct.PipelineReport({}, {}, "")
    with pytest.raises(obstruct.CheckpointMismatch):
        obstruct._check(report, "x", 1, {"x": 2})

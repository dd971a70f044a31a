import numpy as np
import pytest

import _cases as C
from rmltq import classify
from rmltq.fpmat import Matrix, mat_inv, mat_mul
from rmltq.lingroup import close

SMALL = ["4.a-48", "4.a-96", "4.b", "4.c"]


def _spread(cid, row):
    return classify.spread_from_indices(C.spreads(cid)[row], C.group(cid))


@pytest.mark.parametrize("cid", SMALL)
def test_member_counts_partition_cliques(cid):
    rec = C.record(cid)
    members = sorted(m for c in rec.classes for m in c.members)
    assert members == list(range(rec.cliques))


def test_incomplete_enumeration_detected():
    cid = "4.b"
    sp = C.spreads(cid)
    big = next(c for c in C.record(cid).classes if c.member_count > 1)
    drop = max(big.members)
    partial = np.delete(sp, drop, axis=0)
    with pytest.raises(classify.IntegrityError):
        classify.parastrophy_classes(partial, C.group(cid), C.normalizer(cid))


@pytest.mark.parametrize("cid", SMALL)
def test_witnesses_verify_at_matrix_level(cid):
    g, n = C.group(cid), C.normalizer(cid)
    for cls in C.record(cid).classes:
        rep = _spread(cid, cls.representative)
        for m in cls.members:
            T, U, flag = classify.witness_matrices(cls, m, n)
            assert classify.isotopy_witness_verify(rep, _spread(cid, m), T, U, flag)
            assert classify.replay_witness(cls, m, C.spreads(cid), g, n)


def test_witness_identity_and_negative_control():
    cid = "4.b"
    g = C.group(cid)
    ident = Matrix.identity(g.d, g.p)
    a, b = (c.representative for c in C.record(cid).classes[:2])
    s, t = _spread(cid, a), _spread(cid, b)
    assert classify.isotopy_witness_verify(s, s, ident, ident, False)
    assert not classify.isotopy_witness_verify(s, t, ident, ident, False)


@pytest.mark.parametrize("cid", SMALL + ["4.l"])
def test_fingerprint_table_matches_direct(cid):
    ft = classify.FingerprintTable(C.group(cid))
    sp = C.spreads(cid)
    for row in range(0, len(sp), max(1, len(sp) // 20)):
        assert ft(sp[row]) == classify.fingerprint(_spread(cid, row))


def test_fingerprint_constant_on_classes():
    cid = "4.c"
    ft = classify.FingerprintTable(C.group(cid))
    for cls in C.record(cid).classes:
        assert {ft(C.spreads(cid)[m]) for m in cls.members} == {cls.fingerprint}


def test_generation_flags():
    # the larger 5^2 case has no generating classes
    assert C.record("4.a-96").proper_G_classes == 0
    assert C.record("4.a-48").proper_G_classes == 1
    for c in C.record("4.a-96").classes:
        assert classify.generated_order(C.spreads("4.a-96")[c.representative], C.group("4.a-96")) < 96


def test_autotopism_precondition():
    cid = "4.a-96"
    rep = C.record(cid).classes[0].representative
    with pytest.raises(ValueError, match="generate"):
        classify.autotopism_group(C.spreads(cid)[rep], C.group(cid), C.normalizer(cid))


@pytest.mark.parametrize("cid", ["4.b", "4.l"])
def test_autotopisms_constant_on_class(cid):
    g, n = C.group(cid), C.normalizer(cid)
    sp = C.spreads(cid)
    for cls in C.record(cid).classes:
        if not cls.generates:
            continue
        picks = sorted(cls.members)[:3]
        groups = [classify.autotopism_group(sp[m], g, n, affine=False) for m in picks]
        assert len({a.order for a in groups}) == 1
        assert len({a.orbit_profile for a in groups}) == 1
        ident = n.identity
        assert all((ident, ident) in [tuple(map(int, p)) for p in a.pairs] for a in groups)


def test_autotopism_pairs_are_closed():
    cid = "4.l"
    g, n = C.group(cid), C.normalizer(cid)
    cls = next(c for c in C.record(cid).classes if c.generates)
    a = classify.autotopism_group(C.spreads(cid)[cls.representative], g, n, affine=False)
    pg = a.as_group()
    assert pg.is_closed() and pg.order == a.order == 168
    inv = pg.invariants()
    assert inv["order"] == 168 and inv["center_order"] == 1


def test_compare_groups_self_is_undecided():
    cid = "4.l"
    g, n = C.group(cid), C.normalizer(cid)
    cls = next(c for c in C.record(cid).classes if c.generates)
    pg = classify.autotopism_group(C.spreads(cid)[cls.representative], g, n, affine=False).as_group()
    assert classify.compare_groups(pg, pg)["verdict"] == "undecided"
    assert classify.psl27_witness(pg) is not None


@pytest.mark.parametrize("cid", ["4.a-48", "4.b"])
def test_quasifield_axioms_and_identity(cid):
    for row in range(min(5, len(C.spreads(cid)))):
        Q = classify.spread_to_quasifield(_spread(cid, row))
        assert classify.check_quasifield(Q) == {"Q1": True, "Q2": True, "Q3": True, "Q4": True}
        assert (Q.table[Q.one] == np.arange(Q.q)).all()  # e . a = a


def test_quasifield_rejects_non_spread():
    g = C.group("4.a-48")
    bad = classify.spread_from_indices([g.identity] * g.n, g)
    with pytest.raises(ValueError):
        classify.spread_to_quasifield(bad)


def test_bruteforce_oracle_agrees_on_smallest_case():
    g = C.group("4.a-48")
    gl = close([Matrix.from_rows([[2, 0], [0, 1]], 5), Matrix.from_rows([[4, 1], [4, 0]], 5)])
    brute = classify.bruteforce_parastrophy_classes(C.spreads("4.a-48"), g, gl)
    assert brute == sorted(sorted(c.members) for c in C.record("4.a-48").classes)


def test_record_row_keys():
    row = C.record("4.a-48").row()
    assert row == {"case_id": "4.a-48", "cliques": row["cliques"], "parastrophy_classes": 2,
                   "proper_G_classes": 1, "distinct_fingerprints": 1}


def test_empty_classification():
    rec = classify.classify("x", np.zeros((0, 24), dtype=np.int64), C.group("4.a-48"), C.normalizer("4.a-48"))
    assert rec.row()["cliques"] == 0 and rec.classes == []


def test_inverse_spread_matches_matrix_inverse():
    s = _spread("4.a-48", 0)
    assert set(s.inverse().matrices) == {mat_inv(m) for m in s.matrices}
    assert mat_mul(s.matrices[0], mat_inv(s.matrices[0])) == Matrix.identity(2, 5)

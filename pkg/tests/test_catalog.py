import pytest

import _cases as C
from rmltq import catalog
from rmltq.fpmat import gl_order
from rmltq.lingroup import is_transitive


def test_descriptor_inventory():
    cases = catalog.list_cases()
    assert len([c for c in cases if c.q == 25]) == 2
    assert len([c for c in cases if c.family == "4.j"]) == 5
    for c in cases:
        assert gl_order(c.d, c.p) % c.expected_order == 0


def test_selection():
    assert [c.case_id for c in catalog.expand_case_selection(["4.a"])] == ["4.a-48", "4.a-96"]
    assert len(catalog.expand_case_selection(["all"])) == len(catalog.list_cases())
    with pytest.raises(KeyError):
        catalog.expand_case_selection(["4.z"])


@pytest.mark.parametrize("cid,order,n", [("4.b", 144, 48), ("4.l", 2520, 15), ("4.j-3840", 3840, 80)])
def test_build_examples(cid, order, n):
    g = C.group(cid)
    assert g.order == order and g.n == n and is_transitive(g)


def test_verify_self_consistency():
    for cid in ("4.a-48", "4.a-96", "4.c", "4.f"):
        b = catalog.build(cid)
        assert catalog.verify_case(b.group, cid, b.g0)["ok"]


def test_verify_reports_wrong_order():
    rep = catalog.verify_case(C.group("4.a-48"), "4.a-96")
    assert not rep["ok"] and not rep["order_ok"]


def _contained(small, big):
    return bool((big.lookup_keys(small.key_array) >= 0).all())


def test_containments():
    assert _contained(C.group("4.a-48"), C.group("4.a-96"))
    assert _contained(C.group("4.e-480"), C.group("4.e-960"))
    # every 240 intermediate lies in some 480 intermediate
    for h in catalog.case_variants("4.e-240"):
        assert any(_contained(h, k) for k in catalog.case_variants("4.e-480"))
    for o in (160, 320, 640, 1920):
        assert _contained(C.group(f"4.j-{o}"), C.group("4.j-3840"))


def test_missing_asset_is_reported(tmp_path):
    with pytest.raises(catalog.CaseUnavailable, match="skipped: no construction"):
        catalog.build("4.m", asset_dir=tmp_path)


def test_variants_of_4e():
    assert [g.order for g in catalog.case_variants("4.e-240")] == [240, 240]
    assert [g.order for g in catalog.case_variants("4.e-480")] == [480, 480]


def test_cached_build_roundtrip(tmp_path):
    a = catalog.cached_build("4.b", tmp_path)
    b = catalog.cached_build("4.b", tmp_path)
    assert (tmp_path / "groups" / "4.b.json").exists()
    assert sorted(a.group.elements) == sorted(b.group.elements)

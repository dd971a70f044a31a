"""Construction of the exceptional transitive linear groups used in the search.

Every recipe is a deterministic lex-scan: build the characteristic subgroup
G0 from explicit generators, take its normalizer in GL(d, p), and pick the
first transitive intermediate group of the wanted order found by adjoining
lex-least coset representatives.
"""
from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fpmat import (
    GF9,
    Matrix,
    blowup,
    ext_identity,
    ext_mat_det,
    ext_mat_mul,
    gl_order,
    iter_gl,
    kron,
    mat_det,
    mat_inv,
    mat_mul,
    mat_pow,
)
from .lingroup import (
    GroupBudgetError,
    LinearGroup,
    close,
    closure_order,
    is_transitive,
    load_group,
    normalizer_in_gl,
)

log = logging.getLogger(__name__)

ASSET_DIR = Path(__file__).parent / "data"


class ConstructionError(RuntimeError):
    pass


class CaseUnavailable(RuntimeError):
    """Raised for cases whose generators must come from a data asset that is absent."""


@dataclass(frozen=True)
class CaseDescriptor:
    case_id: str
    p: int
    d: int
    expected_order: int
    g0_name: str
    g0_order: int
    recipe: str
    in_table3: bool = True

    @property
    def family(self) -> str:
        return self.case_id.split("-")[0]

    @property
    def q(self) -> int:
        return self.p**self.d


_CASES = [
    CaseDescriptor("4.a-48", 5, 2, 48, "SL(2,3)", 24, "sl23"),
    CaseDescriptor("4.a-96", 5, 2, 96, "SL(2,3)", 24, "sl23"),
    CaseDescriptor("4.b", 7, 2, 144, "SL(2,3)", 24, "sl23"),
    CaseDescriptor("4.c", 11, 2, 240, "SL(2,3)", 24, "sl23"),
    CaseDescriptor("4.e-240", 3, 4, 240, "SL(2,5)", 120, "sl25_gf9", in_table3=False),
    CaseDescriptor("4.e-480", 3, 4, 480, "SL(2,5)", 120, "sl25_gf9", in_table3=False),
    CaseDescriptor("4.e-960", 3, 4, 960, "SL(2,5)", 120, "sl25_gf9"),
    CaseDescriptor("4.f", 11, 2, 600, "SL(2,5)", 120, "sl25"),
    CaseDescriptor("4.g", 19, 2, 1080, "SL(2,5)", 120, "sl25"),
    CaseDescriptor("4.h", 29, 2, 1680, "SL(2,5)", 120, "sl25"),
    CaseDescriptor("4.j-160", 3, 4, 160, "2^(1+4)", 32, "extraspecial", in_table3=False),
    CaseDescriptor("4.j-320", 3, 4, 320, "2^(1+4)", 32, "extraspecial", in_table3=False),
    CaseDescriptor("4.j-640", 3, 4, 640, "2^(1+4)", 32, "extraspecial", in_table3=False),
    CaseDescriptor("4.j-1920", 3, 4, 1920, "2^(1+4)", 32, "extraspecial", in_table3=False),
    CaseDescriptor("4.j-3840", 3, 4, 3840, "2^(1+4)", 32, "extraspecial", in_table3=False),
    CaseDescriptor("4.k-360", 2, 4, 360, "A6", 360, "alternating", in_table3=False),
    CaseDescriptor("4.k-720", 2, 4, 720, "A6", 360, "alternating", in_table3=False),
    CaseDescriptor("4.l", 2, 4, 2520, "A7", 2520, "alternating"),
    CaseDescriptor("4.m", 3, 6, 2184, "SL(2,13)", 2184, "asset", in_table3=False),
]
_BY_ID = {c.case_id: c for c in _CASES}


def list_cases() -> list[CaseDescriptor]:
    return list(_CASES)


def get_case(case_id: str) -> CaseDescriptor:
    try:
        return _BY_ID[case_id]
    except KeyError:
        raise KeyError(f"unknown case {case_id!r}; known: {', '.join(_BY_ID)}") from None


def expand_case_selection(sel) -> list[CaseDescriptor]:
    """Accepts case ids, family prefixes like '4.j', or 'all'."""
    out = []
    for s in sel:
        if s == "all":
            return list(_CASES)
        if s in _BY_ID:
            out.append(_BY_ID[s])
            continue
        fam = [c for c in _CASES if c.family == s]
        if not fam:
            raise KeyError(f"unknown case {s!r}")
        out.extend(fam)
    seen = set()
    return [c for c in out if not (c.case_id in seen or seen.add(c.case_id))]


# ---------------------------------------------------------------------------
# G0 recipes

def _has_order(m: Matrix, k: int) -> bool:
    ident = Matrix.identity(m.d, m.p)
    if mat_pow(m, k) != ident:
        return False
    return all(mat_pow(m, k // q) != ident for q in _prime_divisors(k))


def _prime_divisors(n: int) -> list[int]:
    out, q = [], 2
    while q * q <= n:
        if n % q == 0:
            out.append(q)
            while n % q == 0:
                n //= q
        q += 1
    if n > 1:
        out.append(n)
    return out


def _iter_sl2(p: int):
    for a, b, c, d in itertools.product(range(p), repeat=4):
        if (a * d - b * c) % p == 1:
            yield Matrix(2, p, (a, b, c, d))


def sl23_copy(p: int) -> LinearGroup:
    """SL(2,3) <= GL(2,p): Q8 from the standard pair plus an order-3 element
    of SL(2,p) normalizing it."""
    q1 = Matrix.from_rows([[0, -1], [1, 0]], p)
    ab = next((a, b) for a in range(p) for b in range(p) if (a * a + b * b + 1) % p == 0)
    q2 = Matrix.from_rows([[ab[0], ab[1]], [ab[1], -ab[0]]], p)
    q8 = close([q1, q2])
    if q8.order != 8:
        raise ConstructionError(f"Q8 stage produced order {q8.order}")
    for x in _iter_sl2(p):
        if (x[0, 0] + x[1, 1]) % p != p - 1:  # order 3 in SL(2,p) <=> trace -1
            continue
        if not _has_order(x, 3):
            continue
        xi = mat_inv(x)
        if all(mat_mul(mat_mul(xi, s), x) in q8 for s in (q1, q2)):
            g0 = close([q1, q2, x])
            if g0.order == 24:
                return g0
    raise ConstructionError("no order-3 element normalizing Q8 found")


def _sl25_scan(candidates_5, candidates_4, to_matrix):
    a = candidates_5[0]
    for b in candidates_4:
        if closure_order([to_matrix(a), to_matrix(b)], 121) == 120:
            g0 = close([to_matrix(a), to_matrix(b)])
            involutions = [m for m in g0.elements if _has_order(m, 2)]
            if len(involutions) == 1:
                return g0
    raise ConstructionError("no (order 5, order 4) pair generating SL(2,5)")


def sl25_copy(p: int) -> LinearGroup:
    """SL(2,5) <= GL(2,p) from the lex-least order-5 element and lex-least
    compatible order-4 element of SL(2,p)."""
    sl = list(_iter_sl2(p))
    o5 = [m for m in sl if ((m[0, 0] + m[1, 1]) ** 2 + m[0, 0] + m[1, 1] - 1) % p == 0 and _has_order(m, 5)]
    o4 = [m for m in sl if (m[0, 0] + m[1, 1]) % p == 0 and _has_order(m, 4)]
    return _sl25_scan(o5, o4, lambda m: m)


def sl25_gf9_copy() -> LinearGroup:
    """SL(2,5) <= GL(2,9), blown up into GL(4,3)."""
    F = GF9
    els = sorted(F.elements())
    ident = ext_identity(F, 2)

    def order(m, limit=10):
        x, k = m, 1
        while x != ident:
            x = ext_mat_mul(F, x, m)
            k += 1
            if k > limit:
                return None
        return k

    sl = [((a, b), (c, d)) for a, b, c, d in itertools.product(els, repeat=4)
          if ext_mat_det(F, ((a, b), (c, d))) == F.one]
    o5 = [m for m in sl if order(m) == 5]
    o4 = [m for m in sl if order(m) == 4]
    return _sl25_scan(o5, o4, lambda m: blowup(m, F))


def extraspecial_copy() -> LinearGroup:
    """2^(1+4) in GL(4,3) as Kronecker products of D8 and Q8 in GL(2,3)."""
    p = 3
    i2 = Matrix.identity(2, p)
    d8 = [Matrix.from_rows([[0, 1], [1, 0]], p), Matrix.from_rows([[1, 0], [0, -1]], p)]
    q8 = [Matrix.from_rows([[0, -1], [1, 0]], p), Matrix.from_rows([[1, 1], [1, -1]], p)]
    gens = [kron(a, i2) for a in d8] + [kron(i2, b) for b in q8]
    e = close(gens)
    if e.order != 32:
        raise ConstructionError(f"extraspecial stage produced order {e.order}")
    center = [m for m in e.elements if all(mat_mul(m, s) == mat_mul(s, m) for s in gens)]
    if sorted(center) != sorted([Matrix.identity(4, p), Matrix.scalar(4, p, -1)]):
        raise ConstructionError("center of the extraspecial group is not {I, -I}")
    return e


def _gl42_scan(o1: int, o2: int, target: int) -> LinearGroup:
    gl = list(iter_gl(4, 2))
    A = [m for m in gl if _has_order(m, o1)]
    B = [m for m in gl if _has_order(m, o2)]
    for a in A:
        for b in B:
            if closure_order([a, b], target) == target:
                g = close([a, b])
                if is_transitive(g):
                    return g
    raise ConstructionError(f"no transitive subgroup of order {target} from ({o1}, {o2}) pairs")


# ---------------------------------------------------------------------------
# intermediate subgroups G0 <= H <= N

@dataclass
class Intermediate:
    indices: list[int]
    adjoined: list[int]  # indices in N of the adjoined coset representatives

    @property
    def order(self) -> int:
        return len(self.indices)


def intermediate_subgroups(n: LinearGroup, g0: LinearGroup) -> list[Intermediate]:
    """All subgroups between g0 and n (g0 normal in n), in the order found by
    breadth-first adjunction of lex-least coset representatives."""
    g0_idx = np.sort(g0.indices_in(n))
    m = n.mul
    label = m[g0_idx[:, None], np.arange(n.order)[None, :]].min(axis=0)
    reps = np.unique(label)
    rid = {int(r): i for i, r in enumerate(reps)}
    qlabel = np.array([rid[int(x)] for x in label])
    k = len(reps)
    qmul = qlabel[m[np.ix_(reps, reps)]]
    e = int(qlabel[n.identity])

    def qclose(gens):
        seen = {e}
        stack = [e]
        while stack:
            x = stack.pop()
            for g in gens:
                y = int(qmul[x, g])
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return frozenset(seen)

    found = {frozenset([e]): []}
    order = [frozenset([e])]
    frontier = [frozenset([e])]
    while frontier:
        nxt = []
        for h in frontier:
            for x in range(k):
                if x in h:
                    continue
                kk = qclose(list(h) + [x]) if len(h) > 1 else qclose([x])
                if kk not in found:
                    found[kk] = found[h] + [x]
                    order.append(kk)
                    nxt.append(kk)
        frontier = nxt
    out = []
    for h in order:
        idx = np.flatnonzero(np.isin(qlabel, list(h))).tolist()
        out.append(Intermediate(idx, [int(reps[x]) for x in found[h]]))
    return out


def transitive_intermediates(n: LinearGroup, g0: LinearGroup, order: int) -> list[LinearGroup]:
    out = []
    for it in intermediate_subgroups(n, g0):
        if it.order != order:
            continue
        gens = list(g0.generators) + [n.element(i) for i in it.adjoined]
        h = n.subgroup(it.indices, gens)
        if is_transitive(h):
            out.append(h)
    return out


def conjugacy_representatives(n: LinearGroup, subgroups: list[LinearGroup]) -> list[LinearGroup]:
    """Keep one subgroup per n-conjugacy class."""
    reps: list[tuple[frozenset, LinearGroup]] = []
    ct = n.conj_table
    for h in subgroups:
        idx = h.indices_in(n)
        hs = frozenset(idx.tolist())
        if any(frozenset(ct[x, idx].tolist()) == r for r, _ in reps for x in range(n.order)):
            continue
        reps.append((hs, h))
    return [h for _, h in reps]


# ---------------------------------------------------------------------------
# case construction

@dataclass
class BuiltCase:
    descriptor: CaseDescriptor
    group: LinearGroup
    g0: LinearGroup
    normalizer_g0: LinearGroup | None = None
    notes: list[str] = field(default_factory=list)


_G0_CACHE: dict[str, tuple[LinearGroup, LinearGroup]] = {}


def _g0_and_normalizer(c: CaseDescriptor) -> tuple[LinearGroup, LinearGroup]:
    key = f"{c.recipe}:{c.p}:{c.d}"
    if key in _G0_CACHE:
        return _G0_CACHE[key]
    if c.recipe == "sl23":
        g0 = sl23_copy(c.p)
    elif c.recipe == "sl25":
        g0 = sl25_copy(c.p)
    elif c.recipe == "sl25_gf9":
        g0 = sl25_gf9_copy()
    elif c.recipe == "extraspecial":
        g0 = extraspecial_copy()
    else:
        raise ConstructionError(f"recipe {c.recipe} has no normalizer stage")
    if g0.order != c.g0_order:
        raise ConstructionError(f"{c.case_id}: G0 stage produced order {g0.order}, want {c.g0_order}")
    n = normalizer_in_gl(g0)
    _G0_CACHE[key] = (g0, n)
    return g0, n


def _alternating(c: CaseDescriptor) -> tuple[LinearGroup, LinearGroup, LinearGroup | None]:
    key = "alt:A6"
    if c.g0_name == "A7":
        g = _gl42_scan(7, 3, 2520)
        return g, g, None
    if key not in _G0_CACHE:
        a6 = _gl42_scan(5, 4, 360)
        _G0_CACHE[key] = (a6, normalizer_in_gl(a6))
    a6, n = _G0_CACHE[key]
    if c.expected_order == 360:
        return a6, a6, n
    cands = transitive_intermediates(n, a6, c.expected_order)
    if not cands:
        raise ConstructionError(f"{c.case_id}: no transitive overgroup of A6 of order {c.expected_order}")
    return cands[0], a6, n


def _from_asset(c: CaseDescriptor, asset_dir: Path | None = None) -> LinearGroup:
    path = (asset_dir or ASSET_DIR) / f"{c.case_id.replace('.', '')}_generators.json"
    if not path.exists():
        raise CaseUnavailable(f"{c.case_id}: skipped: no construction (missing {path.name})")
    return load_group(path)


def build(c: CaseDescriptor | str, asset_dir: Path | None = None) -> BuiltCase:
    if isinstance(c, str):
        c = get_case(c)
    if gl_order(c.d, c.p) % c.expected_order:
        raise ConstructionError(f"{c.case_id}: expected order does not divide |GL|")
    if c.recipe == "asset":
        g = _from_asset(c, asset_dir)
        return BuiltCase(c, g, g)
    if c.recipe == "alternating":
        g, g0, n = _alternating(c)
        return BuiltCase(c, g, g0, n)
    g0, n = _g0_and_normalizer(c)
    if n.order == c.expected_order and is_transitive(n):
        return BuiltCase(c, n, g0, n)
    cands = transitive_intermediates(n, g0, c.expected_order)
    if not cands:
        raise ConstructionError(
            f"{c.case_id}: normalizer stage (order {n.order}) has no transitive subgroup of order {c.expected_order}")
    out = BuiltCase(c, cands[0], g0, n)
    if len(cands) > 1:
        out.notes.append(f"{len(cands)} transitive intermediate subgroups of order {c.expected_order}; took the first")
    return out


def build_case(c: CaseDescriptor | str, asset_dir: Path | None = None) -> LinearGroup:
    return build(c, asset_dir).group


def verify_case(g: LinearGroup, c: CaseDescriptor | str, g0: LinearGroup | None = None) -> dict:
    if isinstance(c, str):
        c = get_case(c)
    report = {
        "case_id": c.case_id,
        "order": g.order,
        "expected_order": c.expected_order,
        "order_ok": g.order == c.expected_order,
        "transitive": is_transitive(g),
        "dims_ok": (g.p, g.d) == (c.p, c.d),
    }
    if g0 is not None:
        try:
            idx = g0.indices_in(g)
            contained = True
        except ValueError:
            contained = False
        normal = contained and all(
            mat_mul(mat_mul(mat_inv(s), t), s) in g0 for s in g.generators for t in g0.generators)
        report.update(g0_order=g0.order, g0_order_ok=g0.order == c.g0_order, g0_normal=normal)
    report["ok"] = all(v for k, v in report.items() if k.endswith("_ok") or k in ("transitive", "g0_normal"))
    return report


# ---------------------------------------------------------------------------
# cache

def cached_build(c: CaseDescriptor | str, cache_dir: Path | None) -> BuiltCase:
    """Build a case, persisting G and G0 generator files under cache_dir."""
    if isinstance(c, str):
        c = get_case(c)
    if cache_dir is None:
        return build(c)
    cache_dir = Path(cache_dir)
    path = cache_dir / "groups" / f"{c.case_id}.json"
    if path.exists():
        data = json.loads(path.read_text())
        g = load_group(data["group"])
        g0 = load_group(data["g0"])
        return BuiltCase(c, g, g0, None, data.get("notes", []))
    built = build(c)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({
        "case_id": c.case_id,
        "group": built.group.to_json(),
        "g0": built.g0.to_json(),
        "notes": built.notes,
    }))
    return built


def regular_nearfield_group() -> LinearGroup:
    """SL(2,3) in GL(2,5): regular on the 24 nonzero vectors."""
    return sl23_copy(5)


def case_variants(c: CaseDescriptor | str) -> list[LinearGroup]:
    """Every transitive subgroup the construction offers for a case, one per
    class found; build() keeps the first of these."""
    if isinstance(c, str):
        c = get_case(c)
    if c.recipe == "asset":
        return [_from_asset(c)]
    if c.recipe == "alternating":
        g, g0, n = _alternating(c)
        if n is None or c.expected_order == g0.order:
            return [g]
        return transitive_intermediates(n, g0, c.expected_order)
    g0, n = _g0_and_normalizer(c)
    if n.order == c.expected_order:
        return [n]
    return transitive_intermediates(n, g0, c.expected_order)

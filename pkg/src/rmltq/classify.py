"""Parastrophy reduction, plane invariants and quasifield reconstruction.

Spread sets are handled as sorted arrays of element indices of the group G
they generate a subgroup of.  Parastrophy classes are orbits of the maps
S -> S s^-1 (s in S), S -> T^-1 S T (T normalizing G) and S -> S^-1.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .fpmat import Matrix, index_to_vector, is_square, mat_det, mat_inv, mat_mul, perm_of
from .lingroup import LinearGroup, close
from .stset import SpreadSet

log = logging.getLogger(__name__)


class IntegrityError(RuntimeError):
    """A parastrophy image fell outside the supplied clique list."""


def spread_indices(s: SpreadSet, g: LinearGroup) -> np.ndarray:
    return np.sort(np.array([g.index_of(m) for m in s.matrices]))


def spread_from_indices(idx, g: LinearGroup, source_case: str = "") -> SpreadSet:
    return SpreadSet(tuple(g.element(int(i)) for i in idx), source_case)


def cliques_to_spreads(graph, cliques) -> np.ndarray:
    """(m, n) array of sorted element indices, identity included."""
    g = graph.group
    verts = np.array(graph.vertices, dtype=np.int64)
    out = np.empty((len(cliques), g.n), dtype=np.int64)
    for i, c in enumerate(cliques):
        row = np.concatenate([[g.identity], verts[list(c)]])
        out[i] = np.sort(row)
    return out


# ---------------------------------------------------------------------------
# generated group

def generated_order(idx, g: LinearGroup) -> int:
    """Order of the subgroup of g generated by the given element indices."""
    gens: list[int] = []
    span = {g.identity}
    for x in idx:
        x = int(x)
        if x in span:
            continue
        gens.append(x)
        span = g.closure_indices(gens)
        if len(span) == g.order:
            break
    return len(span)


def generates_full_group(s, g: LinearGroup) -> bool:
    idx = spread_indices(s, g) if isinstance(s, SpreadSet) else s
    return generated_order(idx, g) == g.order


# ---------------------------------------------------------------------------
# parastrophy

@dataclass
class ParastrophyClass:
    representative: int  # position in the clique list
    members: list[int]
    witnesses: dict[int, tuple[int, int, bool]]  # member -> (T, U, inverted) as indices of n
    generates: bool | None = None
    fingerprint: tuple | None = None

    @property
    def member_count(self) -> int:
        return len(self.members)


class _Action:
    """Index arithmetic in n (the normalizer) for spread sets living in g."""

    def __init__(self, g: LinearGroup, n: LinearGroup):
        self.g, self.n = g, n
        self.g_in_n = g.indices_in(n)
        back = np.full(n.order, -1, dtype=np.int64)
        back[self.g_in_n] = np.arange(g.order)
        self.n_to_g = back
        self.n_gens = [n.index_of(m) for m in n.generators]

    def conj_perm(self, t: int) -> np.ndarray:
        """Permutation of g's indices: x -> t^-1 x t."""
        n = self.n
        img = n.conj_table[t, self.g_in_n]
        out = self.n_to_g[img]
        if (out < 0).any():
            raise ValueError("element does not normalize the group")
        return out


def parastrophy_classes(spreads: np.ndarray, g: LinearGroup, n: LinearGroup) -> list[ParastrophyClass]:
    """Orbits of the clique list under the parastrophy generators.

    ``spreads`` is an (m, |V*|) array of sorted element indices of g, each
    row containing the identity; it must be the complete enumeration.
    """
    spreads = np.asarray(spreads, dtype=np.int64)
    m_count = len(spreads)
    order = sorted(range(m_count), key=lambda i: tuple(spreads[i]))
    lookup = {spreads[i].tobytes(): i for i in range(m_count)}
    act = _Action(g, n)
    mul, inv = g.mul, g.inv
    nmul, ninv = n.mul, n.inv
    conj = [(t, act.conj_perm(t)) for t in act.n_gens]
    nid = n.identity

    def find(row) -> int:
        key = np.sort(row).astype(np.int64, copy=False).tobytes()
        try:
            return lookup[key]
        except KeyError:
            raise IntegrityError("parastrophy image is not in the clique list") from None

    def neighbours(i):
        S = spreads[i]
        # S s^-1 for every s in S: column j holds S * s_j^-1
        trans = mul[S[:, None], inv[S][None, :]]
        for j, s in enumerate(S):
            yield find(trans[:, j]), ("t", int(s))
        for t, cp in conj:
            yield find(cp[S]), ("c", t)
        yield find(inv[S]), ("i", None)

    def step(w, move):
        T, U, flag = w
        kind, x = move
        if kind == "t":
            s_inv = int(act.g_in_n[inv[x]])
            if not flag:
                return T, int(nmul[U, s_inv]), False
            return int(nmul[T, s_inv]), U, True
        if kind == "c":
            return int(nmul[T, x]), int(nmul[U, x]), flag
        return T, U, not flag

    seen = np.zeros(m_count, dtype=bool)
    classes = []
    for root in order:
        if seen[root]:
            continue
        seen[root] = True
        wit = {root: (nid, nid, False)}
        queue = [root]
        members = [root]
        while queue:
            i = queue.pop()
            for j, move in neighbours(i):
                if not seen[j]:
                    seen[j] = True
                    wit[j] = step(wit[i], move)
                    queue.append(j)
                    members.append(j)
        classes.append(ParastrophyClass(root, sorted(members), wit))
    return classes


def witness_matrices(cls: ParastrophyClass, member: int, n: LinearGroup):
    T, U, flag = cls.witnesses[member]
    return n.element(T), n.element(U), flag


def isotopy_witness_verify(s1: SpreadSet, s2: SpreadSet, T: Matrix, U: Matrix, inverted: bool) -> bool:
    """T^-1 s1 U == s2 (or s2^-1), plus T^-1 U in the target and
    T^-1 <s1> T == U^-1 <s1> U == <s2>."""
    Ti = mat_inv(T)
    image = {mat_mul(mat_mul(Ti, X), U) for X in s1.matrices}
    target = set(s2.inverse().matrices if inverted else s2.matrices)
    if image != target:
        return False
    if mat_mul(Ti, U) not in target:
        return False
    g1 = close(list(s1.matrices))
    g2 = close(list(s2.matrices))
    if g1.order != g2.order:
        return False
    Ui = mat_inv(U)
    for x in g1.generators:
        if mat_mul(mat_mul(Ti, x), T) not in g2 or mat_mul(mat_mul(Ui, x), U) not in g2:
            return False
    return True


def bruteforce_parastrophy_classes(spreads: np.ndarray, g: LinearGroup, gl: LinearGroup) -> list[list[int]]:
    """Classes under the full (T, U) in GL x GL action with optional inversion.

    ``gl`` is the whole of GL(d, p) as a LinearGroup.  Independent of the
    restricted generators: every pair (T, U) is tried.
    """
    m_count = len(spreads)
    in_gl = [g.element(int(x)) for x in range(g.order)]
    g_to_gl = np.array([gl.index_of(x) for x in in_gl])
    sets = [np.sort(g_to_gl[s]) for s in spreads]
    targets = {}
    for i, s in enumerate(sets):
        targets.setdefault(s.tobytes(), i)
        targets.setdefault(np.sort(gl.inv[s]).tobytes(), i)
    mul, inv = gl.mul, gl.inv
    all_u = np.arange(gl.order)
    parent = list(range(m_count))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, s in enumerate(sets):
        for t in range(gl.order):
            left = mul[inv[t], s]  # T^-1 X for X in S
            images = np.sort(mul[left[:, None], all_u[None, :]], axis=0)  # column per U
            for col in range(gl.order):
                j = targets.get(images[:, col].tobytes())
                if j is not None:
                    a, b = find(i), find(j)
                    if a != b:
                        parent[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for i in range(m_count):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


# ---------------------------------------------------------------------------
# Conway-Charnes fingerprint

def _fingerprint_from_signs(signs: np.ndarray) -> tuple:
    q1 = signs.shape[0]
    A = np.ones((q1 + 1, q1 + 1), dtype=np.int64)
    A[0, 0] = 0
    A[1:, 1:] = signs
    F = A @ A.T
    cnt = Counter(np.abs(F).ravel().tolist())
    return tuple(sorted(cnt.items()))


def fingerprint(s: SpreadSet) -> tuple:
    """Sorted (value, multiplicity) pairs of |F|, F = A A^t, from the signed
    matrix of det(U_i - U_j): 0 zero, +1 square, -1 nonsquare."""
    mats = list(s.matrices)
    p = mats[0].p
    k = len(mats)
    signs = np.zeros((k, k), dtype=np.int64)
    for i in range(k):
        for j in range(i + 1, k):
            dij = mat_det(mats[i] - mats[j])
            dji = mat_det(mats[j] - mats[i])
            signs[i, j] = 0 if dij == 0 else (1 if is_square(dij, p) else -1)
            signs[j, i] = 0 if dji == 0 else (1 if is_square(dji, p) else -1)
    return _fingerprint_from_signs(signs)


class FingerprintTable:
    """Fingerprints through group tables: det(X - Y) = det(X Y^-1 - I) det(Y)."""

    def __init__(self, g: LinearGroup):
        self.g = g
        p = g.p
        ident = Matrix.identity(g.d, p)
        chi = np.zeros(p, dtype=np.int64)
        for x in range(1, p):
            chi[x] = 1 if is_square(x, p) else -1
        els = g.elements
        self.chi_fpf = np.array([chi[mat_det(m - ident)] for m in els], dtype=np.int64)
        self.chi_det = np.array([chi[mat_det(m)] for m in els], dtype=np.int64)

    def signs(self, idx: np.ndarray) -> np.ndarray:
        g = self.g
        q = g.mul[idx[:, None], g.inv[idx][None, :]]
        return self.chi_fpf[q] * self.chi_det[idx][None, :]

    def __call__(self, idx: np.ndarray) -> tuple:
        return _fingerprint_from_signs(self.signs(np.asarray(idx)))


# ---------------------------------------------------------------------------
# autotopisms

@dataclass
class AutotopismGroup:
    pairs: list[tuple[int, int]]  # (T, U) as indices of n
    n: LinearGroup
    spread: np.ndarray  # indices of g
    orbit_profile: tuple[int, ...]
    affine_profile: tuple[int, ...] = ()
    point_orbits: list[list[int]] = field(default_factory=list)

    @property
    def order(self) -> int:
        return len(self.pairs)

    def pair_matrices(self, i: int) -> tuple[Matrix, Matrix]:
        t, u = self.pairs[i]
        return self.n.element(t), self.n.element(u)

    def as_group(self) -> "PairGroup":
        return PairGroup(self.pairs, self.n)


def autotopism_group(s, g: LinearGroup, n: LinearGroup, *, affine: bool = True) -> AutotopismGroup:
    """Pairs (T, U), T in n and U in T g, with T^-1 S U = S.

    Since 1 is in S, T^-1 U is itself a member of S, so U ranges over T S.
    """
    idx = spread_indices(s, g) if isinstance(s, SpreadSet) else np.asarray(s, dtype=np.int64)
    if generated_order(idx, g) != g.order:
        raise ValueError("spread set does not generate the group")
    act = _Action(g, n)
    S_n = act.g_in_n[idx]
    mask = np.zeros(n.order, dtype=bool)
    mask[S_n] = True
    pairs = []
    for t in range(n.order):
        C = n.conj_table[t, S_n]
        imgs = n.mul[C[:, None], S_n[None, :]]
        ok = mask[imgs].all(axis=0)
        for j in np.flatnonzero(ok):
            pairs.append((t, int(n.mul[t, S_n[j]])))
    pairs.sort()
    # infinite points: axis (0), axis (inf), then one point per member of S
    pos = {int(x): i + 2 for i, x in enumerate(S_n)}
    edges_src, edges_dst = [], []
    ninv = n.inv
    for t, u in pairs:
        img = n.mul[n.mul[ninv[t], S_n], u]
        edges_src.extend(range(2, len(S_n) + 2))
        edges_dst.extend(pos[int(x)] for x in img)
    npts = len(S_n) + 2
    orbits = _orbits(npts, edges_src, edges_dst)
    profile = tuple(sorted(len(o) for o in orbits))
    aff = _affine_profile(pairs, n) if affine else ()
    return AutotopismGroup(pairs, n, idx, profile, aff, orbits)


def _orbits(npts, src, dst):
    graph = coo_matrix((np.ones(len(src)), (np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64))),
                       shape=(npts, npts))
    _, labels = connected_components(graph, directed=True, connection="weak")
    out: dict[int, list[int]] = {}
    for v, lab in enumerate(labels):
        out.setdefault(int(lab), []).append(v)
    return sorted(out.values())


def _affine_profile(pairs, n: LinearGroup) -> tuple[int, ...]:
    """Orbit lengths on nonzero vectors (x, y) of V + V under (x, y) -> (xT, yU)."""
    q = n.n + 1
    ext = np.zeros((n.order, q), dtype=np.int64)
    ext[:, 1:] = n.perm + 1
    pts = np.arange(1, q * q)
    xs, ys = np.divmod(pts, q)
    src, dst = [], []
    for t, u in pairs:
        img = ext[t][xs] * q + ext[u][ys]
        src.append(pts - 1)
        dst.append(img - 1)
    orbits = _orbits(q * q - 1, np.concatenate(src), np.concatenate(dst))
    return tuple(sorted(len(o) for o in orbits))


# ---------------------------------------------------------------------------
# abstract structure of pair groups

class PairGroup:
    """The autotopism pairs as an abstract finite group with a product table."""

    def __init__(self, pairs, n: LinearGroup):
        self.pairs = list(pairs)
        self.index = {p: i for i, p in enumerate(self.pairs)}
        self.order = len(self.pairs)
        t = np.array([p[0] for p in self.pairs])
        u = np.array([p[1] for p in self.pairs])
        tt = n.mul[t[:, None], t[None, :]]
        uu = n.mul[u[:, None], u[None, :]]
        code = {p: i for i, p in enumerate(self.pairs)}
        self.mul = np.vectorize(lambda a, b: code[(int(a), int(b))])(tt, uu)
        self.identity = code[(n.identity, n.identity)]
        self.inv = np.argmax(self.mul == self.identity, axis=1)

    def is_closed(self) -> bool:
        return bool((self.mul >= 0).all())

    def power(self, x: int, k: int) -> int:
        out = self.identity
        for _ in range(k):
            out = int(self.mul[out, x])
        return out

    def element_order(self, x: int) -> int:
        y, k = x, 1
        while y != self.identity:
            y = int(self.mul[y, x])
            k += 1
        return k

    def closure(self, gens) -> set[int]:
        seen = {self.identity}
        stack = [self.identity]
        while stack:
            x = stack.pop()
            for s in gens:
                y = int(self.mul[x, s])
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen

    def commutator(self, a: int, b: int) -> int:
        m, inv = self.mul, self.inv
        return int(m[m[inv[a], inv[b]], m[a, b]])

    def derived(self, subset) -> list[int]:
        subset = sorted(subset)
        comms = {self.commutator(a, b) for a in subset for b in subset}
        # normal closure inside the subset's group is automatic: the set of
        # commutators of a group is closed under conjugation
        return sorted(self.closure(comms))

    def derived_series(self) -> tuple[int, ...]:
        cur = list(range(self.order))
        out = [len(cur)]
        while True:
            nxt = self.derived(cur)
            if len(nxt) == len(cur):
                break
            cur = nxt
            out.append(len(cur))
            if len(cur) == 1:
                break
        return tuple(out)

    def conjugacy_classes(self) -> list[list[int]]:
        m, inv = self.mul, self.inv
        seen = np.zeros(self.order, dtype=bool)
        out = []
        allg = np.arange(self.order)
        for x in range(self.order):
            if seen[x]:
                continue
            cls = np.unique(m[m[inv[allg], x], allg])
            seen[cls] = True
            out.append(cls.tolist())
        return out

    def center_order(self) -> int:
        return int((self.mul == self.mul.T).all(axis=0).sum())

    def invariants(self) -> dict:
        orders = [self.element_order(x) for x in range(self.order)]
        classes = self.conjugacy_classes()
        series = self.derived_series()
        return {
            "order": self.order,
            "derived_series": series,
            "abelianization_order": self.order // series[1] if len(series) > 1 else 1,
            "center_order": self.center_order(),
            "class_sizes": tuple(sorted((orders[c[0]], len(c)) for c in classes)),
            "element_orders": tuple(sorted(Counter(orders).items())),
        }


def compare_groups(a: PairGroup, b: PairGroup) -> dict:
    ia, ib = a.invariants(), b.invariants()
    differing = sorted(k for k in ia if ia[k] != ib[k])
    verdict = "nonisomorphic" if differing else "undecided"
    return {"verdict": verdict, "separating_invariants": differing, "a": ia, "b": ib}


def psl27_witness(gr: PairGroup):
    """Elements a, b with a^2 = b^3 = (ab)^7 = [a,b]^4 = 1 generating a group
    of order 168; these relations present PSL(2,7), so the group is PSL(2,7).
    Returns (a, b) or None."""
    if gr.order != 168:
        return None
    orders = [gr.element_order(x) for x in range(gr.order)]
    invols = [x for x in range(gr.order) if orders[x] == 2]
    threes = [x for x in range(gr.order) if orders[x] == 3]
    for a in invols:
        for b in threes:
            ab = int(gr.mul[a, b])
            if gr.power(ab, 7) != gr.identity:
                continue
            if gr.power(gr.commutator(a, b), 4) != gr.identity:
                continue
            if len(gr.closure([a, b])) == 168:
                return a, b
    return None


# ---------------------------------------------------------------------------
# quasifields

@dataclass
class Quasifield:
    p: int
    d: int
    table: np.ndarray  # (q, q) labels; label 0 = zero, label v + 1 = vector index v

    @property
    def q(self) -> int:
        return self.p**self.d

    @property
    def one(self) -> int:
        return 1

    def add_table(self) -> np.ndarray:
        q, p, d = self.q, self.p, self.d
        coords = np.zeros((q, d), dtype=np.int64)
        for v in range(1, q):
            coords[v] = index_to_vector(v - 1, p, d)
        s = (coords[:, None, :] + coords[None, :, :]) % p
        code = np.zeros((q, q), dtype=np.int64)
        for k in range(d):
            code = code * p + s[:, :, k]
        return code  # base-p code equals the label


def spread_to_quasifield(s: SpreadSet) -> Quasifield:
    """x . a(u) = x u where a(u) is the image of the anchor vector 0 under u."""
    mats = list(s.matrices)
    p, d = mats[0].p, mats[0].d
    q = p**d
    table = np.zeros((q, q), dtype=np.int64)
    labels = set()
    for u in mats:
        pu = perm_of(u)
        a = int(pu[0]) + 1
        if a in labels:
            raise ValueError("labelling is not bijective: invalid spread set")
        labels.add(a)
        table[1:, a] = pu + 1
    if len(labels) != q - 1:
        raise ValueError("labelling is not bijective: invalid spread set")
    return Quasifield(p, d, table)


def check_quasifield(Q: Quasifield) -> dict:
    """Exhaustive Q1-Q4 over all pairs and triples of the table."""
    q = Q.q
    add = Q.add_table()
    mul = Q.table
    ar = np.arange(q)

    def is_perm(row):
        return len(np.unique(row)) == len(row)

    q1 = bool((add == add.T).all() and (add[0] == ar).all() and all(is_perm(r) for r in add))
    for x in range(q):  # (x + y) + z == x + (y + z)
        if not q1:
            break
        q1 = bool((add[add[x]][:, ar] == add[x][add]).all())
    nz = mul[1:, 1:]
    latin = bool((nz > 0).all() and all(is_perm(r) for r in nz) and all(is_perm(c) for c in nz.T))
    q2 = latin and bool((mul[1, :] == ar).all() and (mul[:, 1] == ar).all())
    q3 = True
    for z in range(q):  # (x + y) z == x z + y z
        col = mul[:, z]
        if not (col[add] == add[col[:, None], col[None, :]]).all():
            q3 = False
            break
    q4 = bool((mul[:, 0] == 0).all())
    return {"Q1": q1, "Q2": q2, "Q3": q3, "Q4": q4}


def replay_witness(cls: ParastrophyClass, member: int, spreads: np.ndarray, g: LinearGroup, n: LinearGroup) -> bool:
    """T^-1 R U equals the member (or its inverse) by direct substitution."""
    T, U, flag = cls.witnesses[member]
    act = _Action(g, n)
    rep = act.g_in_n[spreads[cls.representative]]
    img = np.sort(n.mul[n.mul[n.inv[T], rep], U])
    target = act.g_in_n[spreads[member]]
    if flag:
        target = n.inv[target]
    return bool((img == np.sort(target)).all())


# ---------------------------------------------------------------------------
# per-case record

@dataclass
class ClassificationRecord:
    case_id: str
    cliques: int
    parastrophy_classes: int
    proper_G_classes: int
    distinct_fingerprints: int
    classes: list[ParastrophyClass] = field(default_factory=list, repr=False)

    def row(self) -> dict:
        return {
            "case_id": self.case_id,
            "cliques": self.cliques,
            "parastrophy_classes": self.parastrophy_classes,
            "proper_G_classes": self.proper_G_classes,
            "distinct_fingerprints": self.distinct_fingerprints,
        }


def classify(case_id: str, spreads: np.ndarray, g: LinearGroup, n: LinearGroup) -> ClassificationRecord:
    if len(spreads) == 0:
        return ClassificationRecord(case_id, 0, 0, 0, 0, [])
    classes = parastrophy_classes(spreads, g, n)
    ft = FingerprintTable(g)
    for c in classes:
        rep = spreads[c.representative]
        c.generates = generates_full_group(rep, g)
        c.fingerprint = ft(rep)
    proper = [c for c in classes if c.generates]
    fps = {c.fingerprint for c in proper}
    return ClassificationRecord(case_id, len(spreads), len(classes), len(proper), len(fps), classes)


def colliding_pairs(rec: ClassificationRecord) -> list[list[ParastrophyClass]]:
    """Groups of generating classes that share a fingerprint."""
    by_fp: dict[tuple, list[ParastrophyClass]] = {}
    for c in rec.classes:
        if c.generates:
            by_fp.setdefault(c.fingerprint, []).append(c)
    return [v for v in by_fp.values() if len(v) > 1]


def collision_report(rec: ClassificationRecord, spreads: np.ndarray, g: LinearGroup, n: LinearGroup) -> list[dict]:
    """Autotopism analysis of every fingerprint collision in a case."""
    out = []
    for group in colliding_pairs(rec):
        ags = [autotopism_group(spreads[c.representative], g, n) for c in group]
        pgs = [a.as_group() for a in ags]
        verdict = compare_groups(pgs[0], pgs[1]) if len(pgs) == 2 else {"verdict": "undecided",
                                                                          "separating_invariants": []}
        ids = [psl27_witness(x) for x in pgs]
        inf_differ = len({a.orbit_profile for a in ags}) > 1
        aff_differ = len({a.affine_profile for a in ags}) > 1
        entries = []
        for c, a, w in zip(group, ags, ids):
            entries.append({
                "case_id": rec.case_id,
                "class_rep_id": int(c.representative),
                "order": a.order,
                "orbit_profile": list(a.orbit_profile),
                "affine_profile": list(a.affine_profile),
                "iso_verdict": verdict["verdict"],
                "identified": "PSL(2,7)" if w is not None else None,
                "psl27_generators": None if w is None else [[m.to_json() for m in a.pair_matrices(i)] for i in w],
            })
        out.append({
            "members": entries,
            "separating_invariants": verdict["separating_invariants"],
            "infinite_profiles_differ": inf_differ,
            "affine_profiles_differ": aff_differ,
        })
    return out

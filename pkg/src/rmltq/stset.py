"""Permutation graphs and sharply transitive sets as cliques.

The vertices of the permutation graph of G are its fixed-point-free
elements; u ~ v when u v^-1 is fixed point free.  A sharply transitive set
containing the identity is the identity plus a clique of size |domain| - 1.

For each point x the vertices sharing an image of x are pairwise
non-adjacent, so "image of x" is a proper coloring of the graph.  The
enumerator uses it as its bound: branch on the color class with fewest
surviving candidates, prune as soon as an uncovered class is empty.  Each
clique is produced exactly once since it has exactly one vertex per class.
"""
from __future__ import annotations

import csv
import json
import logging
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fpmat import Matrix, encode_vectors, perm_of, vector_table
from .lingroup import LinearGroup

log = logging.getLogger(__name__)


class SearchBudgetExceeded(RuntimeError):
    pass


@dataclass
class PermGraph:
    group: LinearGroup
    vertices: list[int]  # group element indices, search order
    adjacency: list[int]  # bitsets over vertex positions
    position: dict[int, int] = field(repr=False, default_factory=dict)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return sum(a.bit_count() for a in self.adjacency) // 2

    def degree(self, v: int) -> int:
        return self.adjacency[v].bit_count()

    def adjacent(self, u: int, v: int) -> bool:
        return bool(self.adjacency[u] >> v & 1)

    def elements(self, clique) -> list[int]:
        return [self.vertices[v] for v in clique]

    def matrices(self, clique) -> list[Matrix]:
        return [self.group.element(self.vertices[v]) for v in clique]


def _bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def _to_bitset(mask_row: np.ndarray) -> int:
    packed = np.packbits(mask_row.astype(np.uint8), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def build_graph(g: LinearGroup, restrict_to=None) -> PermGraph:
    """Permutation graph of g.  ``restrict_to`` optionally limits the vertex
    set to a subset of element indices (used for block stabilizers)."""
    fpf = np.flatnonzero(g.fpf)
    if restrict_to is not None:
        keep = np.zeros(g.order, dtype=bool)
        keep[list(restrict_to)] = True
        fpf = fpf[keep[fpf]]
    if len(fpf) == 0:
        return PermGraph(g, [], [], {})
    m, inv = g.mul, g.inv
    adj = g.fpf[m[np.ix_(fpf, inv[fpf])]]
    np.fill_diagonal(adj, False)
    deg = adj.sum(axis=1)
    order = sorted(range(len(fpf)), key=lambda i: (-int(deg[i]), g.keys[fpf[i]]))
    verts = fpf[order]
    adj = adj[np.ix_(order, order)]
    bitsets = [_to_bitset(row) for row in adj]
    vlist = [int(v) for v in verts]
    return PermGraph(g, vlist, bitsets, {v: i for i, v in enumerate(vlist)})


# ---------------------------------------------------------------------------
# enumeration

class _CoverSearch:
    """All cliques K with K + {1} sharply transitive on ``domain``."""

    def __init__(self, graph: PermGraph, domain, anchors=None, node_budget=None):
        self.graph = graph
        self.domain = sorted(domain)
        dom = set(self.domain)
        self.anchors = list(anchors) if anchors else [self.domain[0]]
        if not set(self.anchors) <= dom:
            raise ValueError("anchors must lie in the domain")
        perm = graph.group.perm
        verts = np.array(graph.vertices, dtype=np.int64)
        # only vertices mapping the domain onto itself can take part
        if len(verts):
            dmask = np.zeros(graph.group.n, dtype=bool)
            dmask[self.domain] = True
            ok = dmask[perm[np.ix_(verts, self.domain)]].all(axis=1)
        else:
            ok = np.zeros(0, dtype=bool)
        self.usable = _to_bitset(ok) if len(ok) else 0
        self.images = perm[np.ix_(verts, self.anchors)] if len(verts) else np.zeros((0, len(self.anchors)), int)
        self.classes = []
        for ai, x in enumerate(self.anchors):
            cls = {}
            col = self.images[:, ai] if len(verts) else []
            for v, y in enumerate(col):
                if ok[v]:
                    cls[int(y)] = cls.get(int(y), 0) | (1 << v)
            self.classes.append(cls)
        self.node_budget = node_budget
        self.nodes = 0

    def initial_state(self, seed=()):
        cand = self.usable
        rem = [set(self.domain) - {x} for x in self.anchors]
        for v in seed:
            cand &= self.graph.adjacency[v]
            for ai in range(len(self.anchors)):
                rem[ai].discard(int(self.images[v, ai]))
        return cand, rem

    def choose(self, cand, rem):
        best, best_c = None, None
        for ai, r in enumerate(rem):
            cls = self.classes[ai]
            for y in r:
                c = (cand & cls.get(y, 0)).bit_count()
                if best_c is None or c < best_c:
                    best, best_c = (ai, y), c
                    if c == 0:
                        return best, 0
        return best, best_c

    def run(self, cand, rem, chosen, out):
        self.nodes += 1
        if self.node_budget is not None and self.nodes > self.node_budget:
            raise SearchBudgetExceeded(f"clique search exceeded {self.node_budget} nodes")
        if not rem[0]:
            out.append(tuple(sorted(chosen)))
            return
        (ai, y), c = self.choose(cand, rem)
        if c == 0:
            return
        adj = self.graph.adjacency
        images = self.images
        for v in _bits(cand & self.classes[ai][y]):
            nrem = [r - {int(images[v, a])} for a, r in enumerate(rem)]
            chosen.append(v)
            self.run(cand & adj[v], nrem, chosen, out)
            chosen.pop()

    def root_branches(self, seed=()):
        cand, rem = self.initial_state(seed)
        if not rem[0]:
            return cand, rem, None, []
        (ai, y), c = self.choose(cand, rem)
        branch = list(_bits(cand & self.classes[ai][y])) if c else []
        return cand, rem, (ai, y), branch


def _generic_cliques(graph: PermGraph, k: int, seed=(), node_budget=None) -> list[tuple[int, ...]]:
    """All k-cliques containing seed; greedy-coloring branch and bound."""
    adj = graph.adjacency
    out = []
    nodes = 0
    cand0 = (1 << graph.num_vertices) - 1
    for v in seed:
        cand0 &= adj[v]

    def coloring(P):
        order, colors = [], []
        color = 0
        Q = P
        while Q:
            color += 1
            avail = Q
            while avail:
                low = avail & -avail
                v = low.bit_length() - 1
                avail &= ~adj[v] & ~low
                Q &= ~low
                order.append(v)
                colors.append(color)
        return order, colors

    def expand(R, P):
        nonlocal nodes
        nodes += 1
        if node_budget is not None and nodes > node_budget:
            raise SearchBudgetExceeded(f"clique search exceeded {node_budget} nodes")
        if len(R) == k:
            out.append(tuple(sorted(R)))
            return
        order, colors = coloring(P)
        for v, c in zip(reversed(order), reversed(colors)):
            if len(R) + c < k:
                return
            expand(R + [v], P & adj[v])
            P &= ~(1 << v)

    expand(list(seed), cand0)
    return sorted(out)


def _run_branch(args):
    graph, domain, anchors, seed, v, node_budget = args
    s = _CoverSearch(graph, domain, anchors, node_budget)
    cand, rem = s.initial_state(list(seed) + [v])
    out = []
    s.run(cand, rem, list(seed) + [v], out)
    return out, s.nodes


def enumerate_cliques(graph: PermGraph, k: int, domain=None, *, anchors=None, node_budget=None,
                      workers: int = 1, checkpoint_dir=None, seed=()) -> list[tuple[int, ...]]:
    """All cliques of size exactly k (vertex positions, sorted).

    With ``domain`` (default: every nonzero vector) and k = |domain| - 1 the
    search returns the cliques that together with the identity act sharply
    transitively on the domain.  Any other k falls back to a greedy-coloring
    branch and bound over all k-cliques.

    The root is split by the candidates of the first branching class; with
    ``checkpoint_dir`` each finished root branch is stored and reused on rerun.
    """
    n = graph.group.n
    domain = list(range(n)) if domain is None else sorted(domain)
    seed = tuple(seed)
    if k != len(domain) - 1:
        return _generic_cliques(graph, k, seed, node_budget)
    if len(seed) >= k:
        return [tuple(sorted(seed))] if len(seed) == k else []
    search = _CoverSearch(graph, domain, anchors, node_budget)
    cand, rem, col, branch = search.root_branches(seed)
    if col is None:
        return [tuple(sorted(seed))]
    ckpt = Path(checkpoint_dir) if checkpoint_dir else None
    if ckpt:
        ckpt.mkdir(parents=True, exist_ok=True)
    results: dict[int, list] = {}
    todo = []
    for v in branch:
        f = ckpt / f"branch_{v}.pkl" if ckpt else None
        if f is not None and f.exists():
            results[v] = pickle.loads(f.read_bytes())
        else:
            todo.append(v)
    jobs = [(graph, domain, anchors, seed, v, node_budget) for v in todo]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_run_branch, jobs))
    else:
        outs = [_run_branch(j) for j in jobs]
    for v, (res, nodes) in zip(todo, outs):
        results[v] = res
        if ckpt:
            (ckpt / f"branch_{v}.pkl").write_bytes(pickle.dumps(res))
    out = [c for v in branch for c in results[v]]
    return sorted(out)


def extend_to_size(graph: PermGraph, seed, k: int, domain=None, **kw) -> list[tuple[int, ...]]:
    """All k-cliques containing the clique ``seed``; empty certifies that the
    seed does not extend."""
    seed = tuple(seed)
    if len(seed) == k:
        return [tuple(sorted(seed))]
    return enumerate_cliques(graph, k, domain, seed=seed, **kw)


# ---------------------------------------------------------------------------
# spread sets and the independent oracle

@dataclass(frozen=True)
class SpreadSet:
    matrices: tuple[Matrix, ...]
    source_case: str = ""

    def __post_init__(self):
        object.__setattr__(self, "matrices", tuple(sorted(self.matrices)))

    def __len__(self):
        return len(self.matrices)

    @property
    def p(self) -> int:
        return self.matrices[0].p

    @property
    def d(self) -> int:
        return self.matrices[0].d

    def contains_identity(self) -> bool:
        return Matrix.identity(self.d, self.p) in self.matrices

    def inverse(self) -> "SpreadSet":
        return SpreadSet(tuple(m.inv() for m in self.matrices), self.source_case)

    def to_json(self) -> list[list[int]]:
        return [m.to_json() for m in self.matrices]


def spread_from_clique(graph: PermGraph, clique, source_case: str = "") -> SpreadSet:
    g = graph.group
    mats = [g.element(g.identity)] + graph.matrices(clique)
    return SpreadSet(tuple(mats), source_case)


def verify_sharply_transitive(s, domain=None) -> bool:
    """Direct coverage check: every (x, y) in the domain has exactly one
    member mapping x to y.  ``s`` is a SpreadSet or a list of matrices."""
    mats = s.matrices if isinstance(s, SpreadSet) else list(s)
    if not mats:
        return False
    p, d = mats[0].p, mats[0].d
    n = p**d - 1
    dom = np.arange(n) if domain is None else np.array(sorted(domain))
    if len(mats) != len(dom):
        return False
    pos = np.full(n + 1, -1)
    pos[dom] = np.arange(len(dom))
    vt = vector_table(p, d)[dom]
    M = np.array([m.entries for m in mats], dtype=np.int64).reshape(len(mats), d, d)
    imgs = encode_vectors(np.einsum("vi,kij->kvj", vt, M) % p, p)  # imgs[k, x] = x m_k
    cols = pos[imgs]  # -1 marks zero or a point outside the domain
    if (cols < 0).any():
        return False
    table = np.zeros((len(dom), len(dom)), dtype=np.int64)
    rows = np.broadcast_to(np.arange(len(dom)), cols.shape)
    np.add.at(table, (rows.ravel(), cols.ravel()), 1)
    return bool((table == 1).all())


def block_subclique(members, block, group: LinearGroup | None = None):
    """Members mapping ``block`` onto itself.  ``members`` are matrices, or
    element indices of ``group``."""
    block = sorted(block)
    bset = set(block)
    out = []
    for x in members:
        img = perm_of(x) if isinstance(x, Matrix) else group.perm[x]
        if all(int(img[v]) in bset for v in block):
            out.append(x)
    return out


# ---------------------------------------------------------------------------
# persistence

def write_clique_store(path, case_id: str, graph: PermGraph, cliques) -> None:
    g = graph.group
    with open(path, "w") as fh:
        for c in cliques:
            keys = [g.element(graph.vertices[v]).to_json() for v in c]
            fh.write(json.dumps({"case_id": case_id, "vertex_keys": keys}) + "\n")


def read_clique_store(path, graph: PermGraph) -> list[tuple[int, ...]]:
    g = graph.group
    out = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            keys = np.array(rec["vertex_keys"], dtype=np.int64)
            idx = _matrix_rows_to_indices(g, keys)
            out.append(tuple(sorted(graph.position[int(i)] for i in idx)))
    return out


def _matrix_rows_to_indices(g: LinearGroup, entries: np.ndarray) -> np.ndarray:
    d, p = g.d, g.p
    rows = entries.reshape(len(entries), d, d)
    code = np.zeros(rows.shape[:2], dtype=np.int64)
    for k in range(d):
        code = code * p + rows[:, :, k]
    idx = g.lookup_keys(code - 1)
    if (idx < 0).any():
        raise ValueError("clique store lists a matrix outside the group")
    return idx


def write_summary_csv(path, rows) -> None:
    rows = list(rows)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["case_id", "graph_vertices", "clique_count"])
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in ("case_id", "graph_vertices", "clique_count")})

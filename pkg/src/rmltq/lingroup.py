"""Fully enumerated finite subgroups of GL(d, p).

Every element is stored; an element's internal key is the tuple of vector
indices of its rows, which sorts exactly like the row-major entry tuple.
Groups in scope have at most a few thousand elements, so permutation,
multiplication and inverse tables are plain numpy arrays.
"""
from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .fpmat import (
    Matrix,
    charpoly,
    gl_order,
    index_to_vector,
    is_fixed_point_free,
    iter_gl,
    mat_det,
    mat_inv,
    mat_mul,
    nullspace,
    perm_of,
    vector_to_index,
)

log = logging.getLogger(__name__)

DEFAULT_ORDER_BUDGET = 10**5
MUL_TABLE_LIMIT = 6000

__all__ = [
    "BlockSystem",
    "GroupBudgetError",
    "LinearGroup",
    "close",
    "is_fixed_point_free",
    "is_transitive",
    "load_group",
    "minimal_blocks",
    "normalizer_in_gl",
    "normalizer_in_gl_scan",
    "normalizer_in_group",
    "save_group",
    "subgroup_orbits",
    "sylow_subgroup",
]


class GroupBudgetError(RuntimeError):
    pass


def _basis_indices(p: int, d: int) -> tuple[int, ...]:
    return tuple(vector_to_index([int(i == j) for j in range(d)], p) for i in range(d))


def _key_to_matrix(key, p: int, d: int) -> Matrix:
    return Matrix(d, p, tuple(x for r in key for x in index_to_vector(r, p, d)))


class LinearGroup:
    """A finite matrix group with all elements enumerated in lex order."""

    def __init__(self, p: int, d: int, generators, keys):
        self.p = p
        self.d = d
        self.n = p**d - 1
        self.generators = list(generators)
        self.keys = sorted(keys)
        self.index = {k: i for i, k in enumerate(self.keys)}
        self.order = len(self.keys)
        ident = _basis_indices(p, d)
        self.identity = self.index[ident]

    def __len__(self):
        return self.order

    def __repr__(self):
        return f"LinearGroup(p={self.p}, d={self.d}, order={self.order})"

    def __contains__(self, m: Matrix) -> bool:
        return m.row_indices() in self.index

    def element(self, i: int) -> Matrix:
        return _key_to_matrix(self.keys[i], self.p, self.d)

    @cached_property
    def elements(self) -> list[Matrix]:
        return [self.element(i) for i in range(self.order)]

    def index_of(self, m: Matrix) -> int:
        return self.index[m.row_indices()]

    @cached_property
    def key_array(self) -> np.ndarray:
        return np.array(self.keys, dtype=np.int64).reshape(self.order, self.d)

    @cached_property
    def perm(self) -> np.ndarray:
        """perm[g, v] = index of v * element g."""
        from .fpmat import encode_vectors, vector_table

        vt = vector_table(self.p, self.d)
        rows = vt[self.key_array]  # (N, d, d) matrices
        imgs = np.einsum("vk,gkj->gvj", vt, rows) % self.p
        return encode_vectors(imgs, self.p).astype(np.int32)

    @cached_property
    def _codes(self) -> np.ndarray:
        code = np.zeros(self.order, dtype=np.int64)
        for k in range(self.d):
            code = code * self.n + self.key_array[:, k]
        return code

    def lookup_keys(self, keys: np.ndarray) -> np.ndarray:
        """Element indices for an array of keys (last axis length d); -1 if absent."""
        code = np.zeros(keys.shape[:-1], dtype=np.int64)
        for k in range(self.d):
            code = code * self.n + keys[..., k]
        pos = np.searchsorted(self._codes, code)
        pos = np.minimum(pos, self.order - 1)
        return np.where(self._codes[pos] == code, pos, -1)

    @cached_property
    def mul(self) -> np.ndarray:
        """mul[a, b] = index of element_a * element_b."""
        if self.order > MUL_TABLE_LIMIT:
            raise GroupBudgetError(f"multiplication table for order {self.order} is too large")
        out = np.empty((self.order, self.order), dtype=np.int32)
        K = self.key_array
        for a in range(self.order):
            out[a] = self.lookup_keys(self.perm[:, K[a]])
        return out

    @cached_property
    def inv(self) -> np.ndarray:
        basis = np.array(_basis_indices(self.p, self.d))
        invperm = np.argsort(self.perm, axis=1)
        return self.lookup_keys(invperm[:, basis]).astype(np.int32)

    def conj(self, x: int, y: int) -> int:
        """Index of x^-1 y x."""
        return int(self.mul[self.mul[self.inv[x], y], x])

    @cached_property
    def conj_table(self) -> np.ndarray:
        """conj_table[x, y] = x^-1 y x."""
        m = self.mul
        left = m[self.inv]  # left[x, y] = x^-1 y
        return m[left, np.arange(self.order)[:, None]]

    def product(self, a: int, b: int) -> int:
        key = tuple(int(self.perm[b, r]) for r in self.keys[a])
        return self.index[key]

    @cached_property
    def fpf(self) -> np.ndarray:
        """Boolean mask of fixed-point-free elements."""
        return ~(self.perm == np.arange(self.n)[None, :]).any(axis=1)

    @cached_property
    def element_orders(self) -> np.ndarray:
        out = np.zeros(self.order, dtype=np.int64)
        for g in range(self.order):
            x, k = g, 1
            while x != self.identity:
                x = self.product(x, g)
                k += 1
            out[g] = k
        return out

    @cached_property
    def charpolys(self) -> list[tuple[int, ...]]:
        return [charpoly(m) for m in self.elements]

    def subgroup(self, indices, generators=None) -> "LinearGroup":
        """The subgroup given by a set of element indices (assumed closed)."""
        keys = [self.keys[i] for i in indices]
        if generators is None:
            generators = small_generating_set(self, sorted(indices))
        return LinearGroup(self.p, self.d, generators, keys)

    def indices_in(self, other: "LinearGroup") -> np.ndarray:
        """Indices of this group's elements inside a supergroup."""
        idx = other.lookup_keys(self.key_array)
        if (idx < 0).any():
            raise ValueError("not a subgroup of the given group")
        return idx

    def closure_indices(self, gens) -> set[int]:
        seen = {self.identity}
        queue = deque([self.identity])
        gens = list(gens)
        m = self.mul if self.order <= MUL_TABLE_LIMIT else None
        while queue:
            x = queue.popleft()
            for s in gens:
                y = int(m[x, s]) if m is not None else self.product(x, s)
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        return seen

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "d": self.d,
            "order": self.order,
            "generators": [g.to_json() for g in self.generators],
        }


def small_generating_set(g: LinearGroup, indices=None) -> list[Matrix]:
    """Greedy generating set: walk elements in lex order, keeping each one not
    already in the span of those kept."""
    indices = range(g.order) if indices is None else indices
    target = len(indices)
    kept: list[int] = []
    span = {g.identity}
    for i in indices:
        if i in span:
            continue
        kept.append(i)
        span = g.closure_indices(kept)
        if len(span) == target:
            break
    return [g.element(i) for i in kept]


def close(generators, budget: int = DEFAULT_ORDER_BUDGET) -> LinearGroup:
    """Breadth-first closure of a list of invertible matrices."""
    generators = list(generators)
    if not generators:
        raise ValueError("need at least one generator")
    p, d = generators[0].p, generators[0].d
    for m in generators:
        if (m.p, m.d) != (p, d):
            raise ValueError("generators differ in dimension or modulus")
        if mat_det(m) == 0:
            raise ValueError("generator is singular")
    gperms = [perm_of(m).tolist() for m in generators]
    start = _basis_indices(p, d)
    seen = {start}
    queue = deque([start])
    while queue:
        key = queue.popleft()
        for gp in gperms:
            new = tuple(gp[r] for r in key)
            if new not in seen:
                seen.add(new)
                if len(seen) > budget:
                    raise GroupBudgetError(f"closure exceeded order budget {budget}")
                queue.append(new)
    return LinearGroup(p, d, generators, seen)


def closure_order(generators, budget: int) -> int:
    """Order of the generated group, or -1 as soon as it exceeds budget."""
    try:
        return close(generators, budget).order
    except GroupBudgetError:
        return -1


def orbit(g: LinearGroup, v: int) -> list[int]:
    gens = [perm_of(m) for m in g.generators] or [np.arange(g.n)]
    seen = {v}
    queue = [v]
    while queue:
        x = queue.pop()
        for s in gens:
            y = int(s[x])
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return sorted(seen)


def is_transitive(g: LinearGroup) -> bool:
    return len(orbit(g, 0)) == g.n


def subgroup_orbits(h: LinearGroup) -> list[list[int]]:
    """Partition of the nonzero vectors into h-orbits, ordered by minimum."""
    remaining = set(range(h.n))
    out = []
    while remaining:
        v = min(remaining)
        orb = orbit(h, v)
        remaining.difference_update(orb)
        out.append(orb)
    return out


# ---------------------------------------------------------------------------
# normalizers

def _residuals(g: Matrix, h: Matrix, basis):
    """For each basis matrix B, the vector g B - B h."""
    d, p = g.d, g.p
    out = []
    for b in basis:
        B = Matrix(d, p, b)
        out.append(tuple((x - y) % p for x, y in zip(mat_mul(g, B).entries, mat_mul(B, h).entries)))
    return out


def _intersect(basis, g: Matrix, h: Matrix):
    """Basis of {T in span(basis) : g T = T h}."""
    if not basis:
        return []
    p = g.p
    res = _residuals(g, h, basis)
    n_eq = len(res[0])
    rows = [[res[b][e] for b in range(len(basis))] for e in range(n_eq)]
    lam = nullspace(rows, p, len(basis))
    out = []
    for coeffs in lam:
        v = [0] * len(basis[0])
        for c, b in zip(coeffs, basis):
            if c:
                v = [(x + c * y) % p for x, y in zip(v, b)]
        out.append(tuple(v))
    return out


def _span(basis, p):
    if not basis:
        yield (0,) * 0
        return
    size = len(basis[0])
    k = len(basis)
    coeffs = [0] * k
    while True:
        v = [0] * size
        for c, b in zip(coeffs, basis):
            if c:
                v = [(x + c * y) % p for x, y in zip(v, b)]
        yield tuple(v)
        i = 0
        while i < k:
            coeffs[i] += 1
            if coeffs[i] < p:
                break
            coeffs[i] = 0
            i += 1
        if i == k:
            return


def normalizer_in_gl(g: LinearGroup, enum_limit: int = 4096) -> LinearGroup:
    """N_{GL(d,p)}(g).

    T normalizes g iff T^-1 s T lies in g for every generator s.  For each
    candidate image h of a generator the matrices T with s T = T h form a
    linear subspace, so the search walks generator images (filtered by
    characteristic polynomial) and intersects these subspaces, enumerating a
    subspace outright once it has at most ``enum_limit`` elements.
    """
    p, d = g.p, g.d
    gens = small_generating_set(g)
    if not gens:
        gens = [Matrix.identity(d, p)]
    cps = g.charpolys
    candidates = []
    for s in gens:
        cp = charpoly(s)
        candidates.append([g.element(i) for i in range(g.order) if cps[i] == cp])
    # most restrictive generator first
    order = sorted(range(len(gens)), key=lambda i: len(candidates[i]))
    gens = [gens[i] for i in order]
    candidates = [candidates[i] for i in order]

    full = [tuple(int(i == j) for j in range(d * d)) for i in range(d * d)]
    found: set[Matrix] = set()

    def check(T: Matrix, start: int) -> bool:
        if mat_det(T) == 0:
            return False
        Ti = mat_inv(T)
        return all(mat_mul(mat_mul(Ti, s), T) in g for s in gens[start:])

    def rec(level: int, basis):
        if not basis:
            return
        if level == len(gens) or p ** len(basis) <= enum_limit:
            for v in _span(basis, p):
                T = Matrix(d, p, v)
                if check(T, level):
                    found.add(T)
            return
        for h in candidates[level]:
            rec(level + 1, _intersect(basis, gens[level], h))

    rec(0, full)
    mats = sorted(found)
    keys = [m.row_indices() for m in mats]
    tmp = LinearGroup(p, d, mats[:1], keys)
    norm = LinearGroup(p, d, small_generating_set(tmp), keys)
    # defensive: the collected set must be a group containing g
    if len(norm.closure_indices([norm.index_of(m) for m in norm.generators])) != norm.order:
        raise RuntimeError("normalizer computation produced a non-group")
    return norm


def normalizer_in_gl_scan(g: LinearGroup, scan_budget: int = 3 * 10**7) -> LinearGroup:
    """N_{GL(d,p)}(g) by streaming all of GL(d,p).  Slow; used as an oracle."""
    if gl_order(g.d, g.p) > scan_budget:
        raise GroupBudgetError("GL(d,p) exceeds the scan budget")
    gens = g.generators or [Matrix.identity(g.d, g.p)]
    found = []
    for T in iter_gl(g.d, g.p):
        Ti = mat_inv(T)
        if all(mat_mul(mat_mul(Ti, s), T) in g for s in gens):
            found.append(T)
    keys = [m.row_indices() for m in found]
    tmp = LinearGroup(g.p, g.d, found[:1], keys)
    return LinearGroup(g.p, g.d, small_generating_set(tmp), keys)


def normalizer_in_group(g: LinearGroup, h: LinearGroup) -> LinearGroup:
    """{x in g : x^-1 h x = h}."""
    h_in_g = h.indices_in(g)
    mask = np.zeros(g.order, dtype=bool)
    mask[h_in_g] = True
    hgens = [g.index_of(m) for m in h.generators] or [g.identity]
    ct = g.conj_table
    keep = np.ones(g.order, dtype=bool)
    for s in hgens:
        keep &= mask[ct[:, s]]
    return g.subgroup(np.flatnonzero(keep).tolist())


def _prime_part(n: int, q: int) -> int:
    out = 1
    while n % q == 0:
        n //= q
        out *= q
    return out


def sylow_subgroup(g: LinearGroup, q: int) -> LinearGroup:
    """A Sylow q-subgroup, grown one factor of q at a time by adjoining the
    lex-least x in N_g(P) \\ P with x^q in P."""
    if g.order % q:
        raise ValueError(f"{q} does not divide the group order {g.order}")
    target = _prime_part(g.order, q)
    m = g.mul
    members = {g.identity}
    gens: list[int] = []
    ct = g.conj_table
    while len(members) < target:
        mask = np.zeros(g.order, dtype=bool)
        mask[list(members)] = True
        keep = np.ones(g.order, dtype=bool)
        for s in gens:
            keep &= mask[ct[:, s]]
        chosen = None
        for x in np.flatnonzero(keep & ~mask):
            y = int(x)
            for _ in range(q - 1):
                y = int(m[y, x])
            if y in members:
                chosen = int(x)
                break
        if chosen is None:
            raise RuntimeError("Sylow growth stalled; group tables inconsistent")
        gens.append(chosen)
        members = g.closure_indices(gens)
    return g.subgroup(sorted(members), [g.element(i) for i in gens])


# ---------------------------------------------------------------------------
# blocks of imprimitivity

@dataclass(frozen=True)
class BlockSystem:
    block_size: int
    blocks: tuple[tuple[int, ...], ...]

    def block_of(self, v: int) -> tuple[int, ...]:
        for b in self.blocks:
            if v in b:
                return b
        raise KeyError(v)


def _minimal_block_system(gperms, n: int, a: int, b: int) -> BlockSystem:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx == ry:
            return False
        if rx > ry:
            rx, ry = ry, rx
        parent[ry] = rx
        return True

    union(a, b)
    queue = [(a, b)]
    while queue:
        x, y = queue.pop()
        for s in gperms:
            u, v = s[x], s[y]
            if find(u) != find(v):
                union(u, v)
                queue.append((u, v))
    classes: dict[int, list[int]] = {}
    for v in range(n):
        classes.setdefault(find(v), []).append(v)
    blocks = tuple(sorted(tuple(c) for c in classes.values()))
    return BlockSystem(len(blocks[0]), blocks)


def minimal_blocks(g: LinearGroup) -> list[BlockSystem]:
    """Distinct nontrivial block systems that are the finest ones joining the
    point 0 with some other point."""
    gperms = [perm_of(m).tolist() for m in g.generators]
    seen = {}
    for b in range(1, g.n):
        bs = _minimal_block_system(gperms, g.n, 0, b)
        if bs.block_size < g.n:
            seen.setdefault(bs.blocks, bs)
    return sorted(seen.values(), key=lambda s: (s.block_size, s.blocks))


def is_block_system(g: LinearGroup, bs: BlockSystem) -> bool:
    lookup = {}
    for i, blk in enumerate(bs.blocks):
        for v in blk:
            lookup[v] = i
    perm = g.perm
    for blk in bs.blocks:
        imgs = perm[:, list(blk)]
        first = np.vectorize(lookup.get)(imgs)
        if not (first == first[:, :1]).all():
            return False
    return True


# ---------------------------------------------------------------------------
# persistence

def save_group(g: LinearGroup, path) -> None:
    Path(path).write_text(json.dumps(g.to_json()))


def load_group(path_or_dict) -> LinearGroup:
    data = path_or_dict
    if not isinstance(data, dict):
        data = json.loads(Path(path_or_dict).read_text())
    p, d = data["p"], data["d"]
    gens = [Matrix(d, p, tuple(e)) for e in data["generators"]]
    g = close(gens)
    if g.order != data["order"]:
        raise ValueError(f"declared order {data['order']} but generators give {g.order}")
    return g

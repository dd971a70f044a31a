"""Exact arithmetic over GF(p), small extensions GF(p^e), and d x d matrices.

Nonzero vectors of GF(p)^d are named by integers in [0, p^d - 1): the
coordinate tuple read as a base-p number (last coordinate fastest), minus one
for the zero vector.  Matrices act on row vectors from the right.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_DIM = 6
MAX_PRIME = 61


class FieldError(ValueError):
    pass


class SingularMatrixError(ArithmeticError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % k for k in range(2, int(n**0.5) + 1))


@dataclass(frozen=True)
class PrimeField:
    p: int

    def __post_init__(self):
        if not is_prime(self.p) or self.p > MAX_PRIME:
            raise FieldError(f"unsupported prime modulus {self.p}")

    def inv(self, x: int) -> int:
        x %= self.p
        if x == 0:
            raise ZeroDivisionError("0 has no inverse")
        return pow(x, self.p - 2, self.p)

    def squares(self) -> frozenset[int]:
        return frozenset((x * x) % self.p for x in range(1, self.p))


def is_square(x: int, field: PrimeField | int) -> bool:
    """Quadratic-residue test for nonzero x.  In characteristic 2 every
    nonzero element counts as a square."""
    p = field.p if isinstance(field, PrimeField) else field
    x %= p
    if x == 0:
        raise ValueError("is_square is undefined for 0")
    if p == 2:
        return True
    return pow(x, (p - 1) // 2, p) == 1


# ---------------------------------------------------------------------------
# polynomials over GF(p), coefficient lists low -> high

def _poly_trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mod(a, m, p):
    a = _poly_trim([c % p for c in a])
    m = _poly_trim(m)
    inv_lead = pow(m[-1], p - 2, p)
    while len(a) >= len(m):
        c = (a[-1] * inv_lead) % p
        shift = len(a) - len(m)
        for i, mc in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mc) % p
        a = _poly_trim(a)
    return a


def _poly_mul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _poly_trim(out)


def _poly_gcd(a, b, p):
    a, b = _poly_trim(a), _poly_trim(b)
    while b:
        a, b = b, _poly_mod(a, b, p)
    return a


def _poly_powmod(base, k, m, p):
    result = [1]
    base = _poly_mod(base, m, p)
    while k:
        if k & 1:
            result = _poly_mod(_poly_mul(result, base, p), m, p)
        base = _poly_mod(_poly_mul(base, base, p), m, p)
        k >>= 1
    return result


def is_irreducible(modulus, p: int) -> bool:
    """Ben-Or test: f of degree e is irreducible iff gcd(x^(p^i) - x, f) = 1
    for 1 <= i <= e // 2."""
    f = _poly_trim([c % p for c in modulus])
    e = len(f) - 1
    if e < 1:
        return False
    if e <= 3:
        return all(sum(c * pow(r, i, p) for i, c in enumerate(f)) % p for r in range(p))
    xpow = [0, 1]
    for _ in range(e // 2):
        xpow = _poly_powmod(xpow, p, f, p)
        diff = list(xpow) + [0] * max(0, 2 - len(xpow))
        diff[1] = (diff[1] - 1) % p
        if len(_poly_gcd(f, diff, p)) > 1:
            return False
    return True


@dataclass(frozen=True)
class ExtField:
    """GF(p^e) as GF(p)[x]/(modulus); elements are coefficient tuples of length e."""

    p: int
    e: int
    modulus: tuple[int, ...]

    def __post_init__(self):
        PrimeField(self.p)
        mod = tuple(c % self.p for c in self.modulus)
        object.__setattr__(self, "modulus", mod)
        if len(mod) != self.e + 1 or mod[-1] != 1:
            raise FieldError("modulus must be monic of degree e")
        if not is_irreducible(mod, self.p):
            raise FieldError(f"modulus {mod} is reducible over GF({self.p})")

    @property
    def order(self) -> int:
        return self.p**self.e

    def elem(self, coeffs) -> tuple[int, ...]:
        c = [x % self.p for x in coeffs]
        c += [0] * (self.e - len(c))
        if len(c) != self.e:
            raise FieldError("too many coefficients")
        return tuple(c)

    @property
    def zero(self):
        return (0,) * self.e

    @property
    def one(self):
        return (1,) + (0,) * (self.e - 1)

    def elements(self):
        for c in itertools.product(range(self.p), repeat=self.e):
            yield tuple(reversed(c))

    def add(self, a, b):
        return tuple((x + y) % self.p for x, y in zip(a, b))

    def sub(self, a, b):
        return tuple((x - y) % self.p for x, y in zip(a, b))

    def neg(self, a):
        return tuple((-x) % self.p for x in a)

    def mul(self, a, b):
        r = _poly_mod(_poly_mul(list(a), list(b), self.p), list(self.modulus), self.p)
        return self.elem(r)

    def pow(self, a, k: int):
        out = self.one
        for _ in range(k):
            out = self.mul(out, a)
        return out

    def inv(self, a):
        if a == self.zero:
            raise ZeroDivisionError("0 has no inverse")
        return self.pow(a, self.order - 2)

    def frobenius(self, a):
        return self.pow(a, self.p)

    def norm(self, a) -> int:
        """Norm to GF(p): the product of all Galois conjugates."""
        out, c = self.one, a
        for _ in range(self.e):
            out = self.mul(out, c)
            c = self.frobenius(c)
        if any(out[1:]):
            raise FieldError("norm did not land in the prime field")
        return out[0]

    def mult_matrix(self, a) -> tuple[int, ...]:
        """e x e matrix (row-major) of y -> y*a in the basis 1, x, ..., x^(e-1)."""
        rows = []
        for i in range(self.e):
            basis = [0] * self.e
            basis[i] = 1
            rows.extend(self.mul(tuple(basis), a))
        return tuple(rows)


GF9 = ExtField(3, 2, (1, 0, 1))
GF4 = ExtField(2, 2, (1, 1, 1))


# ---------------------------------------------------------------------------
# matrices over GF(p)

@dataclass(frozen=True, order=True)
class Matrix:
    d: int
    p: int
    entries: tuple[int, ...]

    def __post_init__(self):
        if not 1 <= self.d <= MAX_DIM:
            raise ValueError(f"dimension {self.d} outside 1..{MAX_DIM}")
        ent = tuple(int(x) % self.p for x in self.entries)
        if len(ent) != self.d * self.d:
            raise ValueError("entry count does not match dimension")
        object.__setattr__(self, "entries", ent)

    @classmethod
    def identity(cls, d: int, p: int) -> "Matrix":
        return cls(d, p, tuple(int(i == j) for i in range(d) for j in range(d)))

    @classmethod
    def scalar(cls, d: int, p: int, c: int) -> "Matrix":
        return cls(d, p, tuple(c if i == j else 0 for i in range(d) for j in range(d)))

    @classmethod
    def from_rows(cls, rows, p: int) -> "Matrix":
        rows = [list(r) for r in rows]
        return cls(len(rows), p, tuple(x for r in rows for x in r))

    def rows(self) -> list[tuple[int, ...]]:
        d = self.d
        return [self.entries[i * d:(i + 1) * d] for i in range(d)]

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.d + j]

    def __mul__(self, other: "Matrix") -> "Matrix":
        return mat_mul(self, other)

    def __sub__(self, other: "Matrix") -> "Matrix":
        _check_compatible(self, other)
        return Matrix(self.d, self.p, tuple(a - b for a, b in zip(self.entries, other.entries)))

    def __add__(self, other: "Matrix") -> "Matrix":
        _check_compatible(self, other)
        return Matrix(self.d, self.p, tuple(a + b for a, b in zip(self.entries, other.entries)))

    def inv(self) -> "Matrix":
        return mat_inv(self)

    def det(self) -> int:
        return mat_det(self)

    def transpose(self) -> "Matrix":
        d = self.d
        return Matrix(d, self.p, tuple(self.entries[j * d + i] for i in range(d) for j in range(d)))

    def is_identity(self) -> bool:
        return self == Matrix.identity(self.d, self.p)

    def row_indices(self) -> tuple[int, ...]:
        """Vector indices of the rows (all rows nonzero for invertible matrices)."""
        return tuple(vector_to_index(r, self.p) for r in self.rows())

    def to_json(self) -> list[int]:
        return list(self.entries)

    def __repr__(self):
        return f"Matrix(p={self.p}, {[list(r) for r in self.rows()]})"


def _check_compatible(a: Matrix, b: Matrix):
    if a.d != b.d or a.p != b.p:
        raise ValueError(f"incompatible matrices: ({a.d}, {a.p}) vs ({b.d}, {b.p})")


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    _check_compatible(a, b)
    d, p = a.d, a.p
    A, B = a.entries, b.entries
    out = []
    for i in range(d):
        row = A[i * d:(i + 1) * d]
        for j in range(d):
            s = 0
            for k in range(d):
                s += row[k] * B[k * d + j]
            out.append(s % p)
    return Matrix(d, p, tuple(out))


def _eliminate(rows: list[list[int]], p: int):
    """In-place row reduction; returns (rank, det factor sign/scale, pivot cols)."""
    n_rows = len(rows)
    n_cols = len(rows[0]) if rows else 0
    r = 0
    scale = 1
    pivots = []
    for c in range(n_cols):
        piv = next((i for i in range(r, n_rows) if rows[i][c] % p), None)
        if piv is None:
            continue
        if piv != r:
            rows[r], rows[piv] = rows[piv], rows[r]
            scale = -scale
        lead = rows[r][c] % p
        scale = scale * lead % p
        inv = pow(lead, p - 2, p)
        rows[r] = [(x * inv) % p for x in rows[r]]
        for i in range(n_rows):
            if i != r and rows[i][c] % p:
                f = rows[i][c]
                rows[i] = [(x - f * y) % p for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return r, scale % p, pivots


def mat_det(a: Matrix) -> int:
    rows = [list(r) for r in a.rows()]
    rank, scale, _ = _eliminate(rows, a.p)
    return scale if rank == a.d else 0


def mat_inv(a: Matrix) -> Matrix:
    d, p = a.d, a.p
    aug = [list(r) + [int(i == j) for j in range(d)] for i, r in enumerate(a.rows())]
    rank, _, pivots = _eliminate(aug, p)
    if rank < d or pivots[:d] != list(range(d)):
        raise SingularMatrixError(f"matrix is singular mod {p}")
    return Matrix(d, p, tuple(x for r in aug for x in r[d:]))


def mat_pow(a: Matrix, k: int) -> Matrix:
    if k < 0:
        return mat_pow(mat_inv(a), -k)
    out = Matrix.identity(a.d, a.p)
    base = a
    while k:
        if k & 1:
            out = out * base
        base = base * base
        k >>= 1
    return out


def mat_order(a: Matrix, limit: int = 10**6) -> int:
    ident = Matrix.identity(a.d, a.p)
    x = a
    for k in range(1, limit + 1):
        if x == ident:
            return k
        x = x * a
    raise ValueError("element order exceeds limit")


def rank(rows, p: int) -> int:
    rows = [list(r) for r in rows]
    if not rows:
        return 0
    return _eliminate(rows, p)[0]


def nullspace(rows, p: int, n_cols: int) -> list[tuple[int, ...]]:
    """Basis of {x : rows . x = 0} over GF(p)."""
    rows = [list(r) for r in rows if any(c % p for c in r)]
    if not rows:
        return [tuple(int(i == j) for j in range(n_cols)) for i in range(n_cols)]
    r, _, pivots = _eliminate(rows, p)
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for f in free:
        v = [0] * n_cols
        v[f] = 1
        for i, c in enumerate(pivots):
            v[c] = (-rows[i][f]) % p
        basis.append(tuple(v))
    return basis


def charpoly(a: Matrix) -> tuple[int, ...]:
    """det(xI - a) as a coefficient tuple, low -> high (cofactor expansion)."""
    d, p = a.d, a.p
    m = [[[(-a[i, j]) % p, 1] if i == j else [(-a[i, j]) % p] for j in range(d)] for i in range(d)]
    return tuple(_poly_det(m, p))


def _poly_det(m, p):
    n = len(m)
    if n == 1:
        return _poly_trim(m[0][0])
    total = []
    for j in range(n):
        if not _poly_trim(m[0][j]):
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = _poly_mul(_poly_trim(m[0][j]), _poly_det(minor, p), p)
        if j % 2:
            term = [(-c) % p for c in term]
        total = _poly_add(total, term, p)
    return total


def _poly_add(a, b, p):
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return _poly_trim([(x + y) % p for x, y in zip(a, b)])


def kron(a: Matrix, b: Matrix) -> Matrix:
    if a.p != b.p:
        raise ValueError("modulus mismatch")
    da, db = a.d, b.d
    d = da * db
    out = [0] * (d * d)
    for i1 in range(da):
        for j1 in range(da):
            x = a[i1, j1]
            for i2 in range(db):
                for j2 in range(db):
                    out[(i1 * db + i2) * d + j1 * db + j2] = x * b[i2, j2]
    return Matrix(d, a.p, tuple(out))


# ---------------------------------------------------------------------------
# matrices over an extension field: nested tuples of field elements

def ext_identity(field: ExtField, k: int):
    return tuple(tuple(field.one if i == j else field.zero for j in range(k)) for i in range(k))


def ext_mat_mul(field: ExtField, a, b):
    k = len(a)
    out = []
    for i in range(k):
        row = []
        for j in range(k):
            s = field.zero
            for t in range(k):
                s = field.add(s, field.mul(a[i][t], b[t][j]))
            row.append(s)
        out.append(tuple(row))
    return tuple(out)


def ext_mat_det(field: ExtField, a):
    k = len(a)
    rows = [list(r) for r in a]
    det = field.one
    for c in range(k):
        piv = next((i for i in range(c, k) if rows[i][c] != field.zero), None)
        if piv is None:
            return field.zero
        if piv != c:
            rows[c], rows[piv] = rows[piv], rows[c]
            det = field.neg(det)
        lead = rows[c][c]
        det = field.mul(det, lead)
        inv = field.inv(lead)
        for i in range(c + 1, k):
            if rows[i][c] != field.zero:
                f = field.mul(rows[i][c], inv)
                rows[i] = [field.sub(x, field.mul(f, y)) for x, y in zip(rows[i], rows[c])]
    return det


def blowup(m, field: ExtField) -> Matrix:
    """Replace each entry of a k x k matrix over GF(p^e) by its e x e
    multiplication matrix, giving a ke x ke matrix over GF(p)."""
    k, e = len(m), field.e
    d = k * e
    out = [0] * (d * d)
    for i in range(k):
        for j in range(k):
            block = field.mult_matrix(m[i][j])
            for r in range(e):
                for c in range(e):
                    out[(i * e + r) * d + j * e + c] = block[r * e + c]
    return Matrix(d, field.p, tuple(out))


# ---------------------------------------------------------------------------
# vector indexing and the action on nonzero vectors

def num_points(p: int, d: int) -> int:
    return p**d - 1


def vector_to_index(v, p: int) -> int:
    n = 0
    for c in v:
        n = n * p + (c % p)
    if n == 0:
        raise ValueError("the zero vector has no index")
    return n - 1


def index_to_vector(i: int, p: int, d: int) -> tuple[int, ...]:
    if not 0 <= i < p**d - 1:
        raise ValueError(f"vector index {i} out of range")
    n = i + 1
    out = []
    for _ in range(d):
        n, r = divmod(n, p)
        out.append(r)
    return tuple(reversed(out))


@lru_cache(maxsize=None)
def vector_table(p: int, d: int) -> np.ndarray:
    """(p^d - 1, d) array of coordinates, row i = index_to_vector(i)."""
    n = np.arange(1, p**d, dtype=np.int64)
    cols = []
    for _ in range(d):
        n, r = np.divmod(n, p)
        cols.append(r)
    out = np.stack(cols[::-1], axis=1)
    out.setflags(write=False)
    return out


def encode_vectors(coords: np.ndarray, p: int) -> np.ndarray:
    n = np.zeros(coords.shape[:-1], dtype=np.int64)
    for k in range(coords.shape[-1]):
        n = n * p + coords[..., k]
    return n - 1


def act(v: int, m: Matrix) -> int:
    x = index_to_vector(v, m.p, m.d)
    d, p = m.d, m.p
    y = [sum(x[k] * m.entries[k * d + j] for k in range(d)) % p for j in range(d)]
    return vector_to_index(y, p)


def perm_of(m: Matrix) -> np.ndarray:
    """The permutation v -> act(v, m) of all nonzero vector indices.
    Entries are -1 where a nonzero vector maps to zero (singular m)."""
    vt = vector_table(m.p, m.d)
    M = np.array(m.entries, dtype=np.int64).reshape(m.d, m.d)
    return encode_vectors((vt @ M) % m.p, m.p)


def is_fixed_point_free(m: Matrix) -> bool:
    """No nonzero v with v m = v, i.e. det(m - I) != 0."""
    return mat_det(m - Matrix.identity(m.d, m.p)) != 0


def gl_order(d: int, p: int) -> int:
    out = 1
    for i in range(d):
        out *= p**d - p**i
    return out


def iter_gl(d: int, p: int):
    """Stream GL(d, p) in lex order of the row-major entry tuple, pruning
    rank-deficient row prefixes."""
    vt = [index_to_vector(i, p, d) for i in range(p**d - 1)]
    vt.sort()

    def rec(prefix):
        if len(prefix) == d:
            yield Matrix(d, p, tuple(x for r in prefix for x in r))
            return
        for v in vt:
            if rank(prefix + [v], p) == len(prefix) + 1:
                yield from rec(prefix + [v])

    yield from rec([])

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmltq.fpmat import (
    GF4,
    GF9,
    ExtField,
    FieldError,
    Matrix,
    PrimeField,
    SingularMatrixError,
    act,
    blowup,
    charpoly,
    ext_mat_det,
    ext_mat_mul,
    gl_order,
    index_to_vector,
    is_fixed_point_free,
    is_irreducible,
    is_square,
    iter_gl,
    kron,
    mat_det,
    mat_inv,
    mat_mul,
    mat_order,
    mat_pow,
    nullspace,
    perm_of,
    rank,
    vector_to_index,
)

PRIMES = [2, 3, 5, 7, 11]


@st.composite
def matrices(draw, p=None, d=None):
    p = p or draw(st.sampled_from(PRIMES))
    d = d or draw(st.integers(1, 4))
    entries = draw(st.lists(st.integers(0, p - 1), min_size=d * d, max_size=d * d))
    return Matrix(d, p, tuple(entries))


@st.composite
def matrix_pairs(draw):
    p = draw(st.sampled_from(PRIMES))
    d = draw(st.integers(1, 4))
    return draw(matrices(p, d)), draw(matrices(p, d))


def test_prime_field_rejects_composites():
    with pytest.raises(FieldError):
        PrimeField(9)


def test_squares_mod_7():
    assert [x for x in range(1, 7) if is_square(x, 7)] == [1, 2, 4]
    assert PrimeField(7).squares() == {1, 2, 4}


def test_char_two_everything_square():
    assert is_square(1, 2)
    with pytest.raises(ValueError):
        is_square(0, 5)


def test_irreducibility_matches_root_search():
    # degree 2 and 3: irreducible iff no root
    for p in (2, 3, 5):
        for deg in (2, 3):
            for coeffs in itertools.product(range(p), repeat=deg):
                poly = tuple(coeffs) + (1,)
                has_root = any(sum(c * x**k for k, c in enumerate(poly)) % p == 0 for x in range(p))
                assert is_irreducible(poly, p) == (not has_root), (poly, p)


@pytest.mark.parametrize("field", [GF4, GF9])
def test_extension_field_is_a_field(field):
    els = list(field.elements())
    assert len(els) == field.order
    nonzero = [a for a in els if a != field.zero]
    for a in nonzero:
        assert field.mul(a, field.inv(a)) == field.one
    # the multiplicative group is cyclic of order q - 1
    orders = set()
    for a in nonzero:
        k, x = 1, a
        while x != field.one:
            x = field.mul(x, a)
            k += 1
        orders.add(k)
    assert field.order - 1 in orders


def test_norm_is_multiplicative():
    els = [a for a in GF9.elements() if a != GF9.zero]
    for a in els:
        for b in els:
            assert GF9.norm(GF9.mul(a, b)) == GF9.norm(a) * GF9.norm(b) % 3


@given(matrix_pairs())
@settings(max_examples=150, deadline=None)
def test_det_multiplicative(pair):
    a, b = pair
    assert mat_det(mat_mul(a, b)) == mat_det(a) * mat_det(b) % a.p


@given(matrices())
@settings(max_examples=150, deadline=None)
def test_inverse_or_singular(a):
    if mat_det(a) == 0:
        with pytest.raises(SingularMatrixError):
            mat_inv(a)
    else:
        assert mat_mul(a, mat_inv(a)) == Matrix.identity(a.d, a.p)


@given(matrices())
@settings(max_examples=100, deadline=None)
def test_charpoly_constant_term_is_det(a):
    cp = charpoly(a)
    assert len(cp) == a.d + 1 and cp[-1] == 1
    assert cp[0] == (-1) ** a.d * mat_det(a) % a.p


@given(matrices())
@settings(max_examples=100, deadline=None)
def test_rank_nullity(a):
    rows = [list(r) for r in a.rows()]
    assert rank(rows, a.p) + len(nullspace([list(c) for c in zip(*rows)], a.p, a.d)) == a.d


@given(st.sampled_from(PRIMES), st.integers(1, 4), st.data())
@settings(max_examples=100, deadline=None)
def test_vector_index_roundtrip(p, d, data):
    i = data.draw(st.integers(0, p**d - 2))
    assert vector_to_index(index_to_vector(i, p, d), p) == i


def test_index_order_is_last_coordinate_fastest():
    assert index_to_vector(0, 3, 2) == (0, 1)
    assert index_to_vector(1, 3, 2) == (0, 2)
    assert index_to_vector(2, 3, 2) == (1, 0)


@given(matrices())
@settings(max_examples=60, deadline=None)
def test_perm_of_matches_act(a):
    if mat_det(a) == 0:
        assert (perm_of(a) == -1).any()
        return
    perm = perm_of(a)
    for v in range(min(20, a.p**a.d - 1)):
        assert perm[v] == act(v, a)


@given(matrices())
@settings(max_examples=100, deadline=None)
def test_fpf_iff_no_fixed_vector(a):
    if mat_det(a) == 0:
        return
    perm = perm_of(a)
    assert is_fixed_point_free(a) == bool((perm != np.arange(len(perm))).all())


def test_gl_orders_and_enumeration():
    assert gl_order(2, 2) == 6
    assert gl_order(2, 3) == 48
    assert gl_order(4, 3) == 24261120
    listed = list(iter_gl(2, 3))
    assert len(listed) == 48 and listed == sorted(listed)


def test_mat_order_and_pow():
    m = Matrix.from_rows([[0, 1], [4, 0]], 5)  # square is -I
    assert mat_order(m) == 4
    assert mat_pow(m, 4) == Matrix.identity(2, 5)


def test_kron_determinant():
    a = Matrix.from_rows([[1, 2], [0, 1]], 3)
    b = Matrix.from_rows([[2, 0], [1, 1]], 3)
    k = kron(a, b)
    assert k.d == 4
    assert mat_det(k) == mat_det(a) ** 2 * mat_det(b) ** 2 % 3


def test_blowup_is_a_homomorphism():
    field = GF9
    els = list(field.elements())
    a = [[els[3], els[1]], [els[0], els[5]]]
    b = [[els[2], els[7]], [els[4], els[8]]]
    ab = ext_mat_mul(field, a, b)
    assert blowup(ab, field) == mat_mul(blowup(a, field), blowup(b, field))
    # det of the blown-up matrix is the norm of the extension determinant
    assert mat_det(blowup(a, field)) == field.norm(ext_mat_det(field, a))


def test_dimension_limits():
    with pytest.raises(ValueError):
        Matrix(7, 2, (0,) * 49)


def test_ext_field_rejects_reducible_modulus():
    with pytest.raises(FieldError):
        ExtField(3, 2, (2, 0, 1))  # x^2 - 1

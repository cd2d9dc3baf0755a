"""Exact linear algebra: hand-checked oracles plus algebraic property tests."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcverify import FieldSpec, Mat, image_quotient, kernel_basis, rref, solve
from qcverify.exact_linalg import rank

Q = FieldSpec.rationals()
F7 = FieldSpec.prime(7)


def mat(rows, field=Q) -> Mat:
    return Mat(field, len(rows), len(rows[0]) if rows else 0, [[field.of_int(v) for v in r] for r in rows])


# --- field specs ---------------------------------------------------------


def test_rational_scalars():
    assert Q.of_int(3) == Fraction(3)
    assert Q.parse_scalar("-2/5") == Fraction(-2, 5)
    assert Q.zero == 0 and Q.one == 1


def test_prime_field_arithmetic():
    a = F7.of_int(3)
    b = F7.of_int(5)
    assert a + b == F7.of_int(1)
    assert a * b == F7.of_int(1)
    assert -a == F7.of_int(4)
    assert (a / b) * b == a
    assert F7.parse_scalar("1/3") * F7.of_int(3) == F7.one


def test_prime_field_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        F7.one / F7.zero


def test_prime_must_be_prime():
    with pytest.raises(ValueError):
        FieldSpec.prime(6)


# --- basic matrix ops ----------------------------------------------------


def test_identity_is_neutral():
    a = mat([[1, 2], [3, 4], [5, 6]])
    assert Mat.identity(Q, 3) @ a == a
    assert a @ Mat.identity(Q, 2) == a


def test_shape_mismatch_raises():
    a = mat([[1, 2]])
    with pytest.raises(ValueError):
        a @ a


def test_transpose_and_stacks():
    a = mat([[1, 2], [3, 4]])
    b = mat([[5], [6]])
    assert a.transpose().transpose() == a
    h = a.hstack(b)
    assert h.ncols == 3 and h.entry(0, 2) == 5
    v = a.vstack(mat([[7, 8]]))
    assert v.nrows == 3 and v.entry(2, 1) == 8


def test_take_cols():
    a = mat([[1, 2, 3], [4, 5, 6]])
    t = a.take_cols((2, 0))
    assert t == mat([[3, 1], [6, 4]])


def test_row_support_matches_dense_scan():
    a = mat([[0, 2, 0], [1, 0, -1], [0, 0, 0]])
    assert a.row_support() == [((1, Fraction(2)),), ((0, Fraction(1)), (2, Fraction(-1))), ()]


def test_product_support_drops_cancellations():
    # the (1,1)+(1,-1) pattern cancels; propagated support must not keep a zero
    a = mat([[1, 1], [0, 2]])
    b = mat([[1], [-1]])
    p = a @ b
    assert p == mat([[0], [-2]])
    assert p.row_support() == [(), ((0, Fraction(-2)),)]


# --- rref / rank / kernel ------------------------------------------------


def test_rref_known_matrix():
    a = mat([[1, 2, 3], [2, 4, 6], [1, 1, 1]])
    r, pivots = rref(a)
    assert pivots == (0, 1)
    assert rank(a) == 2
    assert r.entry(0, 0) == 1 and r.entry(1, 1) == 1
    # second row of a is dependent, so the reduced form has a zero row
    assert all(r.entry(2, j) == 0 for j in range(3))


def test_kernel_basis_annihilates():
    a = mat([[1, 2, 3], [2, 4, 6], [1, 1, 1]])
    k = kernel_basis(a)
    assert k.ncols == 1
    assert (a @ k).is_zero()


def test_solve_consistent_and_inconsistent():
    a = mat([[1, 2], [3, 4]])
    rhs = mat([[5], [6]])
    s = solve(a, rhs)
    assert s is not None and a @ s == rhs
    singular = mat([[1, 2], [2, 4]])
    assert solve(singular, mat([[1], [0]])) is None


def test_image_quotient_splits_dimensions():
    sub = mat([[1, 0], [0, 1], [0, 0]])
    coset, proj = image_quotient(sub, 3)
    assert proj.nrows == 1 and proj.ncols == 3
    assert (proj @ sub).is_zero()
    assert proj @ coset == Mat.identity(Q, 1)


def test_image_quotient_of_zero_subspace():
    coset, proj = image_quotient(Mat.zeros(Q, 3, 0), 3)
    assert coset == Mat.identity(Q, 3)
    assert proj == Mat.identity(Q, 3)


# --- property tests ------------------------------------------------------

small = st.integers(min_value=-4, max_value=4)


def mats(nrows, ncols):
    return st.lists(
        st.lists(small, min_size=ncols, max_size=ncols), min_size=nrows, max_size=nrows
    ).map(mat)


@given(mats(3, 3), mats(3, 3), mats(3, 3))
@settings(max_examples=60, deadline=None)
def test_product_is_associative_and_distributive(a, b, c):
    assert (a @ b) @ c == a @ (b @ c)
    assert a @ (b + c) == a @ b + a @ c


@given(mats(3, 4))
@settings(max_examples=60, deadline=None)
def test_rank_nullity(a):
    assert rank(a) + kernel_basis(a).ncols == a.ncols
    assert rank(a) == rank(a.transpose())


@given(mats(3, 3), mats(3, 3))
@settings(max_examples=60, deadline=None)
def test_rank_of_product_bounded(a, b):
    assert rank(a @ b) <= min(rank(a), rank(b))


@given(mats(4, 2))
@settings(max_examples=40, deadline=None)
def test_quotient_dimensions_add_up(sub):
    coset, proj = image_quotient(sub, 4)
    q = 4 - rank(sub)
    assert proj.nrows == q and coset.ncols == q
    assert (proj @ sub).is_zero()
    if q:
        assert proj @ coset == Mat.identity(Q, q)


@given(mats(3, 3))
@settings(max_examples=40, deadline=None)
def test_rref_is_idempotent(a):
    r, pivots = rref(a)
    r2, pivots2 = rref(r)
    assert r == r2 and pivots == pivots2


@given(mats(3, 3), mats(3, 1))
@settings(max_examples=40, deadline=None)
def test_solve_agrees_with_membership(a, rhs):
    s = solve(a, rhs)
    if s is None:
        assert rank(a.hstack(rhs)) == rank(a) + 1
    else:
        assert a @ s == rhs

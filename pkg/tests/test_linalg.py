import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import haar_unitary, unit
from virtiso.errors import DimensionError, NotUnitError, SingularityError
from virtiso.linalg import (Reflection, basis, cayley, charpoly_eval, check_unitary, det, direct_sum, eigenangles,
                            inner, inverse_cayley, make_reflection, pad_identity, rank, unitarity_defect)


def complex_vectors(n_min=1, n_max=8):
    comp = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)
    return st.integers(n_min, n_max).flatmap(lambda n: st.lists(comp, min_size=n, max_size=n)) \
        .filter(lambda v: np.linalg.norm(v) > 1e-3).map(unit)


def test_inner_examples():
    e1 = basis(2, 1)
    assert inner(e1, e1) == 1
    assert inner(1j * e1, e1) == -1j
    assert abs(inner(unit([1, 1]), unit([1, -1]))) < 1e-16


def test_inner_dimension_mismatch():
    with pytest.raises(DimensionError):
        inner([1, 0], [1, 0, 0])


@given(complex_vectors(), st.data())
def test_inner_sesquilinear(a, data):
    b = data.draw(complex_vectors(a.size, a.size))
    c = complex(data.draw(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)))
    assert abs(inner(c * a, b) - np.conj(c) * inner(a, b)) < 1e-9
    assert abs(inner(a, c * b) - c * inner(a, b)) < 1e-9
    assert abs(inner(a, a).imag) < 1e-15 and inner(a, a).real > 0


def test_reflection_examples():
    assert np.allclose(make_reflection([1j]), [[1j]])
    assert np.array_equal(make_reflection([1, 0]), [[0, 1], [1, 0]])
    assert np.array_equal(make_reflection([0, 1]), np.eye(2))
    assert Reflection([0, 1]).is_identity


def test_reflection_rejects_non_unit():
    with pytest.raises(NotUnitError):
        make_reflection([1.0, 1.0])


@given(complex_vectors())
def test_reflection_invariants(x):
    n = x.size
    r = make_reflection(x)
    assert unitarity_defect(r) <= n * 1e-12
    assert np.linalg.norm(r[:, -1] - x) <= 1e-11
    if np.linalg.norm(x - basis(n, n)) > 1e-6:
        assert rank(r - np.eye(n), 1e-9) == 1
    m = np.arange(n * 2).reshape(n, 2) * (1 + 1j)
    assert np.allclose(Reflection(x).apply(m), r @ m)


def test_det_examples():
    assert det(np.eye(3)) == 1
    assert det(np.diag([1j, -1j])) == 1
    assert abs(det([[0, 1], [-1, 0]]) - 1) < 1e-15
    assert det([[2 + 1j]]) == 2 + 1j


@settings(max_examples=30)
@given(st.integers(1, 16), st.integers(0, 2**31))
def test_det_multiplicative_and_unimodular(n, seed):
    g = np.random.default_rng(seed)
    a = g.normal(size=(n, n)) + 1j * g.normal(size=(n, n))
    b = g.normal(size=(n, n)) + 1j * g.normal(size=(n, n))
    assert abs(det(a @ b) - det(a) * det(b)) <= 1e-9 * abs(det(a) * det(b))
    assert abs(abs(det(haar_unitary(n, seed))) - 1) < 1e-9


def test_rank_examples():
    assert rank(np.zeros((3, 3))) == 0
    assert rank(np.eye(3) - np.diag([1, 1, -1])) == 1
    v = unit([1, 2j, 3, -1])
    assert rank(np.outer(v, v.conj())) == 1
    assert rank(np.eye(4)) == 4
    with pytest.raises(ValueError):
        rank(np.eye(2), tol=0)


def test_charpoly_examples():
    assert charpoly_eval(np.eye(1), 0) == -1
    u = np.array([[0, 1], [-1, 0]])
    for z in (0.3, 1j, 2 - 1j):
        assert abs(charpoly_eval(u, z) - (z * z + 1)) < 1e-14
    assert abs(charpoly_eval([[np.exp(1j * np.pi)]], np.exp(1j * np.pi))) < 1e-15


def test_eigenangles_range():
    th = eigenangles(np.diag(np.exp(1j * np.array([0.5, -0.5, 3.0]))))
    assert np.allclose(th, [0.5, 3.0, 2 * np.pi - 0.5])


def test_cayley_examples():
    assert np.allclose(cayley([[0.0]]), [[-1]])
    assert np.allclose(cayley([[1.0]]), [[-1j]])


@settings(max_examples=30)
@given(st.integers(1, 6), st.integers(0, 2**31))
def test_cayley_round_trip(n, seed):
    g = np.random.default_rng(seed)
    a = g.normal(size=(n, n)) + 1j * g.normal(size=(n, n))
    m = a + a.conj().T
    u = cayley(m)
    assert unitarity_defect(u) <= n * 1e-10
    assert np.max(np.abs(inverse_cayley(u) - m)) <= 1e-9 * max(1, np.max(np.abs(m))) ** 2


def test_cayley_rejects_non_hermitian_and_inverse_singular():
    with pytest.raises(ValueError):
        cayley([[0, 1], [0, 0]])
    with pytest.raises(SingularityError):
        inverse_cayley(np.eye(2))


def test_check_unitary_and_helpers():
    check_unitary(np.eye(3))
    with pytest.raises(ValueError):
        check_unitary(2 * np.eye(3))
    assert np.array_equal(direct_sum([[2]], [[3]]), np.diag([2, 3]))
    assert np.array_equal(pad_identity([[5]], 3), np.diag([5, 1, 1]))
    with pytest.raises(DimensionError):
        basis(2, 3)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import SX, SY, SZ
from vvhori.core import (
    DegenerateSpectrum,
    DimensionMismatch,
    HermitianOperator,
    NonHermitianInput,
    OperatorSeries,
    PerturbationProblem,
    commutator,
    lie_transform,
    validate_problem,
)
from vvhori.verification import random_hermitian


def _series(rng, n, m, hermitian=False, zero_const=False):
    if hermitian:
        cs = [random_hermitian(n, rng) for _ in range(m + 1)]
    else:
        cs = [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(m + 1)]
    if zero_const:
        cs[0] = np.zeros((n, n))
    return OperatorSeries(cs)


seeds = st.integers(0, 2**32 - 1)


# -- validate_problem

def test_validate_accepts_two_level():
    p = validate_problem(PerturbationProblem(e0=[1.0, 2.0], perturbations={1: HermitianOperator(SX)}))
    assert p.zero_shift == 0.0
    assert p.gap_tolerance == pytest.approx(2e-9)


def test_validate_rejects_near_degenerate():
    with pytest.raises(DegenerateSpectrum, match="levels 0 and 1"):
        validate_problem(PerturbationProblem(e0=[1.0, 1.0 + 1e-12], perturbations={1: HermitianOperator(SX)}))


def test_zero_shift_moves_zero_level():
    p = validate_problem(PerturbationProblem(e0=[0.0, 1.0], perturbations={1: HermitianOperator(SX)}))
    assert p.zero_shift == 1.0
    np.testing.assert_array_equal(p.shifted_e0, [1.0, 2.0])


def test_explicit_bad_shift_rejected():
    with pytest.raises(DegenerateSpectrum):
        validate_problem(PerturbationProblem(e0=[0.0, 1.0], zero_shift=-1.0))


def test_non_hermitian_rejected():
    with pytest.raises(NonHermitianInput):
        HermitianOperator([[0, 1], [0, 0]])


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        validate_problem(PerturbationProblem(e0=[1.0, 2.0, 3.0], perturbations={1: HermitianOperator(SX)}))


def test_hermitian_operator_is_immutable():
    h = HermitianOperator(SX)
    with pytest.raises(ValueError):
        h.entries[0, 0] = 5


# -- commutator

def test_commutator_examples():
    np.testing.assert_allclose(commutator(SX, SX), 0)
    np.testing.assert_allclose(commutator(np.diag([1.0, 2.0]), SY), 1j * SX)
    np.testing.assert_allclose(commutator(SX, SY), 2j * SZ)


def test_commutator_shape_check():
    with pytest.raises(DimensionMismatch):
        commutator(np.eye(2), np.eye(3))


def test_i_commutator_hermitian(rng):
    a, b = random_hermitian(4, rng), random_hermitian(4, rng)
    c = 1j * commutator(a, b)
    np.testing.assert_allclose(c, c.conj().T, atol=1e-14)


# -- series arithmetic

def test_series_truncates_on_product(rng):
    a, b = _series(rng, 3, 2), _series(rng, 3, 4)
    c = a @ b
    assert c.truncation_order == 2
    np.testing.assert_allclose(c[2], a[0] @ b[2] + a[1] @ b[1] + a[2] @ b[0])


def test_series_evaluate_matches_polynomial(rng):
    a = _series(rng, 2, 3)
    eps = 0.37
    direct = sum(eps**m * a[m] for m in range(4))
    np.testing.assert_allclose(a.evaluate(eps), direct, atol=1e-14)


def test_series_is_immutable(rng):
    a = _series(rng, 2, 1)
    with pytest.raises(ValueError):
        a.coeffs[0, 0, 0] = 1
    with pytest.raises(AttributeError):
        a.foo = 1


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 5), st.integers(0, 4))
def test_series_associative_distributive(seed, n, m):
    rng = np.random.default_rng(seed)
    a, b, c = (_series(rng, n, m) for _ in range(3))
    np.testing.assert_allclose(((a @ b) @ c).coeffs, (a @ (b @ c)).coeffs, atol=1e-12 * 10 ** m)
    np.testing.assert_allclose((a @ (b + c)).coeffs, ((a @ b) + (a @ c)).coeffs, atol=1e-12)


# -- lie_transform

def test_lie_transform_zero_generator(rng):
    x = _series(rng, 3, 3)
    out = lie_transform(OperatorSeries.zeros(3, 3), x, 3)
    np.testing.assert_array_equal(out.coeffs, x.coeffs)


def test_lie_transform_two_level_first_order():
    w = OperatorSeries([np.zeros((2, 2)), -SY])
    x = OperatorSeries.constant(np.diag([1.0, 2.0]), 1)
    out = lie_transform(w, x, 1)
    np.testing.assert_allclose(out[0], np.diag([1.0, 2.0]))
    # i[-sy, diag(1,2)] by direct multiplication; it cancels V1 = sx at order 1
    h0 = np.diag([1.0, 2.0])
    np.testing.assert_allclose(out[1], 1j * ((-SY) @ h0 - h0 @ (-SY)), atol=1e-15)
    np.testing.assert_allclose(out[1], -SX, atol=1e-15)


def test_lie_transform_second_order_expansion(rng):
    w1, c = random_hermitian(3, rng), random_hermitian(3, rng)
    out = lie_transform(OperatorSeries([np.zeros((3, 3)), w1]), OperatorSeries.constant(c, 2), 2)
    np.testing.assert_allclose(out[0], c)
    np.testing.assert_allclose(out[1], 1j * commutator(w1, c), atol=1e-14)
    np.testing.assert_allclose(out[2], -0.5 * commutator(w1, commutator(w1, c)), atol=1e-13)


def test_lie_transform_needs_zero_constant(rng):
    with pytest.raises(ValueError):
        lie_transform(_series(rng, 2, 2), _series(rng, 2, 2), 2)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 5), st.integers(1, 4))
def test_lie_transform_properties(seed, n, m):
    rng = np.random.default_rng(seed)
    w = _series(rng, n, m, hermitian=True, zero_const=True)
    x = _series(rng, n, m, hermitian=True)
    y = lie_transform(w, x, m)
    for c in y.coeffs:
        np.testing.assert_allclose(c, c.conj().T, atol=1e-12)
    np.testing.assert_allclose(np.trace(y.coeffs, axis1=1, axis2=2),
                               np.trace(x.coeffs, axis1=1, axis2=2), atol=1e-12)
    back = lie_transform(-w, y, m)
    np.testing.assert_allclose(back.coeffs, x.coeffs, atol=1e-10)

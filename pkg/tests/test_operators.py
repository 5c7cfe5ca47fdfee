import numpy as np
import pytest
from hypothesis import given, seed
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from summinglab.errors import DimensionMismatchError, InputError
from summinglab.operators import (
    LinearOp,
    MultilinearOp,
    apply,
    apply_multi,
    as_multilinear,
    form_norm,
    norming_tuple,
    op_norm,
    random_op,
    scaled,
)
from summinglab.seqnorms import NormMethod
from summinglab.spaces import SpaceSpec, norm, pairing

unit = st.floats(-1, 1, allow_nan=False, allow_subnormal=False)


def ell(dim, q='2'):
    return SpaceSpec(dim=dim, exponent=q)


def test_shapes_are_checked():
    with pytest.raises(DimensionMismatchError):
        LinearOp(domain=ell(2), codomain=ell(3), matrix=np.ones((2, 3)))
    with pytest.raises(DimensionMismatchError):
        MultilinearOp(domains=[ell(2), ell(2)], codomain=ell(1), tensor=np.ones((1, 2)))


def test_apply(identity2, corner_form):
    assert np.array_equal(apply(identity2, [1.0, -2.0]), [1.0, -2.0])
    assert corner_form.arity == 2
    assert apply_multi(corner_form, [[2.0, 5.0], [3.0, 7.0]]) == pytest.approx([6.0])
    with pytest.raises(DimensionMismatchError):
        apply_multi(corner_form, [[1.0, 0.0]])
    with pytest.raises(DimensionMismatchError):
        apply(identity2, [1.0, 0.0, 0.0])


def test_as_multilinear(identity2):
    M = as_multilinear(identity2)
    assert M.arity == 1
    assert np.array_equal(apply_multi(M, [[0.5, 2.0]]), [0.5, 2.0])


@seed(4)
@given(
    x=arrays(np.float64, 3, elements=unit),
    x2=arrays(np.float64, 3, elements=unit),
    y=arrays(np.float64, 2, elements=unit),
    a=unit,
    b=unit,
)
def test_multilinear_in_each_slot(x, x2, y, a, b):
    T = random_op((4, 3, 2), kind='multilinear', seed=5)
    lhs = apply_multi(T, [a * x + b * x2, y])
    rhs = a * apply_multi(T, [x, y]) + b * apply_multi(T, [x2, y])
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_random_op_is_seeded():
    a = random_op((3, 2), seed=9)
    b = random_op((3, 2), seed=9)
    assert np.array_equal(a.matrix, b.matrix)
    assert not np.array_equal(a.matrix, random_op((3, 2), seed=10).matrix)
    assert np.all(np.abs(a.matrix) <= 1.0)
    M = random_op((2, 3, 4), kind='multilinear', seed=1, exponents=['2', '1', 'inf'])
    assert M.tensor.shape == (2, 3, 4)
    assert np.array_equal(apply_multi(M, [np.eye(3)[0], np.eye(4)[0]]), M.tensor[:, 0, 0])
    with pytest.raises(InputError):
        random_op((3, 2, 2), kind='linear')
    with pytest.raises(InputError):
        random_op((3, 2), exponents=['2'])


def test_spectral_norm():
    T = LinearOp(domain=ell(2), codomain=ell(2), matrix=np.diag([2.0, -3.0]))
    est = op_norm(T)
    assert est.method is NormMethod.SPECTRAL
    assert est.value == pytest.approx(3.0)
    assert not est.lower_bound_only


def test_l1_domain_norm_is_max_column():
    matrix = np.array([[1.0, -2.0, 0.5], [0.0, 2.0, 0.5]])
    T = LinearOp(domain=ell(3, '1'), codomain=ell(2, '3'), matrix=matrix)
    est = op_norm(T)
    assert est.method is NormMethod.EXTREME
    expected = max(norm(ell(2, '3'), col) for col in matrix.T)
    assert est.value == pytest.approx(expected)
    assert op_norm(scaled(T, -1.0)).value == est.value


def test_linf_domain_enumeration():
    T = LinearOp(domain=ell(2, 'inf'), codomain=ell(2, '1'), matrix=[[1.0, 1.0], [1.0, -1.0]])
    assert op_norm(T).value == pytest.approx(2.0)


def test_bilinear_ascent(corner_form):
    est = op_norm(corner_form, budget=4, seed=0)
    assert est.method is NormMethod.ASCENT
    assert est.lower_bound_only
    assert est.value == pytest.approx(1.0, rel=1e-9)


def test_norming_tuple_is_consistent():
    T = random_op((3, 2, 2), kind='multilinear', seed=2, exponents=['3', '2', '3/2'])
    found = norming_tuple(T, budget=6, seed=1)
    for space, x in zip(T.domains, found.xs):
        assert norm(space, x) == pytest.approx(1.0)
    assert pairing(found.functional, apply_multi(T, found.xs)) == pytest.approx(found.value)


def test_scaling_is_exact_for_powers_of_two():
    T = random_op((2, 3, 2), kind='multilinear', seed=3, exponents=['2', '3', '3'])
    assert op_norm(scaled(T, 2.0), 4, 0).value == 2.0 * op_norm(T, 4, 0).value


def test_form_norm(identity2, corner_form):
    T = LinearOp(domain=ell(2, '1'), codomain=ell(2), matrix=[[1.0, 2.0], [3.0, 4.0]])
    # (phi o T) lives in the dual of l1, so its norm is the max entry.
    assert form_norm(T, [1.0, 0.0]) == pytest.approx(2.0)
    assert form_norm(identity2, [0.6, 0.8]) == pytest.approx(1.0)
    assert form_norm(corner_form, [-2.0]) == pytest.approx(2.0)

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, seed
from hypothesis import strategies as st

from summinglab.errors import (
    DimensionMismatchError,
    ExponentIdentityError,
    InputError,
    NotGammaPairError,
)
from summinglab.operators import LinearOp, op_norm, random_op, scaled
from summinglab.spaces import SpaceSpec
from summinglab.witness import (
    ConstantEstimate,
    ExponentScheme,
    SchemeKind,
    SummingWitness,
    WitnessConfig,
    best_ratio_at,
    collinear_witness,
    coordinate_witness,
    gamma_check,
    lower_bound,
    ratio,
    repeated_witness,
)

SQRT2 = math.sqrt(2.0)


def ell(dim, q='2'):
    return SpaceSpec(dim=dim, exponent=q)


@pytest.mark.parametrize(
    'p, q0, q1, member, trivial',
    [
        ('2', '1', '2', True, False),
        ('2', '4/3', '4', True, True),
        ('2', '1', '3', False, False),
        ('3', '1', '3', True, False),
        ('inf', '1', '1.5', False, False),
        ('inf', '1', '2', False, False),
        ('2', '2', 'inf', False, False),
        ('2', '1/2', '2', False, False),
    ],
)
def test_gamma_check(p, q0, q1, member, trivial):
    assert gamma_check(p, q0, q1) == (member, trivial)


def test_gamma_check_rejects_p():
    with pytest.raises(InputError):
        gamma_check('1', '1', '2')


def test_schemes():
    cohen = ExponentScheme.cohen(2)
    assert cohen.kind is SchemeKind.LINEAR
    assert cohen.label == 'C(1,2;2)'
    assert cohen.pstar == 2
    assert ExponentScheme.linear_scheme('2', '4/3', '4').qs == (Fraction(4),)
    assert ExponentScheme.multi_joint(2, 2).label == 'joint(p=2,n=2)'
    separate = ExponentScheme.multi_separate(2, 2)
    assert separate.qs == (Fraction(4), Fraction(4))
    assert separate.label == 'multi-separate(p=2;1;4,4)'
    assert ExponentScheme.multi_general(2, 1, ['4', '4']).n == 2


def test_scheme_validation():
    with pytest.raises(NotGammaPairError):
        ExponentScheme.linear_scheme(2, 1, 3)
    with pytest.raises(ExponentIdentityError):
        ExponentScheme.multi_general(2, 1, ['3', '3'])
    with pytest.raises(InputError):
        ExponentScheme.cohen(1)


def test_witness_validation(identity2):
    with pytest.raises(DimensionMismatchError):
        SummingWitness.build(identity2, [np.eye(2)], np.ones((3, 2)))
    with pytest.raises(InputError):
        SummingWitness.build(identity2, [np.zeros((2, 2))], np.eye(2))


def test_ratio_of_coordinate_witness(identity2):
    w = SummingWitness.build(identity2, [np.eye(2)], np.eye(2))
    result = ratio(identity2, w, ExponentScheme.cohen(2))
    assert result.lhs == pytest.approx(2.0)
    assert result.value == pytest.approx(SQRT2)
    assert not result.advisory


def test_ratio_zero_rhs(identity2):
    w = SummingWitness.build(identity2, [[[1.0, 0.0], [0.0, 1.0]]], [[0.0, 0.0], [1.0, 0.0]])
    assert ratio(identity2, w, ExponentScheme.cohen(2)).value == pytest.approx(0.0)


def test_ratio_shape_checks(identity2, corner_form):
    w = SummingWitness.build(identity2, [np.eye(2)], np.eye(2))
    with pytest.raises(DimensionMismatchError):
        ratio(identity2, w, ExponentScheme.multi_joint(2, 2))
    with pytest.raises(DimensionMismatchError):
        ratio(corner_form, w, ExponentScheme.multi_joint(2, 2))


@seed(5)
@given(scale=st.floats(0.1, 10.0), op_seed=st.integers(0, 50))
def test_ratio_scale_invariance(scale, op_seed):
    T = random_op((2, 3), seed=op_seed)
    rng = np.random.default_rng(op_seed)
    xs, phis = rng.standard_normal((3, 3)), rng.standard_normal((3, 2))
    scheme = ExponentScheme.linear_scheme(2, '4/3', 4)
    base = ratio(T, SummingWitness.build(T, [xs], phis), scheme).value
    moved = ratio(T, SummingWitness.build(T, [xs * scale], phis / scale), scheme).value
    assert moved == pytest.approx(base, rel=1e-9)


@seed(6)
@given(op_seed=st.integers(0, 100))
def test_single_pair_ratio_is_scheme_free(op_seed):
    T = random_op((2, 2), seed=op_seed)
    rng = np.random.default_rng(op_seed)
    w = SummingWitness.build(T, [rng.standard_normal((1, 2))], rng.standard_normal((1, 2)))
    a = ratio(T, w, ExponentScheme.cohen(2)).value
    b = ratio(T, w, ExponentScheme.linear_scheme(2, '4/3', 4)).value
    assert a == pytest.approx(b, rel=1e-12)


@seed(7)
@given(op_seed=st.integers(0, 100))
def test_joint_dominates_separate(op_seed):
    T = random_op((2, 2, 2), kind='multilinear', seed=op_seed)
    rng = np.random.default_rng(op_seed)
    w = SummingWitness.build(
        T, [rng.standard_normal((3, 2)), rng.standard_normal((3, 2))], rng.standard_normal((3, 2))
    )
    joint = ratio(T, w, ExponentScheme.multi_joint(2, 2)).value
    separate = ratio(T, w, ExponentScheme.multi_separate(2, 2)).value
    assert joint >= separate * (1 - 1e-12)


def test_repeated_witness_ratio_is_norm(rank_one):
    w = repeated_witness(rank_one, 3)
    assert w.m == 3
    assert ratio(rank_one, w, ExponentScheme.cohen(2)).value == pytest.approx(1.0)


def test_coordinate_witness(identity2):
    x, phis = coordinate_witness(identity2, 3)
    assert np.array_equal(x, [[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    assert np.array_equal(phis, x)


def test_collinear_witness_is_below_norm(rank_one):
    i = np.arange(1, 9, dtype=float)
    w = collinear_witness(rank_one, i**-0.6, i**-0.3)
    scheme = ExponentScheme.linear_scheme(2, '4/3', 4)
    assert ratio(rank_one, w, scheme).value <= 1.0 + 1e-9
    with pytest.raises(DimensionMismatchError):
        collinear_witness(rank_one, [1.0, 2.0], [1.0])


def test_identity_lower_bound(identity2, witness_cfg):
    est = lower_bound(identity2, ExponentScheme.cohen(2), witness_cfg)
    assert est.lower >= SQRT2 - 1e-6
    assert est.lower <= SQRT2 * (1 + 1e-9)
    assert est.lower_rigorous
    assert est.best_witness is not None
    assert est.advisory_best is None


def test_lower_bound_at_least_operator_norm(witness_cfg):
    T = random_op((3, 2, 2), kind='multilinear', seed=4, exponents=['3', '2', '3/2'])
    est = lower_bound(T, ExponentScheme.multi_joint(2, 2), witness_cfg)
    assert est.lower >= op_norm(T, witness_cfg.multistarts, witness_cfg.seed).value


def test_lower_bound_monotone_in_m(identity2, witness_cfg):
    scheme = ExponentScheme.linear_scheme(2, '4/3', 4)
    small = lower_bound(identity2, scheme, witness_cfg.model_copy(update={'m_max': 1}))
    large = lower_bound(identity2, scheme, witness_cfg)
    assert small.lower <= large.lower


def test_lower_bound_scales_with_operator(witness_cfg):
    T = LinearOp(domain=ell(3, '1'), codomain=ell(2), matrix=[[1.0, -0.5, 0.2], [0.3, 0.8, -1.0]])
    scheme = ExponentScheme.cohen(2)
    cfg = witness_cfg.model_copy(update={'m_max': 2})
    assert lower_bound(scaled(T, 2.0), scheme, cfg).lower == 2.0 * lower_bound(T, scheme, cfg).lower


def test_zero_operator_lower_bound(zero_op, witness_cfg):
    est = lower_bound(zero_op, ExponentScheme.cohen(2), witness_cfg.model_copy(update={'m_max': 2}))
    assert est.lower == 0.0
    assert est.best_witness is None


def test_best_ratio_at_rejects_empty(identity2):
    with pytest.raises(InputError):
        best_ratio_at(identity2, ExponentScheme.cohen(2), 0, WitnessConfig(multistarts=2))


def test_bracket_must_be_ordered():
    with pytest.raises(InputError):
        ConstantEstimate(lower=2.0, upper=1.0)
    assert ConstantEstimate(lower=1.0, upper=1.0 + 1e-12).upper is not None

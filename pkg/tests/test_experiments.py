import math

import numpy as np
import pytest

from summinglab.errors import ExponentIdentityError, InputError, NotGammaPairError
from summinglab.experiments import (
    Bracket,
    Budgets,
    Evidence,
    Verdict,
    _bracket,
    coincidence,
    cross_verdict,
    holder_factor_check,
    multi_equivalence,
    triviality_trend,
)
from summinglab.files import canonical_json
from summinglab.operators import MultilinearOp, random_op
from summinglab.spaces import SpaceSpec
from summinglab.witness import ConstantEstimate, ExponentScheme

SQRT2 = math.sqrt(2.0)


@pytest.fixture
def budgets(witness_cfg, refine_cfg) -> Budgets:
    return Budgets(seed=0, tol=0.05, witness=witness_cfg, refine=refine_cfg,
                   m_schedule=(1, 2, 4, 8), ascent_m_max=2, profiles=2)


def test_cross_verdict():
    ok = [Bracket(label='a', lower=1.0, upper=1.2), Bracket(label='b', lower=1.1, upper=1.3)]
    assert cross_verdict(ok, 0.05) == (Verdict.CONSISTENT, [])
    clash = [Bracket(label='a', lower=2.0, upper=2.1, upper_rigorous=True),
             Bracket(label='b', lower=1.0, upper=1.1, upper_rigorous=True)]
    verdict, notes = cross_verdict(clash, 0.05)
    assert verdict is Verdict.INCONSISTENT
    assert len(notes) == 1
    soft = [clash[0], clash[1].model_copy(update={'upper_rigorous': False})]
    assert cross_verdict(soft, 0.05)[0] is Verdict.INCONCLUSIVE
    # Within tolerance is not a conflict.
    near = [Bracket(label='a', lower=1.04, upper=1.04, upper_rigorous=True),
            Bracket(label='b', lower=1.0, upper=1.0, upper_rigorous=True)]
    assert cross_verdict(near, 0.05)[0] is Verdict.CONSISTENT


def test_budgets_from_settings():
    budgets = Budgets.from_settings()
    assert budgets.witness.weak.allow_grid
    assert budgets.refine.witness == budgets.witness
    assert budgets.describe()['seed'] == budgets.seed


def test_holder_check_is_consistent():
    report = holder_factor_check(2, '4/3', 4, trials=200, seed=1, max_length=2000)
    assert report.verdict is Verdict.CONSISTENT
    assert report.metrics['violations'] == 0.0
    assert 1.0 - 1e-12 <= report.metrics['max_ratio'] <= 1.0 + 1e-9


@pytest.mark.parametrize('p, q0, q1', [('3', '1', '3'), ('inf', '1', 'inf'), ('3/2', '1', '3/2')])
def test_holder_check_other_exponents(p, q0, q1):
    report = holder_factor_check(p, q0, q1, trials=50, seed=2, max_length=500)
    assert report.verdict is Verdict.CONSISTENT


def test_holder_check_is_deterministic():
    a = holder_factor_check(2, 1, 2, trials=30, seed=7, max_length=300)
    b = holder_factor_check(2, 1, 2, trials=30, seed=7, max_length=300)
    assert canonical_json(a.payload()) == canonical_json(b.payload())


def test_holder_check_rejects():
    with pytest.raises(ExponentIdentityError):
        holder_factor_check(2, 1, 3)
    with pytest.raises(InputError):
        holder_factor_check(2, 1, 2, trials=0)


def test_coincidence_identity(identity2, budgets):
    report = coincidence(identity2, 2, [('4/3', '4')], budgets)
    assert report.verdict is Verdict.CONSISTENT
    assert [b.label for b in report.brackets] == ['C(1,2;2)', 'C(4/3,4;2)']
    first = report.brackets[0]
    assert first.lower == pytest.approx(SQRT2, rel=1e-6)
    assert first.upper == pytest.approx(SQRT2, rel=0.05)
    for bracket in report.brackets:
        assert bracket.lower <= bracket.upper * (1 + budgets.tol)
    assert report.inputs['schemes'] == ['C(1,2;2)', 'C(4/3,4;2)']


def test_coincidence_zero_operator(zero_op, budgets):
    report = coincidence(zero_op, 2, [('4/3', '4')], budgets)
    assert report.verdict is Verdict.CONSISTENT
    assert all(b.lower == 0.0 and b.upper == 0.0 for b in report.brackets)


def test_coincidence_rejects_foreign_pairs(identity2, budgets):
    with pytest.raises(NotGammaPairError):
        coincidence(identity2, 2, [('1', '3')], budgets)


def test_multi_equivalence(corner_form, budgets):
    schemes = [
        ExponentScheme.multi_joint(2, 2),
        ExponentScheme.multi_separate(2, 2),
        ExponentScheme.multi_general(2, 1, ['4', '4']),
    ]
    report = multi_equivalence(corner_form, 2, schemes, budgets)
    assert report.verdict is Verdict.CONSISTENT
    assert len(report.brackets) == 3
    for bracket in report.brackets:
        assert bracket.lower == pytest.approx(1.0, rel=1e-6)
        assert bracket.upper == pytest.approx(1.0, rel=0.05)


def test_multi_equivalence_rejects(corner_form, budgets):
    with pytest.raises(InputError):
        multi_equivalence(corner_form, 2, [ExponentScheme.cohen(2)], budgets)
    with pytest.raises(ExponentIdentityError):
        multi_equivalence(corner_form, 3, [ExponentScheme.multi_joint(2, 2)], budgets)
    with pytest.raises(InputError):
        multi_equivalence(corner_form, 2, [], budgets)


def test_triviality_trend_rank_one(rank_one, budgets):
    report = triviality_trend(rank_one, 2, '4/3', 4, budgets)
    assert report.verdict is Verdict.INCONCLUSIVE
    assert report.evidence is Evidence.BOUNDED
    assert [row.m for row in report.trend] == [1, 2, 4, 8]
    assert report.metrics['peak_ratio'] <= 1.0 + 1e-9
    assert report.brackets[0].upper == pytest.approx(1.0, rel=0.05)


def test_triviality_trend_preconditions(rank_one, zero_op, budgets):
    with pytest.raises(InputError):
        triviality_trend(rank_one, 2, 1, 2, budgets)
    with pytest.raises(NotGammaPairError):
        triviality_trend(rank_one, 2, 1, 3, budgets)
    with pytest.raises(InputError):
        triviality_trend(zero_op, 2, '4/3', 4, budgets)


GAMMA_PAIRS = [('1', '2'), ('4/3', '4'), ('8/7', '8/3')]


def test_coincidence_on_random_operators(budgets):
    for s in range(10):
        report = coincidence(random_op((2, 2), seed=s), 2, GAMMA_PAIRS, budgets)
        assert report.verdict is Verdict.CONSISTENT, report.notes
        assert [b.label for b in report.brackets] == ['C(1,2;2)', 'C(4/3,4;2)', 'C(8/7,8/3;2)']
        for a in report.brackets:
            for b in report.brackets:
                assert a.lower <= b.upper * (1 + budgets.tol)


def _bilinear_schemes():
    return [
        ExponentScheme.multi_joint(2, 2),
        ExponentScheme.multi_separate(2, 2),
        ExponentScheme.multi_general(2, 1, ['4', '4']),
    ]


def test_multi_equivalence_on_random_bilinear_maps(budgets):
    for s in range(5):
        T = random_op((2, 2, 2), kind='multilinear', seed=s)
        report = multi_equivalence(T, 2, _bilinear_schemes(), budgets)
        assert report.verdict is Verdict.CONSISTENT, report.notes
        assert len(report.brackets) == 3


def test_multi_equivalence_inner_product(budgets):
    plane = SpaceSpec(dim=2, exponent=2)
    inner = MultilinearOp(domains=[plane, plane], codomain=SpaceSpec(dim=1, exponent=1),
                          tensor=np.eye(2)[None])
    schemes = [ExponentScheme.multi_joint(2, 2), ExponentScheme.multi_separate(2, 2)]
    report = multi_equivalence(inner, 2, schemes, budgets)
    assert report.verdict is Verdict.CONSISTENT, report.notes
    for bracket in report.brackets:
        assert bracket.lower >= 1.0 - 1e-6


def test_coincidence_is_deterministic(identity2, budgets):
    a = coincidence(identity2, 2, [('4/3', '4')], budgets)
    b = coincidence(identity2, 2, [('4/3', '4')], budgets)
    assert canonical_json(a.payload()) == canonical_json(b.payload())


def test_multi_equivalence_is_deterministic(corner_form, budgets):
    a = multi_equivalence(corner_form, 2, _bilinear_schemes(), budgets)
    b = multi_equivalence(corner_form, 2, _bilinear_schemes(), budgets)
    assert canonical_json(a.payload()) == canonical_json(b.payload())


def test_triviality_trend_is_deterministic(rank_one, budgets):
    a = triviality_trend(rank_one, 2, '4/3', 4, budgets)
    b = triviality_trend(rank_one, 2, '4/3', 4, budgets)
    assert canonical_json(a.payload()) == canonical_json(b.payload())


def test_bracket_keeps_raw_validated_upper():
    lower = ConstantEstimate(lower=2.0)
    shared = ConstantEstimate(lower=2.0, upper=2.0, validated=1.0, upper_rigorous=True)
    bracket = _bracket('C(1,2;2)', lower, shared)
    assert bracket.upper == 1.0
    verdict, notes = cross_verdict([bracket], 0.05)
    assert verdict is Verdict.INCONSISTENT
    assert len(notes) == 1

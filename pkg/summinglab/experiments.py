"""Scripted cross-checks producing deterministic reports.

Each experiment brackets one or more best constants and compares every lower
bound against every upper bound. Only two rigorous bounds that conflict
beyond the relative tolerance make a report inconsistent.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .config import SETTINGS, Settings
from .domination import RefineConfig, refine
from .errors import ExponentIdentityError, InputError, NotGammaPairError
from .files import operator_digest
from .operators import LinearOp, MultilinearOp, Operator, op_norm
from .seqnorms import WeakConfig
from .spaces import (
    Exponent,
    conjugate,
    format_exponent,
    lp_norm,
    make_rng,
    parse_exponent,
    reciprocal,
)
from .utils import log_info, log_warning
from .witness import (
    ConstantEstimate,
    ExponentScheme,
    WitnessConfig,
    best_ratio_at,
    collinear_witness,
    gamma_check,
    lower_bound,
    ratio,
)

__all__ = [
    'Verdict',
    'Evidence',
    'Bracket',
    'TrendRow',
    'Report',
    'Budgets',
    'cross_verdict',
    'coincidence',
    'multi_equivalence',
    'triviality_trend',
    'holder_factor_check',
]

DEFAULT_SCHEDULE = (1, 2, 4, 8, 16, 32, 64)
HOLDER_SLACK = 1e-9


class Verdict(str, Enum):
    CONSISTENT = 'consistent'
    INCONSISTENT = 'inconsistent'
    INCONCLUSIVE = 'inconclusive'


class Evidence(str, Enum):
    BOUNDED = 'bounded'
    GROWING = 'growing'
    NOT_APPLICABLE = 'n/a'


class Bracket(BaseModel):
    label: str
    lower: float
    upper: float | None
    lower_rigorous: bool = True
    upper_rigorous: bool = False
    converged: bool = True


class TrendRow(BaseModel):
    m: int
    value: float
    advisory: bool = False


class Report(BaseModel):
    experiment: str
    inputs: dict[str, Any]
    brackets: list[Bracket] = []
    verdict: Verdict
    trend: list[TrendRow] = []
    evidence: Evidence = Evidence.NOT_APPLICABLE
    metrics: dict[str, float] = {}
    notes: list[str] = []

    def payload(self) -> dict[str, Any]:
        return self.model_dump(mode='json')


class Budgets(BaseModel):
    """Every knob an experiment uses, so a report is a function of (inputs, budgets)."""

    model_config = ConfigDict(frozen=True)

    seed: int = SETTINGS.seed
    tol: float = Field(SETTINGS.tol, gt=0)
    witness: WitnessConfig = WitnessConfig()
    refine: RefineConfig = RefineConfig()
    m_schedule: tuple[int, ...] = DEFAULT_SCHEDULE
    ascent_m_max: int = Field(
        4, ge=0, description='Largest m searched by ascent in the triviality trend.'
    )
    profiles: int = Field(8, ge=0, description='Seeded collinear profiles per m.')

    @classmethod
    def from_settings(cls, settings: Settings = SETTINGS) -> Budgets:
        weak = WeakConfig(
            budget=settings.budget,
            seed=settings.seed,
            grid=settings.grid,
            grid_3d=settings.grid_3d,
            allow_grid=True,
        )
        witness = WitnessConfig(
            seed=settings.seed,
            m_max=settings.m_max,
            multistarts=settings.multistarts,
            iterations=settings.iterations,
            weak=weak,
        )
        return cls(
            seed=settings.seed,
            tol=settings.tol,
            witness=witness,
            refine=RefineConfig(
                atoms=settings.atoms,
                rounds=settings.rounds,
                grid=settings.grid,
                grid_3d=settings.grid_3d,
                budget=settings.budget,
                seed=settings.seed,
                witness=witness,
            ),
        )

    def describe(self) -> dict[str, Any]:
        return self.model_dump(mode='json')


def _bracket(label: str, lower: ConstantEstimate, shared: ConstantEstimate) -> Bracket:
    upper = shared.validated if shared.validated is not None else shared.upper
    return Bracket(
        label=label,
        lower=lower.lower,
        upper=upper,
        lower_rigorous=lower.lower_rigorous,
        upper_rigorous=shared.upper_rigorous,
        converged=shared.converged,
    )


def cross_verdict(brackets: Sequence[Bracket], tol: float) -> tuple[Verdict, list[str]]:
    """Compare lower(A) against upper(B) for every ordered pair (A, B)."""
    verdict, notes = Verdict.CONSISTENT, []
    for a in brackets:
        for b in brackets:
            if b.upper is None or a.lower <= b.upper * (1.0 + tol):
                continue
            rigorous = a.lower_rigorous and b.upper_rigorous
            notes.append(
                f'lower[{a.label}] = {a.lower:.9g} exceeds upper[{b.label}] = {b.upper:.9g}'
                f' ({"rigorous" if rigorous else "heuristic"})'
            )
            if rigorous:
                verdict = Verdict.INCONSISTENT
            elif verdict is Verdict.CONSISTENT:
                verdict = Verdict.INCONCLUSIVE
    return verdict, notes


def _shared_bracket(
    T: Operator, schemes: Sequence[ExponentScheme], budgets: Budgets
) -> tuple[list[ConstantEstimate], ConstantEstimate]:
    """Witness lower bounds per scheme and one refined certificate (its LP depends on p only)."""
    lowers = [lower_bound(T, scheme, budgets.witness) for scheme in schemes]
    shared = refine(T, schemes[0], budgets.refine, estimate=lowers[0])
    return lowers, shared


def _inputs(T: Operator, budgets: Budgets, **extra: Any) -> dict[str, Any]:
    return {'operator_digest': operator_digest(T), 'budgets': budgets.describe(), **extra}


def coincidence(
    T: LinearOp,
    p: Any,
    gamma_pairs: Sequence[tuple[Any, Any]],
    budgets: Budgets | None = None,
) -> Report:
    """Bracket the constants of C(q0, q1; p) for every given Gamma pair and cross-check them."""
    budgets = budgets or Budgets()
    if not isinstance(T, LinearOp):
        raise InputError('coincidence takes a linear operator')
    p = parse_exponent(p)
    pairs = [(parse_exponent(q0), parse_exponent(q1)) for q0, q1 in gamma_pairs]
    for q0, q1 in pairs:
        if not gamma_check(p, q0, q1).member:
            raise NotGammaPairError(
                f'({format_exponent(q0)}, {format_exponent(q1)}) is not a Gamma pair for p = '
                f'{format_exponent(p)}'
            )
    if not any(q0 == 1 and q1 == p for q0, q1 in pairs):
        pairs.insert(0, (parse_exponent(1), p))
    schemes = [ExponentScheme.linear_scheme(p, q0, q1) for q0, q1 in pairs]
    log_info(f'coincidence: {len(schemes)} Gamma pairs at p = {format_exponent(p)}')
    lowers, shared = _shared_bracket(T, schemes, budgets)
    brackets = [_bracket(s.label, low, shared) for s, low in zip(schemes, lowers)]
    verdict, notes = cross_verdict(brackets, budgets.tol)
    return Report(
        experiment='coincidence',
        inputs=_inputs(T, budgets, p=format_exponent(p), schemes=[s.label for s in schemes]),
        brackets=brackets,
        verdict=verdict,
        notes=notes,
    )


def multi_equivalence(
    T: MultilinearOp,
    p: Any,
    schemes: Sequence[ExponentScheme],
    budgets: Budgets | None = None,
) -> Report:
    """Joint, separate and general multilinear schemes bracketed and cross-checked."""
    budgets = budgets or Budgets()
    p = parse_exponent(p)
    if not schemes:
        raise InputError('No schemes to compare')
    for scheme in schemes:
        if scheme.linear:
            raise InputError(f'{scheme.label} is not a multilinear scheme')
        if scheme.p != p:
            raise ExponentIdentityError(f'{scheme.label} does not use p = {format_exponent(p)}')
        if scheme.n != T.arity:
            raise ExponentIdentityError(f'{scheme.label} has arity {scheme.n}, T has {T.arity}')
    log_info(f'multi_equivalence: {len(schemes)} schemes, arity {T.arity}')
    lowers, shared = _shared_bracket(T, list(schemes), budgets)
    brackets = [_bracket(s.label, low, shared) for s, low in zip(schemes, lowers)]
    verdict, notes = cross_verdict(brackets, budgets.tol)
    return Report(
        experiment='multi-equivalence',
        inputs=_inputs(T, budgets, p=format_exponent(p), schemes=[s.label for s in schemes]),
        brackets=brackets,
        verdict=verdict,
        notes=notes,
    )


def _collinear_profiles(m: int, count: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    i = np.arange(1, m + 1, dtype=float)
    profiles = [
        (np.ones(m), np.ones(m)),
        (i**-0.6, i**-0.3),
        (i**-0.3, i**-0.6),
        (i**-0.5, i**-0.5),
    ]
    rng = make_rng([seed, m, 1])
    for _ in range(count):
        profiles.append((rng.uniform(0.0, 1.0, m), rng.uniform(0.0, 1.0, m)))
    return profiles


def triviality_trend(
    T: LinearOp,
    p: Any,
    q0: Any,
    q1: Any,
    budgets: Budgets | None = None,
) -> Report:
    """Best witness ratio along an m schedule for a pair in the zone p < q1.

    The trend is compared with the refined upper bound: bounded ratios speak
    for a nontrivial class, ratios outgrowing the bound for triviality. Only a
    rigorous conflict changes the verdict from inconclusive.
    """
    budgets = budgets or Budgets()
    check = gamma_check(p, q0, q1)
    if not check.member:
        raise NotGammaPairError(f'({q0}, {q1}) is not a Gamma pair for p = {p}')
    if not check.trivial_zone:
        raise InputError('The triviality trend needs a pair with p < q1')
    if op_norm(T, budgets.witness.multistarts, budgets.seed).value == 0.0:
        raise InputError('The triviality trend needs a nonzero operator')
    scheme = ExponentScheme.linear_scheme(p, q0, q1)
    weak_cfg = budgets.witness.weak
    trend: list[TrendRow] = []
    for m in budgets.m_schedule:
        best, advisory = 0.0, False
        for alphas, betas in _collinear_profiles(m, budgets.profiles, budgets.seed):
            w = collinear_witness(T, alphas, betas, budgets.witness.multistarts, budgets.seed)
            result = ratio(T, w, scheme, weak_cfg)
            if result.value > best:
                best, advisory = result.value, result.advisory
        if m <= budgets.ascent_m_max:
            result, _ = best_ratio_at(T, scheme, m, budgets.witness)
            if result is not None and result.value > best:
                best, advisory = result.value, result.advisory
        trend.append(TrendRow(m=m, value=best, advisory=advisory))
        log_info(f'triviality trend m={m}: {best:.9g}')
    lower = lower_bound(T, scheme, budgets.witness)
    shared = refine(T, scheme, budgets.refine, estimate=lower)
    bracket = _bracket(scheme.label, lower, shared)
    upper = bracket.upper if bracket.upper is not None else math.inf
    peak = max(row.value for row in trend)
    evidence = Evidence.BOUNDED if peak <= upper * (1.0 + budgets.tol) else Evidence.GROWING
    verdict, notes = Verdict.INCONCLUSIVE, []
    rigorous_peak = max((row.value for row in trend if not row.advisory), default=0.0)
    if rigorous_peak > upper * (1.0 + budgets.tol) and bracket.upper_rigorous:
        verdict = Verdict.INCONSISTENT
        notes.append(f'witness ratio {rigorous_peak:.9g} exceeds validated bound {upper:.9g}')
    notes.append(f'trend is {evidence.value}; the trend reports evidence only')
    return Report(
        experiment='triviality-trend',
        inputs=_inputs(
            T, budgets, p=format_exponent(scheme.p), q0=format_exponent(scheme.q0),
            q1=format_exponent(scheme.qs[0]),
        ),
        brackets=[bracket],
        verdict=verdict,
        trend=trend,
        evidence=evidence,
        metrics={'peak_ratio': peak},
        notes=notes,
    )


def _three_exponent_identity(p: Exponent, q0: Exponent, q1: Exponent) -> Exponent:
    pstar = conjugate(p)
    lhs, rhs = reciprocal(q0), reciprocal(q1) + reciprocal(pstar)
    if abs(float(lhs) - float(rhs)) > 1e-12:
        raise ExponentIdentityError(
            f'1/q0 = {float(lhs):.12g} differs from 1/q1 + 1/p* = {float(rhs):.12g}'
        )
    return pstar


def _holder_family(
    trial: int, rng: np.random.Generator, max_length: int
) -> tuple[np.ndarray, np.ndarray]:
    if trial == 0:
        single = np.zeros(max_length)
        single[0] = 1.0
        return single, single.copy()
    if trial == 1:
        i = np.arange(1, max_length + 1, dtype=float)
        return i**-0.6, i**-0.3
    length = int(rng.integers(1, max_length + 1))
    family = int(rng.integers(0, 3))
    if family == 0:
        return rng.standard_normal(length), rng.standard_normal(length)
    if family == 1:
        return rng.pareto(1.5, length), rng.pareto(1.5, length)
    mask = rng.uniform(size=length) < 0.1
    return rng.standard_normal(length) * mask, rng.standard_normal(length) * mask


def holder_factor_check(
    p: Any,
    q0: Any,
    q1: Any,
    trials: int = 1000,
    seed: int = 0,
    max_length: int = 10_000,
) -> Report:
    """Sample factorizations lambda = alpha * beta and record ||ab||_q0 / (||a||_p* ||b||_q1).

    The three-exponent Hoelder inequality caps the ratio at 1; a sample above
    1 + 1e-9 marks the report inconsistent.
    """
    p, q0, q1 = parse_exponent(p), parse_exponent(q0), parse_exponent(q1)
    pstar = _three_exponent_identity(p, q0, q1)
    if trials < 1 or max_length < 1:
        raise InputError('trials and max_length must be positive')
    rng = make_rng(seed)
    worst, violations = 0.0, 0
    for trial in range(trials):
        alpha, beta = _holder_family(trial, rng, max_length)
        denom = float(lp_norm(alpha, pstar)) * float(lp_norm(beta, q1))
        if denom <= 0.0:
            continue
        value = float(lp_norm(alpha * beta, q0)) / denom
        worst = max(worst, value)
        if value > 1.0 + HOLDER_SLACK:
            violations += 1
            log_warning(f'trial {trial}: Hoelder ratio {value!r}')
    verdict = Verdict.CONSISTENT if violations == 0 else Verdict.INCONSISTENT
    return Report(
        experiment='holder-check',
        inputs={
            'p': format_exponent(p),
            'q0': format_exponent(q0),
            'q1': format_exponent(q1),
            'trials': trials,
            'seed': seed,
            'max_length': max_length,
        },
        verdict=verdict,
        metrics={'max_ratio': worst, 'violations': float(violations)},
        notes=[f'max ratio {worst:.12g} over {trials} trials'],
    )

"""R_1..R_t-S abstract summing at finite scale.

An abstract problem bundles a map f, an S evaluator and t R evaluators with
exponents p_1..p_t. Summing means

    (sum_i S(f, data_i, aux_i)^p0)^(1/p0)
        <= C * prod_k sup_{kappa in K_k} (sum_i R_k(kappa, data_i, aux_i)^p_k)^(1/p_k)

with 1/p0 = sum 1/p_k. Only the last R map may depend on its point kappa;
then a single probability measure on K_t dominates the pointwise inequality.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from fractions import Fraction
from typing import Any, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..errors import (
    HypothesisViolationError,
    InfeasibleError,
    InputError,
    NumericalError,
    UnboundedError,
)
from ..spaces import BallSample, Exponent, is_inf, lp_norm, parse_exponent, reciprocal
from ..utils import log_debug, log_warning
from ..witness import ConstantEstimate
from .simplex import LPStatus, lp_min

__all__ = [
    'Item',
    'RMap',
    'AbstractProblem',
    'MeasureFit',
    'abstract_lower',
    'fit_measure',
    'validate_measure',
    'abstract_bounds',
]


class Item(NamedTuple):
    """One summand: the data slots x_1..x_r and the auxiliary b."""

    data: Any
    aux: Any


class RMap(BaseModel):
    """R(kappa, data, aux) >= 0. `sup`, when set, replaces the sampled supremum
    of (sum_i R(kappa, item_i)^p)^(1/p) over kappa."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    evaluate: Callable[[Any, Any, Any], float]
    exponent: Exponent
    phi_independent: bool = True
    samples: BallSample | None = None
    sup: Callable[[Sequence[Item]], float] | None = None
    batch: Callable[[np.ndarray, Any, Any], np.ndarray] | None = None

    @field_validator('exponent', mode='before')
    @classmethod
    def _parse(cls, value: Any) -> Exponent:
        q = parse_exponent(value)
        if not is_inf(q) and q < 1:
            raise InputError(f'R exponent must be >= 1, got {q}')
        return q

    def over(self, points: np.ndarray, item: Item) -> np.ndarray:
        """R at every point of `points` for one item."""
        if self.batch is not None:
            return np.asarray(self.batch(points, item.data, item.aux), dtype=float)
        return np.array([self.evaluate(k, item.data, item.aux) for k in points], dtype=float)

    def values(self, kappa: Any, items: Sequence[Item]) -> np.ndarray:
        return np.array([self.evaluate(kappa, it.data, it.aux) for it in items], dtype=float)

    def sup_term(self, items: Sequence[Item]) -> float:
        if self.sup is not None:
            return float(self.sup(items))
        if self.phi_independent:
            return float(lp_norm(self.values(None, items), self.exponent))
        if self.samples is None:
            raise InputError('A point-dependent R map needs samples')
        points = self.samples.points
        return max(float(lp_norm(self.values(k, items), self.exponent)) for k in points)


class AbstractProblem(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    f: Any
    s_eval: Callable[[Any, Any, Any], float]
    r_maps: list[RMap] = Field(..., min_length=1)
    r: int = Field(1, ge=1, description='Number of data slots.')

    @model_validator(mode='after')
    def _hypothesis(self) -> AbstractProblem:
        for k, rmap in enumerate(self.r_maps[:-1]):
            if not rmap.phi_independent:
                raise HypothesisViolationError(f'R_{k + 1} depends on its point but is not last')
        last = self.r_maps[-1]
        if not last.phi_independent and last.samples is None and last.sup is None:
            raise InputError('The last R map needs samples of its compact set or a sup')
        return self

    @property
    def t(self) -> int:
        return len(self.r_maps)

    @property
    def p0(self) -> Exponent:
        total = sum((reciprocal(rm.exponent) for rm in self.r_maps), Fraction(0))
        if total == 0:
            raise InputError('All R exponents are infinite')
        return 1 / total if isinstance(total, Fraction) else 1.0 / float(total)

    def s_values(self, items: Sequence[Item]) -> np.ndarray:
        return np.array([self.s_eval(self.f, it.data, it.aux) for it in items], dtype=float)

    def prefactor(self, item: Item) -> float:
        """prod_{k<t} R_k(item); these maps ignore their point."""
        out = 1.0
        for rmap in self.r_maps[:-1]:
            out *= rmap.evaluate(None, item.data, item.aux)
        return out


def abstract_lower(
    problem: AbstractProblem, witnesses: Sequence[Sequence[Item]]
) -> tuple[float, int]:
    """Best ratio (sum S^p0)^(1/p0) / prod sup-terms over the witnesses, with its index."""
    best, best_idx = 0.0, -1
    for idx, items in enumerate(witnesses):
        num = float(lp_norm(problem.s_values(items), problem.p0))
        prod = 1.0
        for rmap in problem.r_maps:
            prod *= rmap.sup_term(items)
        if prod <= 0.0:
            continue
        value = num / prod
        if value > best:
            best, best_idx = value, idx
    return best, best_idx


class MeasureFit(NamedTuple):
    weights: np.ndarray
    constant: float
    lp_objective: float


def fit_measure(problem: AbstractProblem, pairs: Sequence[Item]) -> MeasureFit:
    """Smallest C with S <= C * prefactor * (sum_k mu_k R_t(kappa_k)^p_t)^(1/p_t) on every pair.

    Linearized with nu = C^p_t mu: minimize sum nu subject to one row per pair.
    """
    last = problem.r_maps[-1]
    if last.samples is None:
        raise InputError('Fitting a measure needs samples of the last compact set')
    atoms = last.samples.points
    q = last.exponent
    if is_inf(q):
        raise InputError('The measure exponent must be finite')
    qf = float(q)
    rows, rhs = [], []
    for item in pairs:
        s = float(problem.s_eval(problem.f, item.data, item.aux))
        if s <= 0.0:
            continue
        pre = problem.prefactor(item)
        coeffs = pre**qf * last.over(atoms, item) ** qf
        top = float(coeffs.max()) if coeffs.size else 0.0
        if top <= 0.0:
            raise InfeasibleError('Every atom annihilates a witness the operator does not', item)
        rows.append(-coeffs / top)
        rhs.append(-(s**qf) / top)
    if not rows:
        uniform = np.full(len(atoms), 1.0 / len(atoms))
        return MeasureFit(uniform, 0.0, 0.0)
    solution = lp_min(np.ones(len(atoms)), np.array(rows), np.array(rhs))
    if solution.status is LPStatus.INFEASIBLE:
        raise InfeasibleError('Domination LP is infeasible', pairs)
    if solution.status is LPStatus.UNBOUNDED:
        raise UnboundedError('Domination LP is unbounded below', pairs)
    if solution.x is None:
        raise NumericalError(f'Domination LP ended {solution.status.value}')
    nu = solution.x
    total = float(nu.sum())
    log_debug(f'fit_measure: {len(rows)} rows, {len(atoms)} atoms, sum nu = {total:.12g}')
    if total <= 0.0:
        return MeasureFit(np.full(len(atoms), 1.0 / len(atoms)), 0.0, 0.0)
    return MeasureFit(nu / total, total ** (1.0 / qf), total)


def validate_measure(
    problem: AbstractProblem, weights: np.ndarray, trials: Sequence[Item]
) -> float:
    """max over trials of S / (prefactor * (sum_k mu_k R_t(kappa_k)^p_t)^(1/p_t))."""
    last = problem.r_maps[-1]
    atoms = last.samples.points if last.samples is not None else np.empty((0, 0))
    qf = float(last.exponent)
    best = 0.0
    for item in trials:
        s = float(problem.s_eval(problem.f, item.data, item.aux))
        if s <= 0.0:
            continue
        vals = last.over(atoms, item)
        denom = problem.prefactor(item) * float(weights @ vals**qf) ** (1.0 / qf)
        if denom <= 0.0:
            raise NumericalError('Degenerate denominator at a trial item', item)
        best = max(best, s / denom)
    return best


def abstract_bounds(
    problem: AbstractProblem,
    witnesses: Sequence[Sequence[Item]],
    trials: Sequence[Item] | None = None,
) -> ConstantEstimate:
    """[witness lower bound, single-measure upper bound] for the abstract constant.

    The upper bound is the LP constant fitted on every summand of every
    witness, raised to the validated value over `trials` when given.
    """
    if not witnesses:
        raise InputError('No witnesses')
    lower, _ = abstract_lower(problem, witnesses)
    pairs = [item for items in witnesses for item in items]
    fit = fit_measure(problem, pairs)
    upper = fit.constant
    if trials:
        upper = max(upper, validate_measure(problem, fit.weights, trials))
    if upper < lower:
        log_warning(f'abstract bounds: upper {upper:.9g} below lower {lower:.9g}; upper clamped')
    return ConstantEstimate(
        lower=lower,
        upper=max(upper, lower),
        validated=upper,
        certificate=fit,
        lower_rigorous=True,
        upper_rigorous=False,
    )

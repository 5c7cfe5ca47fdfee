"""Lower bounds on summing constants from optimized witness families.

A witness is a finite family (x_i^(1), ..., x_i^(n), phi_i), i = 1..m. For an
exponent scheme it yields the ratio LHS / RHS of the summing inequality, and
every non-advisory ratio is a lower bound for the best constant.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from enum import Enum
from fractions import Fraction
from typing import Any, NamedTuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import SETTINGS
from .errors import DimensionMismatchError, ExponentIdentityError, InputError, NotGammaPairError
from .operators import Operator, apply_multi, norming_tuple
from .seqnorms import VecSequence, WeakConfig, WeakSup, weak_sup
from .spaces import (
    Exponent,
    conjugate,
    dual,
    format_exponent,
    is_inf,
    lp_norm,
    make_rng,
    norm,
    norming_functional,
    pairing,
    parse_exponent,
    reciprocal,
)
from .utils import log_debug, log_info

__all__ = [
    'SchemeKind',
    'ExponentScheme',
    'GammaCheck',
    'gamma_check',
    'SummingWitness',
    'RatioResult',
    'ratio',
    'WitnessConfig',
    'ConstantEstimate',
    'best_ratio_at',
    'lower_bound',
    'collinear_witness',
    'coordinate_witness',
    'repeated_witness',
]

IDENTITY_TOL = 1e-12


class SchemeKind(str, Enum):
    LINEAR = 'linear'
    MULTI_JOINT = 'multi-joint'
    MULTI_SEPARATE = 'multi-separate'
    MULTI_GENERAL = 'multi-general'


def _close(a: Fraction | float, b: Fraction | float) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return abs(float(a) - float(b)) <= IDENTITY_TOL


def _p_range(p: Exponent) -> Exponent:
    q = parse_exponent(p)
    if not is_inf(q) and q <= 1:
        raise InputError(f'p must lie in (1, inf], got {format_exponent(q)}')
    return q


class ExponentScheme(BaseModel):
    """Which summing inequality is meant.

    `qs` holds q1 for linear schemes and (q1, ..., qn) for multilinear ones;
    the joint scheme has q0 = 1 and uses the joint product norm instead.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: SchemeKind
    p: Exponent
    q0: Exponent
    qs: tuple[Exponent, ...] = ()
    n: int = Field(1, ge=1)

    @field_validator('p', 'q0', mode='before')
    @classmethod
    def _parse_one(cls, value: Any) -> Exponent:
        return parse_exponent(value)

    @field_validator('qs', mode='before')
    @classmethod
    def _parse_many(cls, value: Any) -> tuple[Exponent, ...]:
        return tuple(parse_exponent(v) for v in value)

    @model_validator(mode='after')
    def _identity(self) -> ExponentScheme:
        _p_range(self.p)
        if self.kind is SchemeKind.LINEAR:
            if self.n != 1 or len(self.qs) != 1:
                raise InputError('A linear scheme has exactly one q1')
            member, _ = gamma_check(self.p, self.q0, self.qs[0])
            if not member:
                raise NotGammaPairError(
                    f'({format_exponent(self.q0)}, {format_exponent(self.qs[0])}) is not in Gamma '
                    f'for p = {format_exponent(self.p)}'
                )
        elif self.kind is SchemeKind.MULTI_JOINT:
            if self.q0 != 1 or self.qs:
                raise ExponentIdentityError('The joint scheme has q0 = 1 and no q-tuple')
        else:
            if len(self.qs) != self.n:
                raise ExponentIdentityError(f'{len(self.qs)} exponents for arity {self.n}')
            if is_inf(self.q0) or self.q0 < 1 or any(not is_inf(q) and q < 1 for q in self.qs):
                raise ExponentIdentityError('Scheme exponents must lie in [1, inf]')
            total = sum((reciprocal(q) for q in self.qs), Fraction(0)) + reciprocal(self.pstar)
            if not _close(reciprocal(self.q0), total):
                raise ExponentIdentityError(
                    f'1/q0 = {float(reciprocal(self.q0)):.12g} but the right side is '
                    f'{float(total):.12g}'
                )
        return self

    @property
    def pstar(self) -> Exponent:
        return conjugate(self.p)

    @property
    def linear(self) -> bool:
        return self.kind is SchemeKind.LINEAR

    @property
    def label(self) -> str:
        p = format_exponent(self.p)
        if self.kind is SchemeKind.LINEAR:
            return f'C({format_exponent(self.q0)},{format_exponent(self.qs[0])};{p})'
        if self.kind is SchemeKind.MULTI_JOINT:
            return f'joint(p={p},n={self.n})'
        qs = ','.join(format_exponent(q) for q in self.qs)
        return f'{self.kind.value}(p={p};{format_exponent(self.q0)};{qs})'

    @classmethod
    def linear_scheme(cls, p: Any, q0: Any, q1: Any) -> ExponentScheme:
        return cls(kind=SchemeKind.LINEAR, p=p, q0=q0, qs=(q1,))

    @classmethod
    def cohen(cls, p: Any) -> ExponentScheme:
        """The Cohen strongly p-summing scheme, C(1, p; p)."""
        return cls.linear_scheme(p, 1, p)

    @classmethod
    def multi_joint(cls, p: Any, n: int) -> ExponentScheme:
        return cls(kind=SchemeKind.MULTI_JOINT, p=p, q0=1, n=n)

    @classmethod
    def multi_separate(cls, p: Any, n: int) -> ExponentScheme:
        p = parse_exponent(p)
        q = p if is_inf(p) else p * n
        return cls(kind=SchemeKind.MULTI_SEPARATE, p=p, q0=1, qs=(q,) * n, n=n)

    @classmethod
    def multi_general(cls, p: Any, q0: Any, qs: Sequence[Any]) -> ExponentScheme:
        return cls(kind=SchemeKind.MULTI_GENERAL, p=p, q0=q0, qs=tuple(qs), n=len(qs))


class GammaCheck(NamedTuple):
    member: bool
    trivial_zone: bool


def gamma_check(p: Any, q0: Any, q1: Any) -> GammaCheck:
    """Is (q0, q1) in Gamma for p? The flag marks the zone p < q1 of trivial classes."""
    p = _p_range(p)
    q0, q1 = parse_exponent(q0), parse_exponent(q1)
    if is_inf(q0) or q0 < 1 or is_inf(q1) or q1 <= 1:
        return GammaCheck(False, False)
    member = _close(reciprocal(q0), reciprocal(q1) + reciprocal(conjugate(p)))
    trivial = member and (is_inf(p) or p < q1)
    return GammaCheck(member, bool(trivial))


class SummingWitness(BaseModel):
    """Argument sequences xs[j] (one per slot) and functionals phis, all of length m."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    xs: list[VecSequence] = Field(..., min_length=1)
    phis: VecSequence

    @model_validator(mode='after')
    def _common_length(self) -> SummingWitness:
        lengths = {seq.m for seq in self.xs} | {self.phis.m}
        if len(lengths) != 1:
            raise DimensionMismatchError(f'Witness sequences have lengths {sorted(lengths)}')
        if not np.any(self.phis.items) or any(not np.any(seq.items) for seq in self.xs):
            raise InputError('Witness has an all-zero family')
        return self

    @property
    def m(self) -> int:
        return self.phis.m

    @classmethod
    def build(cls, T: Operator, xs: Sequence[npt.ArrayLike], phis: npt.ArrayLike) -> SummingWitness:
        return cls(
            xs=[VecSequence.of(space, x) for space, x in zip(T.domains, xs)],
            phis=VecSequence.of(dual(T.codomain), phis),
        )

    def item(self, i: int) -> tuple[list[np.ndarray], np.ndarray]:
        return [seq.items[i] for seq in self.xs], self.phis.items[i]


class RatioResult(NamedTuple):
    value: float
    advisory: bool
    lhs: float
    rhs: float


def _check_shapes(T: Operator, w: SummingWitness, scheme: ExponentScheme) -> None:
    if len(w.xs) != T.arity:
        raise DimensionMismatchError(f'Witness has {len(w.xs)} slots, operator {T.arity}')
    if scheme.n != T.arity:
        raise DimensionMismatchError(f'Scheme arity {scheme.n} but operator arity {T.arity}')
    for space, seq in zip(T.domains, w.xs):
        if seq.space != space:
            raise DimensionMismatchError(f'Witness lives in {seq.space}, operator needs {space}')
    if w.phis.space.dim != T.codomain.dim:
        raise DimensionMismatchError('Functionals do not act on the codomain')


def _weak_cfg(cfg: WeakConfig | None) -> WeakConfig:
    return (cfg or WeakConfig()).model_copy(update={'allow_grid': True})


def summing_terms(T: Operator, w: SummingWitness) -> np.ndarray:
    """|phi_i(T(x_i^(1), ..., x_i^(n)))| for every i."""
    terms = []
    for i in range(w.m):
        xs, phi = w.item(i)
        terms.append(abs(pairing(phi, apply_multi(T, xs))))
    return np.array(terms)


def strong_factors(T: Operator, w: SummingWitness, scheme: ExponentScheme) -> list[float]:
    """The scheme's strong-norm factors of the right-hand side."""
    norms = [np.array([norm(space, x) for x in seq.items]) for space, seq in zip(T.domains, w.xs)]
    if scheme.kind is SchemeKind.MULTI_JOINT:
        joint = np.ones(w.m)
        for values in norms:
            joint = joint * values
        return [float(lp_norm(joint, scheme.p))]
    return [float(lp_norm(values, q)) for values, q in zip(norms, scheme.qs)]


def ratio(
    T: Operator,
    w: SummingWitness,
    scheme: ExponentScheme,
    weak_cfg: WeakConfig | None = None,
) -> RatioResult:
    """LHS / RHS of the summing inequality on one witness.

    The weak p* norm of the functionals is exact when possible, grid-certified
    for codomains of dim <= 3 and otherwise an ascent value, which marks the
    ratio advisory.
    """
    _check_shapes(T, w, scheme)
    lhs = float(lp_norm(summing_terms(T, w), scheme.q0))
    weak = weak_sup(w.phis.items, T.codomain, scheme.pstar, _weak_cfg(weak_cfg))
    prod = 1.0
    for factor in strong_factors(T, w, scheme):
        prod *= factor
    prod *= weak.value
    if prod <= 0.0:
        raise InputError('Right-hand side of the summing inequality is zero')
    return RatioResult(lhs / prod, weak.lower_bound_only, lhs, prod)


class WitnessConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int = SETTINGS.seed
    m_max: int = Field(SETTINGS.m_max, ge=1)
    multistarts: int = Field(SETTINGS.multistarts, ge=1)
    iterations: int = Field(SETTINGS.iterations, ge=0)
    fd_step: float = Field(1e-4, gt=0)
    learning_rate: float = Field(0.05, gt=0)
    decay: float = Field(0.9, gt=0, le=1)
    decay_every: int = Field(50, ge=1)
    weak: WeakConfig = WeakConfig(allow_grid=True)


class ConstantEstimate(BaseModel):
    """A bracket [lower, upper] for the best constant of `scheme`."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    lower: float = Field(..., ge=0.0)
    upper: float | None = None
    # Raw validated upper bound before clamping to `lower`.
    validated: float | None = None
    best_witness: SummingWitness | None = None
    certificate: Any | None = None
    scheme: ExponentScheme | None = None
    lower_rigorous: bool = True
    upper_rigorous: bool = False
    converged: bool = True
    advisory_best: float | None = None

    @model_validator(mode='after')
    def _bracket(self) -> ConstantEstimate:
        if self.upper is not None and self.lower > self.upper + 1e-9:
            raise InputError(f'Bracket inverted: lower {self.lower} > upper {self.upper}')
        return self


class _Layout(NamedTuple):
    """How a flat parameter vector splits into the witness arrays."""

    shapes: list[tuple[int, int]]

    def split(self, theta: np.ndarray) -> list[np.ndarray]:
        out, start = [], 0
        for shape in self.shapes:
            size = shape[0] * shape[1]
            out.append(theta[start : start + size].reshape(shape))
            start += size
        return out


def _fast_ratio(
    T: Operator,
    arrays: list[np.ndarray],
    scheme: ExponentScheme,
    weak_fn: Callable[[np.ndarray], WeakSup],
) -> float:
    """Vectorized ratio used inside the search; 0 where the RHS vanishes."""
    *xs, phis = arrays
    m = phis.shape[0]
    out = np.broadcast_to(T.tensor, (m, *T.tensor.shape))
    for x in reversed(xs):
        out = np.einsum('m...k,mk->m...', out, x)
    terms = np.abs(np.sum(out * phis, axis=1))
    lhs = float(lp_norm(terms, scheme.q0))
    norms = [lp_norm(x, space.exponent, axis=1) for space, x in zip(T.domains, xs)]
    if scheme.kind is SchemeKind.MULTI_JOINT:
        rhs = float(lp_norm(np.prod(norms, axis=0), scheme.p))
    else:
        rhs = math.prod(float(lp_norm(v, q)) for v, q in zip(norms, scheme.qs))
    if rhs <= 0.0:
        return 0.0
    weak = weak_fn(phis).value
    return lhs / (rhs * weak) if weak > 0 else 0.0


def repeated_witness(
    T: Operator, m: int, budget: int | None = None, seed: int = 0
) -> SummingWitness:
    """m copies of a norming tuple; its ratio is ||T|| for every linear scheme."""
    found = norming_tuple(T, budget, seed)
    return SummingWitness.build(
        T, [np.tile(x, (m, 1)) for x in found.xs], np.tile(found.functional, (m, 1))
    )


def coordinate_witness(T: Operator, m: int) -> list[np.ndarray]:
    """x_i^(j) = e_(i mod d_j) with phi_i norming T(x_i); returned as raw arrays."""
    xs = []
    for space in T.domains:
        x = np.zeros((m, space.dim))
        x[np.arange(m), np.arange(m) % space.dim] = 1.0
        xs.append(x)
    phis = np.array(
        [norming_functional(T.codomain, apply_multi(T, [x[i] for x in xs])) for i in range(m)]
    )
    return [*xs, phis]


def collinear_witness(
    T: Operator,
    alphas: npt.ArrayLike,
    betas: npt.ArrayLike,
    budget: int | None = None,
    seed: int = 0,
) -> SummingWitness:
    """x_i = alpha_i x, phi_i = beta_i f along a norming pair (x, f) of T."""
    a = np.asarray(alphas, dtype=float)
    b = np.asarray(betas, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatchError('alphas and betas must be vectors of one length')
    found = norming_tuple(T, budget, seed)
    xs = [np.outer(a, found.xs[0])] + [np.tile(x, (len(a), 1)) for x in found.xs[1:]]
    return SummingWitness.build(T, xs, np.outer(b, found.functional))


def _ascend(
    theta: np.ndarray,
    objective: Callable[[np.ndarray], float],
    cfg: WitnessConfig,
) -> tuple[np.ndarray, float]:
    """Forward-difference gradient ascent accepting only improving moves."""
    value = objective(theta)
    shrink = 1.0
    for t in range(cfg.iterations):
        grad = np.zeros_like(theta)
        for k in range(theta.size):
            shifted = theta.copy()
            shifted[k] += cfg.fd_step
            grad[k] = objective(shifted) - value
        gnorm = float(np.linalg.norm(grad))
        if gnorm == 0.0:
            break
        lr = cfg.learning_rate * cfg.decay ** (t // cfg.decay_every) * shrink
        candidate = theta + lr * float(np.linalg.norm(theta)) * grad / gnorm
        cand_value = objective(candidate)
        if cand_value > value:
            theta, value = candidate, cand_value
            shrink = min(1.0, shrink * 2.0)
        else:
            shrink *= 0.5
    return theta, value


def best_ratio_at(
    T: Operator,
    scheme: ExponentScheme,
    m: int,
    config: WitnessConfig | None = None,
) -> tuple[RatioResult | None, SummingWitness | None]:
    """Best ratio over optimized witnesses of length exactly m.

    Returns (None, None) when no start produced a nonzero right-hand side.
    """
    cfg = config or WitnessConfig()
    if m < 1:
        raise InputError(f'Witness length must be >= 1, got {m}')
    weak_cfg = _weak_cfg(cfg.weak)
    pstar = scheme.pstar

    def weak_fn(phis: np.ndarray) -> WeakSup:
        return weak_sup(phis, T.codomain, pstar, weak_cfg)

    layout = _Layout([(m, d.dim) for d in T.domains] + [(m, T.codomain.dim)])
    found = norming_tuple(T, cfg.multistarts, cfg.seed)
    starts = [[np.tile(x, (m, 1)) for x in found.xs] + [np.tile(found.functional, (m, 1))]]
    starts.append(coordinate_witness(T, m))
    rng = make_rng([cfg.seed, m])
    while len(starts) < cfg.multistarts:
        starts.append([rng.standard_normal(shape) for shape in layout.shapes])

    def objective(theta: np.ndarray) -> float:
        return _fast_ratio(T, layout.split(theta), scheme, weak_fn)

    best: tuple[RatioResult, SummingWitness] | None = None
    for restart, arrays in enumerate(starts[: cfg.multistarts]):
        theta0 = np.concatenate([a.ravel() for a in arrays])
        if objective(theta0) <= 0.0 and restart < 2:
            continue
        theta, _ = _ascend(theta0, objective, cfg)
        parts = layout.split(theta)
        try:
            w = SummingWitness.build(T, parts[:-1], parts[-1])
            result = ratio(T, w, scheme, weak_cfg)
        except InputError:
            continue
        if best is None or result.value > best[0].value:
            best = (result, w)
            log_debug(f'm={m} restart {restart}: ratio {result.value:.12g}')
    if best is None:
        return None, None
    return best


def lower_bound(
    T: Operator,
    scheme: ExponentScheme,
    config: WitnessConfig | None = None,
) -> ConstantEstimate:
    """max over m = 1..m_max of the best witness ratio.

    The norming-pair value |f(T(x))| always counts, so lower >= the operator
    norm found with the same seed. Advisory ratios are reported separately.
    """
    cfg = config or WitnessConfig()
    if scheme.n != T.arity:
        raise DimensionMismatchError(f'Scheme arity {scheme.n} but operator arity {T.arity}')
    baseline = norming_tuple(T, cfg.multistarts, cfg.seed)
    lower, best_w = baseline.value, None
    if baseline.value > 0:
        best_w = repeated_witness(T, 1, cfg.multistarts, cfg.seed)
    advisory_best: float | None = None
    for m in range(1, cfg.m_max + 1):
        result, w = best_ratio_at(T, scheme, m, cfg)
        if result is None:
            continue
        if result.advisory:
            advisory_best = max(advisory_best or 0.0, result.value)
        elif result.value > lower:
            lower, best_w = result.value, w
        log_debug(f'{scheme.label} m={m}: {result.value:.12g} (advisory={result.advisory})')
    log_info(f'{scheme.label}: witness lower bound {lower:.6g}')
    return ConstantEstimate(
        lower=lower,
        best_witness=best_w,
        scheme=scheme,
        lower_rigorous=True,
        advisory_best=advisory_best,
    )

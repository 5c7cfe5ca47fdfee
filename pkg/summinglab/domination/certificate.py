"""Finite atomic domination certificates and the cutting-plane loop around them.

A certificate is a probability measure mu on atoms psi_k of the codomain
ball and a constant C such that

    |phi(T(x1, ..., xn))| <= C * prod ||x_j|| * (sum_k mu_k |psi_k(phi)|^p*)^(1/p*).

Integrating this pointwise inequality (Hoelder) bounds the best constant of
every summing scheme sharing p, so one certificate serves them all.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from typing import Any, NamedTuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config import SETTINGS
from ..errors import CertificateValidationError, InputError, NumericalError
from ..operators import Operator, apply_multi, form_norming_tuple, norming_tuple
from ..seqnorms import NormMethod, WeakConfig, weak_sup
from ..spaces import (
    BallSample,
    SpaceSpec,
    ball_points,
    conjugate,
    dual,
    lp_norm,
    norm,
    pairing,
    sphere_grid,
)
from ..utils import log_debug, log_info, log_warning
from ..witness import (
    ConstantEstimate,
    ExponentScheme,
    SchemeKind,
    SummingWitness,
    WitnessConfig,
    coordinate_witness,
    lower_bound,
)
from .abstract import AbstractProblem, Item, RMap, fit_measure

__all__ = [
    'DominationPair',
    'DominationCertificate',
    'ValidationResult',
    'RefineConfig',
    'pairs_from_witness',
    'canonical_problem',
    'witness_items',
    'fit_certificate',
    'validate_certificate',
    'atom_grid',
    'refine',
]

CONVERGENCE_TOL = 1e-3
PATTERN_ITERATIONS = 200
# Below this the weighted atoms are treated as annihilating phi.
DEGENERATE_DENOMINATOR = 1e-12


class DominationPair(NamedTuple):
    """One point (x1, ..., xn) of the domain product and one functional phi."""

    xs: list[np.ndarray]
    phi: np.ndarray

    def item(self) -> Item:
        return Item(list(self.xs), self.phi)


def pairs_from_witness(w: SummingWitness) -> list[DominationPair]:
    return [DominationPair(*w.item(i)) for i in range(w.m)]


def witness_items(w: SummingWitness) -> list[Item]:
    return [pair.item() for pair in pairs_from_witness(w)]


def canonical_problem(
    T: Operator,
    scheme: ExponentScheme,
    atoms: BallSample | None = None,
    weak_cfg: WeakConfig | None = None,
) -> AbstractProblem:
    """S = |phi(T(x...))|, strong-norm R maps per the scheme, and the measure
    term R_t(psi, x, phi) = |psi(phi)| over the codomain ball."""
    if scheme.n != T.arity:
        raise InputError(f'Scheme arity {scheme.n} but operator arity {T.arity}')
    cfg = (weak_cfg or WeakConfig()).model_copy(update={'allow_grid': True})
    pstar = scheme.pstar
    codomain = T.codomain

    def s_eval(f: Operator, data: Sequence[np.ndarray], aux: np.ndarray) -> float:
        return abs(pairing(aux, apply_multi(f, data)))

    def slot_norm(j: int, space: SpaceSpec) -> RMap:
        return RMap(
            evaluate=lambda _k, data, _aux: norm(space, data[j]), exponent=scheme.qs[j]
        )

    def joint_norm(_k: Any, data: Sequence[np.ndarray], _aux: Any) -> float:
        out = 1.0
        for space, x in zip(T.domains, data):
            out *= norm(space, x)
        return out

    if scheme.kind is SchemeKind.MULTI_JOINT:
        r_maps = [RMap(evaluate=joint_norm, exponent=scheme.p)]
    else:
        r_maps = [slot_norm(j, space) for j, space in enumerate(T.domains)]
    r_maps.append(
        RMap(
            evaluate=lambda k, _data, aux: abs(pairing(aux, k)),
            batch=lambda pts, _data, aux: np.abs(pts @ aux),
            exponent=pstar,
            phi_independent=False,
            samples=atoms,
            sup=lambda items: weak_sup(
                np.array([it.aux for it in items]), codomain, pstar, cfg
            ).value,
        )
    )
    return AbstractProblem(f=T, s_eval=s_eval, r_maps=r_maps, r=T.arity)


class DominationCertificate(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    atoms: BallSample
    weights: np.ndarray
    constant: float = Field(..., ge=0.0)
    scheme: ExponentScheme

    @field_validator('weights', mode='before')
    @classmethod
    def _as_array(cls, value: npt.ArrayLike) -> np.ndarray:
        return np.array(value, dtype=float)

    @model_validator(mode='after')
    def _probability(self) -> DominationCertificate:
        if self.weights.shape != (len(self.atoms),):
            raise InputError(f'{self.weights.size} weights for {len(self.atoms)} atoms')
        if np.any(self.weights < 0):
            raise InputError('Negative certificate weight')
        if abs(float(self.weights.sum()) - 1.0) > 1e-9:
            raise InputError(f'Weights sum to {float(self.weights.sum())!r}, not 1')
        self.weights.flags.writeable = False
        return self

    def with_constant(self, constant: float) -> DominationCertificate:
        return self.model_copy(update={'constant': constant})


def _as_items(pairs: Sequence[DominationPair | SummingWitness]) -> list[Item]:
    items: list[Item] = []
    for pair in pairs:
        if isinstance(pair, SummingWitness):
            items.extend(witness_items(pair))
        else:
            items.append(pair.item())
    return items


def fit_certificate(
    T: Operator,
    scheme: ExponentScheme,
    atoms: BallSample,
    witnesses: Sequence[DominationPair | SummingWitness],
) -> DominationCertificate:
    """Least-constant measure on `atoms` dominating T on every supplied pair."""
    if len(atoms) == 0:
        raise InputError('No atoms')
    if atoms.space.dim != T.codomain.dim:
        raise InputError(f'Atoms live in {atoms.space}, the codomain is {T.codomain}')
    items = _as_items(witnesses)
    if not items:
        raise InputError('No witnesses')
    fit = fit_measure(canonical_problem(T, scheme, atoms), items)
    return DominationCertificate(
        atoms=atoms, weights=fit.weights, constant=fit.constant, scheme=scheme
    )


class ValidationResult(NamedTuple):
    value: float
    phi: np.ndarray
    xs: list[np.ndarray]
    heuristic: bool


def validate_certificate(
    T: Operator,
    cert: DominationCertificate,
    budget: int | None = None,
    seed: int | None = None,
    resolution: int | None = None,
) -> ValidationResult:
    """sup over phi of ||phi o T|| / (sum_k mu_k |psi_k(phi)|^p*)^(1/p*).

    The stored constant is ignored. Codomains of dim <= 3 are swept on a
    sphere grid; larger ones on a seeded sample, which marks the result
    heuristic. The best grid point is then polished by a pattern search.
    """
    budget = SETTINGS.budget if budget is None else budget
    seed = SETTINGS.seed if seed is None else seed
    ps = float(cert.scheme.pstar)
    space = dual(T.codomain)
    atoms = cert.atoms.points
    mu = cert.weights
    heuristic = False
    if space.dim <= 3:
        if resolution is None:
            resolution = SETTINGS.grid_3d if space.dim == 3 else SETTINGS.grid
        candidates = sphere_grid(space, resolution).points
    else:
        candidates = ball_points(space, max(budget, 2 * space.dim), seed).points
        heuristic = True
    scale = float(np.abs(T.tensor).max()) if T.tensor.size else 0.0
    tiny = 1e-13 * scale

    def numerators(phis: np.ndarray) -> np.ndarray:
        nonlocal heuristic
        if T.arity == 1:
            return lp_norm(phis @ T.tensor, conjugate(T.domains[0].exponent), axis=1)
        out = []
        for phi in phis:
            found = form_norming_tuple(T, phi, budget, seed)
            heuristic |= found.method is NormMethod.ASCENT
            out.append(found.value)
        return np.array(out)

    def rho(phis: np.ndarray) -> np.ndarray:
        num = numerators(phis)
        den = (np.abs(phis @ atoms.T) ** ps @ mu) ** (1.0 / ps)
        bad = np.flatnonzero((den <= DEGENERATE_DENOMINATOR) & (num > tiny))
        if bad.size:
            raise CertificateValidationError(
                'Every weighted atom annihilates a functional the operator does not',
                phis[bad[0]].copy(),
            )
        return np.where(num > tiny, num / np.maximum(den, DEGENERATE_DENOMINATOR), 0.0)

    values = rho(candidates)
    k = int(np.argmax(values))
    best_phi, best = candidates[k].copy(), float(values[k])
    if space.dim > 1 and best > 0.0:
        n = len(candidates)
        step = 2.0 * math.pi / n if space.dim == 2 else 1.0 / math.sqrt(n)
        for _ in range(PATTERN_ITERATIONS):
            if step < 1e-10:
                break
            moves = np.vstack([np.eye(space.dim), -np.eye(space.dim)]) * step + best_phi
            moves = moves / lp_norm(moves, space.exponent, axis=1)[:, None]
            trial = rho(moves)
            j = int(np.argmax(trial))
            if trial[j] > best:
                best, best_phi = float(trial[j]), moves[j]
            else:
                step *= 0.5
    found = form_norming_tuple(T, best_phi, budget, seed)
    log_debug(f'validate_certificate: {best:.12g} (heuristic={heuristic})')
    return ValidationResult(best, best_phi, found.xs, heuristic)


class RefineConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    atoms: int = Field(SETTINGS.atoms, ge=4)
    rounds: int = Field(SETTINGS.rounds, ge=1)
    tol: float = Field(CONVERGENCE_TOL, gt=0)
    grid: int = Field(SETTINGS.grid, ge=4)
    grid_3d: int = Field(SETTINGS.grid_3d, ge=2)
    budget: int = Field(SETTINGS.budget, ge=1)
    seed: int = SETTINGS.seed
    witness: WitnessConfig = WitnessConfig()


def atom_grid(codomain: SpaceSpec, cfg: RefineConfig) -> BallSample:
    """Atoms on the codomain sphere: a grid for dims <= 3, a seeded sample beyond."""
    if codomain.dim <= 2:
        return sphere_grid(codomain, cfg.atoms)
    if codomain.dim == 3:
        return sphere_grid(codomain, max(2, math.isqrt(cfg.atoms)))
    return ball_points(codomain, max(cfg.atoms, 2 * codomain.dim), cfg.seed)


def _seed_pairs(T: Operator, estimate: ConstantEstimate, cfg: RefineConfig) -> list[DominationPair]:
    pairs: list[DominationPair] = []
    if estimate.best_witness is not None:
        pairs.extend(pairs_from_witness(estimate.best_witness))
    found = norming_tuple(T, cfg.witness.multistarts, cfg.witness.seed)
    pairs.append(DominationPair(found.xs, found.functional))
    *xs, phis = coordinate_witness(T, max(d.dim for d in T.domains))
    for i, phi in enumerate(phis):
        if np.any(phi):
            pairs.append(DominationPair([x[i] for x in xs], phi))
    return pairs


def refine(
    T: Operator,
    scheme: ExponentScheme,
    config: RefineConfig | None = None,
    estimate: ConstantEstimate | None = None,
) -> ConstantEstimate:
    """Kelley loop: fit on the current pairs, validate, add the worst pair, repeat.

    Returns [witness lower bound, best validated constant]. `estimate` reuses
    an existing witness lower bound.
    """
    cfg = config or RefineConfig()
    if estimate is None:
        estimate = lower_bound(T, scheme, cfg.witness)
    atoms = atom_grid(T.codomain, cfg)
    pairs = _seed_pairs(T, estimate, cfg)
    resolution = cfg.grid_3d if T.codomain.dim == 3 else cfg.grid
    best_upper, best_cert = math.inf, None
    converged, heuristic = False, False
    for rnd in range(cfg.rounds):
        cert = fit_certificate(T, scheme, atoms, pairs)
        try:
            val = validate_certificate(T, cert, cfg.budget, cfg.seed, resolution)
        except CertificateValidationError as e:
            phi = np.asarray(e.witness)
            pairs.append(DominationPair(form_norming_tuple(T, phi).xs, phi))
            log_info(f'refine round {rnd}: LP {cert.constant:.6g}, measure degenerate')
            continue
        heuristic = heuristic or val.heuristic
        log_info(f'refine round {rnd}: LP {cert.constant:.6g}, validated {val.value:.6g}')
        if val.value < best_upper:
            best_upper, best_cert = val.value, cert.with_constant(val.value)
        if val.value - cert.constant <= cfg.tol * val.value:
            converged = True
            break
        pairs.append(DominationPair(val.xs, val.phi))
    if best_cert is None:
        raise NumericalError(f'No certificate validated in {cfg.rounds} rounds', pairs[-1])
    if best_upper < estimate.lower:
        log_warning(
            f'refine: validated {best_upper:.9g} below witness lower bound {estimate.lower:.9g};'
            ' upper clamped'
        )
    return ConstantEstimate(
        lower=estimate.lower,
        upper=max(best_upper, estimate.lower),
        validated=best_upper,
        best_witness=estimate.best_witness,
        certificate=best_cert,
        scheme=scheme,
        lower_rigorous=estimate.lower_rigorous,
        upper_rigorous=not heuristic,
        converged=converged,
        advisory_best=estimate.advisory_best,
    )

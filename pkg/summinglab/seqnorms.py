"""Strong, weak and Cohen norms of finite vector sequences.

All three are computed on finite truncations (x_1, ..., x_m). Weak norms are
exact whenever the dual ball is a polytope we can enumerate or the problem is
spectral. The Cohen norm is the projective tensor norm of (x_i) in
l_p^m (x) E: exact on l_1 spaces (sum of column l_p norms) and on l_2 at
p = 2 (trace norm), a search certified only at oracle scale otherwise.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable
from enum import Enum
from typing import Literal, NamedTuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import SETTINGS
from .errors import BudgetTooSmallError, InputError
from .spaces import (
    MAX_SIGN_DIM,
    SPHERE_TOL,
    Exponent,
    SpaceSpec,
    ball_points,
    conjugate,
    dual,
    is_inf,
    iter_sign_vectors,
    lp_norm,
    make_rng,
    norm,
    norming_functional,
    parse_exponent,
    sphere_grid,
)
from .utils import log_debug

__all__ = [
    'NormMethod',
    'NormEstimate',
    'VecSequence',
    'WeakConfig',
    'WeakSup',
    'strong_norm',
    'weak_norm',
    'weak_sup',
    'grid_sup',
    'cohen_norm',
    'grid_oracle',
    'oracle_resolution',
]

ORACLE_MAX_DIM = 3
ORACLE_MAX_M = 4
# Multiply-adds one exhaustive Cohen oracle run may spend.
COHEN_ORACLE_WORK = 2e8
COHEN_PROFILE_STEPS = {1: 1, 2: 24, 3: 12, 4: 8}


class NormMethod(str, Enum):
    EXACT = 'exact'
    EXTREME = 'extreme-point-enumeration'
    SPECTRAL = 'spectral'
    ASCENT = 'ascent-heuristic'
    GRID = 'grid-oracle'


class NormEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float = Field(..., ge=0.0)
    method: NormMethod
    lower_bound_only: bool = False

    @model_validator(mode='after')
    def _heuristics_are_lower_bounds(self) -> NormEstimate:
        if self.method is NormMethod.ASCENT and not self.lower_bound_only:
            raise InputError('Ascent estimates must be flagged lower_bound_only')
        return self


class VecSequence(BaseModel):
    """A finite sequence (x_1, ..., x_m) in one space, stored as an m x dim array."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    space: SpaceSpec
    items: np.ndarray

    @field_validator('items', mode='before')
    @classmethod
    def _as_array(cls, value: npt.ArrayLike) -> np.ndarray:
        arr = np.array(value, dtype=float)
        if arr.ndim == 1 and arr.size:
            arr = arr[None, :]
        return arr

    @model_validator(mode='after')
    def _shape(self) -> VecSequence:
        if self.items.size == 0 or self.items.ndim != 2:
            raise InputError('Empty sequence')
        if self.items.shape[1] != self.space.dim:
            raise InputError(f'Items of width {self.items.shape[1]} do not live in {self.space}')
        self.items.flags.writeable = False
        return self

    @classmethod
    def of(cls, space: SpaceSpec, items: npt.ArrayLike) -> VecSequence:
        return cls(space=space, items=items)

    @property
    def m(self) -> int:
        return int(self.items.shape[0])

    def scaled(self, c: float) -> VecSequence:
        return VecSequence(space=self.space, items=self.items * c)

    def appended(self, v: npt.ArrayLike) -> VecSequence:
        return VecSequence(space=self.space, items=np.vstack([self.items, np.asarray(v, float)]))


class WeakConfig(BaseModel):
    """Knobs of weak-norm evaluation. `allow_grid` lets dims <= 3 use the grid oracle."""

    model_config = ConfigDict(frozen=True)

    budget: int = Field(SETTINGS.budget, ge=1)
    seed: int = SETTINGS.seed
    multistarts: int = Field(32, ge=1)
    iterations: int = Field(500, ge=1)
    rel_tol: float = 1e-10
    grid: int = Field(SETTINGS.grid, ge=4)
    grid_3d: int = Field(SETTINGS.grid_3d, ge=2)
    allow_grid: bool = False
    cohen_starts: int = Field(16, ge=1)
    cohen_iterations: int = Field(300, ge=1)


class WeakSup(NamedTuple):
    """Value of sup_psi (sum |psi(x_i)|^p)^(1/p) with the maximizing psi."""

    value: float
    argmax: np.ndarray
    method: NormMethod
    lower_bound_only: bool


def _check_p(p: Exponent) -> Exponent:
    q = parse_exponent(p)
    if not is_inf(q) and q < 1:
        raise InputError(f'Sequence exponent must be >= 1, got {q}')
    return q


def oracle_resolution(dim: int, cfg: WeakConfig | None = None) -> int:
    cfg = cfg or WeakConfig()
    return cfg.grid_3d if dim == 3 else cfg.grid


def strong_norm(seq: VecSequence, p: Exponent) -> NormEstimate:
    """(sum ||x_i||^p)^(1/p), exact."""
    q = _check_p(p)
    norms = np.array([norm(seq.space, x) for x in seq.items])
    return NormEstimate(value=float(lp_norm(norms, q)), method=NormMethod.EXACT)


def grid_sup(items: np.ndarray, ball_space: SpaceSpec, p: Exponent, resolution: int) -> WeakSup:
    """Exhaustive sup over a deterministic grid of the unit sphere of `ball_space`."""
    grid = sphere_grid(ball_space, resolution).points
    vals = lp_norm(items @ grid.T, p, axis=0)
    k = int(np.argmax(vals))
    return WeakSup(float(vals[k]), grid[k].copy(), NormMethod.GRID, False)


def _ascent_sup(items: np.ndarray, ball_space: SpaceSpec, p: Exponent, cfg: WeakConfig) -> WeakSup:
    # Conditional-gradient fixed point; the objective is convex, so each step cannot decrease it.
    home = dual(ball_space)
    pf = float(p) if not is_inf(p) else math.inf
    sample = ball_points(ball_space, max(cfg.budget, 2 * ball_space.dim), cfg.seed).points

    def value(psi: np.ndarray) -> float:
        return float(lp_norm(items @ psi, p))

    start_vals = lp_norm(items @ sample.T, p, axis=0)
    order = np.argsort(-start_vals, kind='stable')[: cfg.multistarts]
    best_val, best_psi = -1.0, sample[order[0]]
    for restart, idx in enumerate(order):
        psi = sample[idx]
        val = value(psi)
        for _ in range(cfg.iterations):
            a = items @ psi
            g = (np.sign(a) * np.abs(a) ** (pf - 1.0)) @ items
            if not np.any(g):
                break
            candidate = norming_functional(home, g)
            cand_val = value(candidate)
            if cand_val - val <= cfg.rel_tol * max(val, 1e-300):
                if cand_val > val:
                    psi, val = candidate, cand_val
                break
            psi, val = candidate, cand_val
        if val > best_val:
            best_val, best_psi = val, psi
            log_debug(f'weak ascent restart {restart}: {val:.12g}')
    return WeakSup(best_val, best_psi, NormMethod.ASCENT, True)


def weak_sup(
    items: npt.ArrayLike, ball_space: SpaceSpec, p: Exponent, cfg: WeakConfig | None = None
) -> WeakSup:
    """sup over psi in the unit ball of `ball_space` of ||(psi(x_i))_i||_p.

    The rows of `items` live in the predual of `ball_space`.
    """
    cfg = cfg or WeakConfig()
    x = np.atleast_2d(np.asarray(items, dtype=float))
    m, dim = x.shape
    r = ball_space.exponent
    if is_inf(p):
        home = dual(ball_space)
        norms = np.array([norm(home, row) for row in x])
        k = int(np.argmax(norms))
        return WeakSup(float(norms[k]), norming_functional(home, x[k]), NormMethod.EXACT, False)
    if not is_inf(r) and r == 1:
        vals = lp_norm(x, p, axis=0)
        k = int(np.argmax(vals))
        psi = np.zeros(dim)
        psi[k] = 1.0
        return WeakSup(float(vals[k]), psi, NormMethod.EXTREME, False)
    if is_inf(r) and dim <= MAX_SIGN_DIM:
        best_val, best_psi = -1.0, np.ones(dim)
        for signs in iter_sign_vectors(dim, halved=True):
            vals = lp_norm(x @ signs.T, p, axis=0)
            k = int(np.argmax(vals))
            if vals[k] > best_val:
                best_val, best_psi = float(vals[k]), signs[k].copy()
        return WeakSup(best_val, best_psi, NormMethod.EXTREME, False)
    if not is_inf(r) and r == 2 and p == 2:
        _, s, vt = np.linalg.svd(x)
        return WeakSup(float(s[0]), vt[0].copy(), NormMethod.SPECTRAL, False)
    if cfg.allow_grid and dim <= ORACLE_MAX_DIM:
        return grid_sup(x, ball_space, p, oracle_resolution(dim, cfg))
    del m
    return _ascent_sup(x, ball_space, p, cfg)


def weak_norm(
    seq: VecSequence,
    p: Exponent,
    budget: int | None = None,
    seed: int | None = None,
    config: WeakConfig | None = None,
) -> NormEstimate:
    """sup over the dual unit ball of (sum |psi(x_i)|^p)^(1/p)."""
    q = _check_p(p)
    cfg = config or WeakConfig()
    updates = {'allow_grid': False}
    if budget is not None:
        if budget < 1:
            raise BudgetTooSmallError(f'Budget {budget} < 1')
        updates['budget'] = budget
    if seed is not None:
        updates['seed'] = seed
    cfg = cfg.model_copy(update=updates)
    sup = weak_sup(seq.items, dual(seq.space), q, cfg)
    return NormEstimate(value=sup.value, method=sup.method, lower_bound_only=sup.lower_bound_only)


WeakFn = Callable[[np.ndarray], WeakSup]


def _cohen_starts(seq: VecSequence, p: Exponent, count: int, seed: int) -> list[np.ndarray]:
    x = seq.items
    norms = np.array([norm(seq.space, row) for row in x])
    directions = np.array([norming_functional(seq.space, row) for row in x])
    if is_inf(p):
        weights = np.zeros(len(x))
        weights[int(np.argmax(norms))] = 1.0
    else:
        top = norms.max()
        weights = (norms / top) ** (float(p) - 1.0) if top > 0 else np.ones(len(x))
    starts = [weights[:, None] * directions, directions.copy()]
    rng = make_rng(seed)
    while len(starts) < count:
        starts.append(rng.standard_normal(x.shape))
    return starts[:count]


def _cohen_descent(
    seq: VecSequence, p: Exponent, weak_fn: WeakFn, starts: list[np.ndarray], iterations: int
) -> tuple[float, np.ndarray]:
    """max over starts of sum|phi_i(x_i)| / W(phi), by projected subgradient descent of W
    on the hyperplane sum phi_i(x_i) = 1 (a convex problem)."""
    x = seq.items
    pstar = conjugate(p)
    ell = SpaceSpec(dim=seq.m, exponent=pstar)
    xx = float(np.sum(x * x))
    best_val, best_phi = 0.0, np.zeros_like(x)
    for restart, start in enumerate(starts):
        s = float(np.sum(start * x))
        if abs(s) <= 1e-300:
            continue
        phi = start / s
        run_best, run_phi = -1.0, phi
        for t in range(iterations):
            sup = weak_fn(phi)
            if sup.value <= 0:
                break
            val = float(np.sum(np.abs(np.sum(phi * x, axis=1)))) / sup.value
            if val > run_best:
                run_best, run_phi = val, phi
            y = phi @ sup.argmax
            grad = np.outer(norming_functional(ell, y), sup.argmax)
            grad -= (float(np.sum(grad * x)) / xx) * x
            gnorm = float(np.linalg.norm(grad))
            if gnorm <= 1e-15:
                break
            step = 0.25 / math.sqrt(t + 1.0) * float(np.linalg.norm(phi))
            phi = phi - step * grad / gnorm
        if run_best > best_val:
            best_val, best_phi = run_best, run_phi
            log_debug(f'cohen restart {restart}: {run_best:.12g}')
    return best_val, best_phi


def cohen_norm(
    seq: VecSequence,
    p: Exponent,
    budget: int | None = None,
    seed: int | None = None,
    config: WeakConfig | None = None,
) -> NormEstimate:
    """sup of sum |phi_i(x_i)| over dual sequences of weak p* norm <= 1 (a lower bound)."""
    q = _check_p(p)
    if q == 1:
        raise InputError('The Cohen norm needs p > 1')
    cfg = config or WeakConfig()
    updates: dict = {}
    if budget is not None:
        if budget < 1:
            raise BudgetTooSmallError(f'Budget {budget} < 1')
        updates['budget'] = budget
    if seed is not None:
        updates['seed'] = seed
    r = seq.space.exponent
    if not is_inf(r) and r == 1:
        value = float(np.sum(lp_norm(seq.items, q, axis=0)))
        return NormEstimate(value=value, method=NormMethod.EXACT)
    if not is_inf(r) and r == 2 and q == 2:
        return NormEstimate(value=float(np.linalg.norm(seq.items, 'nuc')), method=NormMethod.EXACT)
    certified = seq.space.dim <= ORACLE_MAX_DIM and seq.m <= ORACLE_MAX_M
    updates['allow_grid'] = certified
    cfg = cfg.model_copy(update=updates)
    pstar = conjugate(q)

    def weak_fn(phi: np.ndarray) -> WeakSup:
        return weak_sup(phi, seq.space, pstar, cfg)

    starts = _cohen_starts(seq, q, cfg.cohen_starts, cfg.seed)
    value, _ = _cohen_descent(seq, q, weak_fn, starts, cfg.cohen_iterations)
    if certified:
        return NormEstimate(value=value, method=NormMethod.GRID)
    return NormEstimate(value=value, method=NormMethod.ASCENT, lower_bound_only=True)


def grid_oracle(
    kind: Literal['weak', 'cohen'],
    seq: VecSequence,
    p: Exponent,
    resolution: int | None = None,
) -> NormEstimate:
    """Brute-force reference values for dims <= 3 and m <= 4."""
    q = _check_p(p)
    dim = seq.space.dim
    if dim > ORACLE_MAX_DIM or seq.m > ORACLE_MAX_M:
        raise InputError(f'Grid oracle needs dim <= 3 and m <= 4, got dim {dim}, m {seq.m}')
    if resolution is None:
        resolution = oracle_resolution(dim)
    if dim == 2 and resolution < 90:
        raise BudgetTooSmallError(f'Oracle resolution {resolution} < 90')
    if dim == 3 and resolution < 10:
        raise BudgetTooSmallError(f'Oracle resolution {resolution} < 10 (dim 3)')
    if kind == 'weak':
        sup = grid_sup(seq.items, dual(seq.space), q, resolution)
        return NormEstimate(value=sup.value, method=NormMethod.GRID)
    if kind != 'cohen':
        raise InputError(f'Unknown oracle kind {kind!r}')
    if q == 1:
        raise InputError('The Cohen norm needs p > 1')
    return NormEstimate(value=_cohen_grid(seq, q, resolution), method=NormMethod.GRID)


def _half_sphere(points: np.ndarray) -> np.ndarray:
    """One point of every antipodal pair, normalized so its first nonzero coordinate is positive."""
    lead = np.argmax(np.abs(points) > SPHERE_TOL, axis=1)
    canon = points * np.sign(points[np.arange(len(points)), lead])[:, None]
    _, keep = np.unique(np.round(canon, 12), axis=0, return_index=True)
    return canon[np.sort(keep)]


def _simplex_lattice(parts: int, steps: int) -> np.ndarray:
    """All t >= 0 with sum(t) = 1 and steps * t integral."""
    heads = [c for c in itertools.product(range(steps + 1), repeat=parts - 1) if sum(c) <= steps]
    head = np.array(heads, dtype=float).reshape(len(heads), parts - 1)
    return np.column_stack([head, steps - head.sum(axis=1)]) / steps


def _direction_resolution(dim: int, per_item: float, resolution: int) -> int:
    if dim == 2:
        return 4 * max(1, min(resolution, int(2 * per_item)) // 4)
    return max(2, min(resolution, math.isqrt(int(2 * per_item))))


def _cohen_grid(seq: VecSequence, q: Exponent, resolution: int) -> float:
    """1 / min W(phi) over phi_i = t_i psi_i / |psi_i(x_i)|, with the directions psi_i
    running over a half-sphere grid of the dual and t over a simplex lattice.

    The work grows like directions^m, so `COHEN_ORACLE_WORK` thins the direction
    grid as m grows; with m <= 2 it stays at the sphere resolution.
    """
    x = seq.items[np.any(seq.items != 0, axis=1)]
    if len(x) == 0:
        return 0.0
    m, dim = x.shape
    pstar = float(conjugate(q))
    points = _half_sphere(sphere_grid(seq.space, resolution).points)
    profiles = _simplex_lattice(m, COHEN_PROFILE_STEPS[m]) ** pstar
    per_item = (COHEN_ORACLE_WORK / (len(profiles) * len(points) * m)) ** (1.0 / m)
    dirs = sphere_grid(dual(seq.space), _direction_resolution(dim, per_item, resolution)).points
    dirs = _half_sphere(dirs)

    # tables[i][d, g] = |psi_d(g) / psi_d(x_i)|^p*
    tables = []
    for xi in x:
        c = np.abs(dirs @ xi)
        keep = c > SPHERE_TOL * c.max()
        tables.append((np.abs(dirs[keep] @ points.T) / c[keep, None]) ** pstar)
    log_debug(f'cohen oracle: {[len(t) for t in tables]} directions, {len(profiles)} profiles')

    batch = max(1, int(4e6 // (len(profiles) * len(points))))
    best = math.inf
    combos = itertools.product(*(range(len(t)) for t in tables))
    for chunk in itertools.batched(combos, batch):
        idx = np.array(chunk)
        stacked = np.stack([tables[i][idx[:, i]] for i in range(m)], axis=1)
        w = np.einsum('pm,bmg->pbg', profiles, stacked).max(axis=2)
        best = min(best, float(w.min()))
    return best ** (-1.0 / pstar)

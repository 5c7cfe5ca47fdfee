"""Finite-dimensional real spaces l_q^n, their duals and unit-ball discretizations."""

from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from enum import Enum
from fractions import Fraction
from typing import Any

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import BudgetTooSmallError, DimensionMismatchError, InputError

__all__ = [
    'INF',
    'Infinity',
    'Exponent',
    'Vec',
    'SpaceSpec',
    'BallKind',
    'BallSample',
    'parse_exponent',
    'format_exponent',
    'is_inf',
    'to_float',
    'reciprocal',
    'conjugate',
    'lp_norm',
    'check_vec',
    'norm',
    'dual',
    'pairing',
    'norming_functional',
    'iter_sign_vectors',
    'ball_points',
    'sphere_grid',
    'make_rng',
]

MAX_SIGN_DIM = 20
SPHERE_TOL = 1e-12


class Infinity(str, Enum):
    INF = 'inf'

    def __str__(self) -> str:
        return 'inf'


INF = Infinity.INF

# Rational literals stay exact so identities between exponents can be checked exactly.
Exponent = Fraction | float | Infinity
Vec = npt.NDArray[np.float64]


def parse_exponent(value: Any) -> Exponent:
    """Turn user input ('4/3', 'inf', 2, 1.5, Fraction) into an exponent value.

    Integers and 'a/b' literals become Fractions, decimals become floats and
    every spelling of infinity becomes INF. No range check happens here.
    """
    if isinstance(value, Infinity):
        return value
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InputError(f'Not an exponent: {value!r}')
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if math.isnan(value):
            raise InputError('Exponent is NaN')
        if math.isinf(value):
            if value > 0:
                return INF
            raise InputError('Exponent is -inf')
        return Fraction(int(value)) if value.is_integer() else value
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ('inf', 'infinity', '∞', '+inf'):
            return INF
        try:
            if '/' in text:
                num, den = text.split('/', 1)
                return Fraction(int(num), int(den))
            return Fraction(int(text))
        except (ValueError, ZeroDivisionError):
            pass
        try:
            return parse_exponent(float(text))
        except ValueError as e:
            raise InputError(f'Not an exponent: {value!r}') from e
    raise InputError(f'Not an exponent: {value!r}')


def format_exponent(q: Exponent) -> str:
    if isinstance(q, Infinity):
        return 'inf'
    if isinstance(q, Fraction):
        return str(q)
    return repr(float(q))


def is_inf(q: Exponent) -> bool:
    return isinstance(q, Infinity)


def to_float(q: Exponent) -> float:
    return math.inf if is_inf(q) else float(q)


def reciprocal(q: Exponent) -> Fraction | float:
    """1/q, with 1/inf = 0; exact for Fractions."""
    if is_inf(q):
        return Fraction(0)
    if isinstance(q, Fraction):
        return 1 / q
    return 1.0 / float(q)


def conjugate(q: Exponent) -> Exponent:
    """The exponent q* with 1/q + 1/q* = 1."""
    if is_inf(q):
        return Fraction(1)
    if q < 1:
        raise InputError(f'Conjugate exponent needs q >= 1, got {format_exponent(q)}')
    if q == 1:
        return INF
    if isinstance(q, Fraction):
        return q / (q - 1)
    return float(q) / (float(q) - 1.0)


def lp_norm(values: npt.ArrayLike, q: Exponent, axis: int = -1) -> Any:
    """(sum |v|^q)^(1/q) along `axis`, max |v| for q = inf."""
    a = np.abs(np.asarray(values, dtype=float))
    if is_inf(q):
        return np.max(a, axis=axis)
    qf = float(q)
    if qf == 1.0:
        return np.sum(a, axis=axis)
    if qf == 2.0:
        return np.sqrt(np.sum(a * a, axis=axis))
    scale = np.max(a, axis=axis, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    return np.squeeze(safe, axis=axis) * np.sum((a / safe) ** qf, axis=axis) ** (1.0 / qf)


class SpaceSpec(BaseModel):
    """The space R^dim with the l_q norm, q = exponent."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dim: int = Field(..., ge=1)
    exponent: Exponent

    @field_validator('exponent', mode='before')
    @classmethod
    def _coerce_exponent(cls, value: Any) -> Exponent:
        q = parse_exponent(value)
        if not is_inf(q) and q < 1:
            raise InputError(f'Space exponent must be >= 1, got {format_exponent(q)}')
        return q

    @property
    def label(self) -> str:
        return f'l{format_exponent(self.exponent)}^{self.dim}'

    def __str__(self) -> str:
        return self.label


def check_vec(space: SpaceSpec, v: npt.ArrayLike) -> Vec:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != space.dim:
        raise DimensionMismatchError(f'Vector of shape {arr.shape} does not live in {space.label}')
    return arr


def norm(space: SpaceSpec, v: npt.ArrayLike) -> float:
    return float(lp_norm(check_vec(space, v), space.exponent))


def dual(space: SpaceSpec) -> SpaceSpec:
    return SpaceSpec(dim=space.dim, exponent=conjugate(space.exponent))


def pairing(f: npt.ArrayLike, x: npt.ArrayLike) -> float:
    """The dual action f(x) = sum f_j x_j."""
    fa = np.asarray(f, dtype=float)
    xa = np.asarray(x, dtype=float)
    if fa.ndim != 1 or fa.shape != xa.shape:
        raise DimensionMismatchError(f'Cannot pair shapes {fa.shape} and {xa.shape}')
    return float(np.dot(fa, xa))


def norming_functional(space: SpaceSpec, v: npt.ArrayLike) -> Vec:
    """A point psi of the dual unit ball with psi(v) = ||v||."""
    x = check_vec(space, v)
    q = space.exponent
    if not np.any(x):
        return np.zeros_like(x)
    if is_inf(q):
        k = int(np.argmax(np.abs(x)))
        psi = np.zeros_like(x)
        psi[k] = np.sign(x[k])
        return psi
    qf = float(q)
    if qf == 1.0:
        return np.sign(x)
    a = np.abs(x)
    scale = a.max()
    weights = (a / scale) ** (qf - 1.0)
    return np.sign(x) * weights / float(lp_norm(weights, conjugate(q)))


def iter_sign_vectors(dim: int, chunk: int = 4096, halved: bool = False) -> Iterator[Vec]:
    """All sign vectors of R^dim in lexicographic (+ before -) order, in chunks.

    With `halved`, only vectors whose first coordinate is +1 are produced.
    """
    free = dim - 1 if halved else dim
    total = 1 << free
    shifts = np.arange(free - 1, -1, -1)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        bits = (idx[:, None] >> shifts) & 1
        signs = 1.0 - 2.0 * bits
        if halved:
            signs = np.hstack([np.ones((len(idx), 1)), signs])
        yield signs


class BallKind(str, Enum):
    EXACT = 'exact-extreme-points'
    HEURISTIC = 'heuristic-sample'


class BallSample(BaseModel):
    """Points on the unit sphere of a space; `frame` marks deterministic l2 grids."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    space: SpaceSpec
    points: np.ndarray
    kind: BallKind
    frame: bool = False

    @model_validator(mode='after')
    def _on_sphere(self) -> BallSample:
        pts = self.points
        if pts.ndim != 2 or pts.shape[1] != self.space.dim or pts.shape[0] == 0:
            raise DimensionMismatchError(f'Ball sample of shape {pts.shape} for {self.space}')
        norms = lp_norm(pts, self.space.exponent)
        if np.max(np.abs(norms - 1.0)) > SPHERE_TOL:
            raise InputError('Ball sample points must lie on the unit sphere')
        if self.kind is BallKind.EXACT:
            q = self.space.exponent
            allowed = (
                (not is_inf(q) and q == 1)
                or (is_inf(q) and self.space.dim <= MAX_SIGN_DIM)
                or (not is_inf(q) and q == 2 and self.frame)
            )
            if not allowed:
                raise InputError(f'Exact extreme points are not available for {self.space}')
        pts.flags.writeable = False
        return self

    def __len__(self) -> int:
        return int(self.points.shape[0])


def make_rng(seed: int | Sequence[int]) -> np.random.Generator:
    """The one generator used for all randomness: PCG64 seeded explicitly."""
    return np.random.Generator(np.random.PCG64(seed))


def _project_to_sphere(space: SpaceSpec, pts: np.ndarray) -> np.ndarray:
    return pts / lp_norm(pts, space.exponent)[:, None]


def ball_points(space: SpaceSpec, budget: int, seed: int) -> BallSample:
    """A finite stand-in for the unit ball of `space`.

    l1: the 2*dim vertices; l_inf (dim <= 20): sign vectors up to `budget`;
    l2 in dim 2: `budget` equally spaced angles; otherwise a seeded sample
    headed by the coordinate points +-e_j.
    """
    dim = space.dim
    if budget < 2 * dim:
        raise BudgetTooSmallError(f'Budget {budget} is below 2*dim = {2 * dim} for {space}')
    q = space.exponent
    if not is_inf(q) and q == 1:
        pts = np.zeros((2 * dim, dim))
        for j in range(dim):
            pts[2 * j, j] = 1.0
            pts[2 * j + 1, j] = -1.0
        return BallSample(space=space, points=pts, kind=BallKind.EXACT)
    if is_inf(q) and dim <= MAX_SIGN_DIM:
        take = min(budget, 1 << dim)
        chunks = []
        remaining = take
        for block in iter_sign_vectors(dim):
            chunks.append(block[:remaining])
            remaining -= len(chunks[-1])
            if remaining <= 0:
                break
        kind = BallKind.EXACT if take == 1 << dim else BallKind.HEURISTIC
        return BallSample(space=space, points=np.vstack(chunks), kind=kind)
    if not is_inf(q) and q == 2 and dim == 2:
        angles = 2.0 * np.pi * np.arange(budget) / budget
        pts = np.column_stack([np.cos(angles), np.sin(angles)])
        return BallSample(
            space=space, points=_project_to_sphere(space, pts), kind=BallKind.HEURISTIC, frame=True
        )
    rng = make_rng(seed)
    coords = np.vstack([np.eye(dim), -np.eye(dim)])
    gauss = rng.standard_normal((budget - 2 * dim, dim))
    pts = np.vstack([coords, gauss]) if len(gauss) else coords
    return BallSample(space=space, points=_project_to_sphere(space, pts), kind=BallKind.HEURISTIC)


def sphere_grid(space: SpaceSpec, resolution: int) -> BallSample:
    """Deterministic sphere grid: `resolution` angles in dim 2, resolution^2
    Fibonacci points in dim 3, radially projected onto the l_q sphere.

    For l_1 and l_inf the vertices of the ball are appended.
    """
    dim = space.dim
    if dim == 1:
        return BallSample(space=space, points=np.array([[1.0], [-1.0]]), kind=BallKind.HEURISTIC)
    if dim == 2:
        if resolution < 4:
            raise BudgetTooSmallError(f'Grid resolution {resolution} < 4')
        angles = 2.0 * np.pi * np.arange(resolution) / resolution
        pts = np.column_stack([np.cos(angles), np.sin(angles)])
    elif dim == 3:
        if resolution < 2:
            raise BudgetTooSmallError(f'Grid resolution {resolution} < 2')
        count = resolution * resolution
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        theta = np.pi * (1.0 + math.sqrt(5.0)) * i
        pts = np.column_stack([r * np.cos(theta), r * np.sin(theta), z])
    else:
        raise InputError(f'Sphere grids exist for dim <= 3 only, got {space}')
    q = space.exponent
    pts = _project_to_sphere(space, pts)
    # Polytope balls: convex maxima sit on vertices, which radial projection misses.
    if not is_inf(q) and q == 1:
        pts = np.vstack([pts, np.eye(dim), -np.eye(dim)])
    elif is_inf(q):
        pts = np.vstack([pts, *iter_sign_vectors(dim)])
    frame = not is_inf(q) and q == 2
    return BallSample(space=space, points=pts, kind=BallKind.HEURISTIC, frame=frame)

"""Linear and n-linear operators between l_q spaces."""

from __future__ import annotations

import math
from collections.abc import Sequence
from typing import Literal, NamedTuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import SETTINGS
from .errors import DimensionMismatchError, InputError
from .seqnorms import NormEstimate, NormMethod
from .spaces import (
    MAX_SIGN_DIM,
    Exponent,
    SpaceSpec,
    check_vec,
    dual,
    is_inf,
    iter_sign_vectors,
    lp_norm,
    make_rng,
    norm,
    norming_functional,
)
from .utils import log_debug

__all__ = [
    'LinearOp',
    'MultilinearOp',
    'Operator',
    'NormingTuple',
    'as_multilinear',
    'apply',
    'apply_multi',
    'scaled',
    'op_norm',
    'norming_tuple',
    'form_norm',
    'form_norming_tuple',
    'random_op',
]

# Upper limit on codim * prod(#extreme points) for exact enumeration.
MAX_ENUMERATION = 1 << 22
ASCENT_ITERATIONS = 200
ASCENT_REL_TOL = 1e-13


class LinearOp(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    domain: SpaceSpec
    codomain: SpaceSpec
    matrix: np.ndarray

    @field_validator('matrix', mode='before')
    @classmethod
    def _as_array(cls, value: npt.ArrayLike) -> np.ndarray:
        return np.array(value, dtype=float)

    @model_validator(mode='after')
    def _shape(self) -> LinearOp:
        expected = (self.codomain.dim, self.domain.dim)
        if self.matrix.shape != expected:
            raise DimensionMismatchError(f'Matrix shape {self.matrix.shape}, expected {expected}')
        self.matrix.flags.writeable = False
        return self

    @property
    def domains(self) -> list[SpaceSpec]:
        return [self.domain]

    @property
    def tensor(self) -> np.ndarray:
        return self.matrix

    @property
    def arity(self) -> int:
        return 1


class MultilinearOp(BaseModel):
    """T(x1, ..., xn) = contraction of `tensor` (codim, d1, ..., dn) with each slot."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    domains: list[SpaceSpec] = Field(..., min_length=1)
    codomain: SpaceSpec
    tensor: np.ndarray

    @field_validator('tensor', mode='before')
    @classmethod
    def _as_array(cls, value: npt.ArrayLike) -> np.ndarray:
        return np.array(value, dtype=float)

    @model_validator(mode='after')
    def _shape(self) -> MultilinearOp:
        expected = (self.codomain.dim, *(d.dim for d in self.domains))
        if self.tensor.shape != expected:
            raise DimensionMismatchError(f'Tensor shape {self.tensor.shape}, expected {expected}')
        self.tensor.flags.writeable = False
        return self

    @property
    def arity(self) -> int:
        return len(self.domains)


Operator = LinearOp | MultilinearOp


class NormingTuple(NamedTuple):
    """Unit vectors xs and a unit functional f with f(T(xs)) = value."""

    value: float
    xs: list[np.ndarray]
    functional: np.ndarray
    method: NormMethod


def as_multilinear(T: Operator) -> MultilinearOp:
    if isinstance(T, MultilinearOp):
        return T
    return MultilinearOp(domains=[T.domain], codomain=T.codomain, tensor=T.matrix)


def apply(T: LinearOp, x: npt.ArrayLike) -> np.ndarray:
    return T.matrix @ check_vec(T.domain, x)


def apply_multi(T: Operator, xs: Sequence[npt.ArrayLike]) -> np.ndarray:
    if len(xs) != T.arity:
        raise DimensionMismatchError(f'Operator takes {T.arity} arguments, got {len(xs)}')
    out = T.tensor
    for space, x in zip(reversed(T.domains), reversed(xs)):
        out = out @ check_vec(space, x)
    return out


def scaled(T: Operator, c: float) -> Operator:
    if isinstance(T, LinearOp):
        return LinearOp(domain=T.domain, codomain=T.codomain, matrix=T.matrix * c)
    return MultilinearOp(domains=T.domains, codomain=T.codomain, tensor=T.tensor * c)


def _contract_except(form: np.ndarray, xs: Sequence[np.ndarray], skip: int) -> np.ndarray:
    """Contract an n-linear form (d1, ..., dn) with every slot but `skip`."""
    out = form
    for k in range(len(xs) - 1, -1, -1):
        if k != skip:
            out = np.tensordot(out, xs[k], axes=([k], [0]))
    return out


def _extreme_points(space: SpaceSpec) -> np.ndarray | None:
    # Up to sign: multilinearity makes the other half redundant.
    q = space.exponent
    if not is_inf(q) and q == 1:
        return np.eye(space.dim)
    if is_inf(q) and space.dim <= MAX_SIGN_DIM:
        return np.vstack(list(iter_sign_vectors(space.dim, halved=True)))
    return None


def _enumerate(T: MultilinearOp) -> NormingTuple | None:
    vertices = [_extreme_points(d) for d in T.domains]
    if any(v is None for v in vertices):
        return None
    count = T.codomain.dim * math.prod(len(v) for v in vertices)
    if count > MAX_ENUMERATION:
        return None
    out = T.tensor
    for v in vertices:
        out = np.tensordot(out, v, axes=([1], [1]))
    values = lp_norm(out, T.codomain.exponent, axis=0)
    flat = int(np.argmax(values))
    idx = np.unravel_index(flat, values.shape)
    xs = [v[i].copy() for v, i in zip(vertices, idx)]
    y = out[(slice(None), *idx)]
    phi = norming_functional(T.codomain, y)
    return NormingTuple(float(values[idx]), xs, phi, NormMethod.EXTREME)


def _spectral(T: MultilinearOp) -> NormingTuple | None:
    ell2 = all(not is_inf(d.exponent) and d.exponent == 2 for d in (*T.domains, T.codomain))
    if T.arity != 1 or not ell2:
        return None
    _, s, vt = np.linalg.svd(T.tensor)
    x = vt[0].copy()
    y = T.tensor @ x
    return NormingTuple(float(s[0]), [x], norming_functional(T.codomain, y), NormMethod.SPECTRAL)


def _unit(space: SpaceSpec, v: np.ndarray) -> np.ndarray:
    size = norm(space, v)
    return v / size if size > 0 else v


def _ascent(T: MultilinearOp, multistarts: int, seed: int) -> NormingTuple:
    """Alternating maximization of f(T(x1, ..., xn)) one argument at a time."""
    rng = make_rng(seed)
    n = T.arity
    best = NormingTuple(0.0, [np.zeros(d.dim) for d in T.domains], np.zeros(T.codomain.dim),
                        NormMethod.ASCENT)
    for restart in range(multistarts):
        if restart == 0:
            xs = [_unit(d, np.ones(d.dim)) for d in T.domains]
        else:
            xs = [_unit(d, rng.standard_normal(d.dim)) for d in T.domains]
        value = norm(T.codomain, apply_multi(T, xs))
        for _ in range(ASCENT_ITERATIONS):
            f = norming_functional(T.codomain, apply_multi(T, xs))
            form = np.tensordot(f, T.tensor, axes=([0], [0]))
            for j in range(n):
                g = _contract_except(form, xs, j)
                if np.any(g):
                    xs[j] = norming_functional(dual(T.domains[j]), g)
            new_value = norm(T.codomain, apply_multi(T, xs))
            done = new_value - value <= ASCENT_REL_TOL * max(value, 1e-300)
            value = max(value, new_value)
            if done:
                break
        if value > best.value:
            y = apply_multi(T, xs)
            best = NormingTuple(value, [x.copy() for x in xs], norming_functional(T.codomain, y),
                                NormMethod.ASCENT)
            log_debug(f'op-norm restart {restart}: {value:.12g}')
    return best


def norming_tuple(T: Operator, budget: int | None = None, seed: int | None = None) -> NormingTuple:
    """The maximizer behind `op_norm`."""
    M = as_multilinear(T)
    found = _spectral(M) or _enumerate(M)
    if found is not None:
        return found
    multistarts = budget if budget is not None else SETTINGS.multistarts
    if multistarts < 1:
        raise InputError(f'Budget {multistarts} < 1')
    return _ascent(M, multistarts, SETTINGS.seed if seed is None else seed)


def op_norm(T: Operator, budget: int | None = None, seed: int | None = None) -> NormEstimate:
    """sup ||T(x1, ..., xn)|| over unit x's.

    Exact for l2 -> l2 linear maps and for l1 / small l_inf domains; otherwise
    a lower bound from multistart alternating ascent.
    """
    found = norming_tuple(T, budget, seed)
    return NormEstimate(
        value=found.value, method=found.method, lower_bound_only=found.method is NormMethod.ASCENT
    )


def _form_op(T: Operator, phi: npt.ArrayLike) -> MultilinearOp:
    f = check_vec(dual(T.codomain), phi)
    form = np.tensordot(f, T.tensor, axes=([0], [0]))
    return MultilinearOp(
        domains=T.domains, codomain=SpaceSpec(dim=1, exponent=1), tensor=form[None, ...]
    )


def form_norming_tuple(
    T: Operator, phi: npt.ArrayLike, budget: int | None = None, seed: int | None = None
) -> NormingTuple:
    """Norm of the n-linear form phi o T with its maximizing arguments."""
    form = _form_op(T, phi)
    if form.arity == 1:
        g = form.tensor[0]
        x = norming_functional(dual(form.domains[0]), g)
        value = float(lp_norm(g, dual(form.domains[0]).exponent))
        return NormingTuple(value, [x], np.ones(1), NormMethod.EXACT)
    if form.arity == 2 and all(not is_inf(d.exponent) and d.exponent == 2 for d in form.domains):
        u, s, vt = np.linalg.svd(form.tensor[0])
        return NormingTuple(float(s[0]), [u[:, 0].copy(), vt[0].copy()], np.ones(1),
                            NormMethod.SPECTRAL)
    return norming_tuple(form, budget, seed)


def form_norm(
    T: Operator, phi: npt.ArrayLike, budget: int | None = None, seed: int | None = None
) -> float:
    return form_norming_tuple(T, phi, budget, seed).value


def random_op(
    dims: Sequence[int],
    kind: Literal['linear', 'multilinear'] = 'linear',
    seed: int = 0,
    exponents: Sequence[Exponent] | None = None,
) -> Operator:
    """Entries i.i.d. uniform on [-1, 1].

    `dims` is (codim, d1, ..., dn) and `exponents` gives the matching space
    exponents (all 2 by default).
    """
    dims = [int(d) for d in dims]
    if len(dims) < 2 or min(dims) < 1:
        raise InputError(f'Invalid operator dims {dims}')
    if kind == 'linear' and len(dims) != 2:
        raise InputError(f'A linear operator needs (codim, dim), got {dims}')
    exps = list(exponents) if exponents is not None else [2] * len(dims)
    if len(exps) != len(dims):
        raise InputError(f'{len(exps)} exponents for {len(dims)} spaces')
    spaces = [SpaceSpec(dim=d, exponent=q) for d, q in zip(dims, exps)]
    entries = make_rng(seed).uniform(-1.0, 1.0, size=dims)
    if kind == 'linear':
        return LinearOp(domain=spaces[1], codomain=spaces[0], matrix=entries)
    return MultilinearOp(domains=spaces[1:], codomain=spaces[0], tensor=entries)

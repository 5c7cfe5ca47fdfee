import os

import hypothesis
import numpy as np
import pytest

from summinglab.domination import RefineConfig
from summinglab.operators import LinearOp, MultilinearOp
from summinglab.seqnorms import WeakConfig
from summinglab.spaces import SpaceSpec
from summinglab.witness import WitnessConfig

np.seterr(divide='ignore', invalid='ignore')

hypothesis.settings.register_profile('fast', max_examples=10, deadline=None)
hypothesis.settings.register_profile('ci', max_examples=60, deadline=None)
hypothesis.settings.load_profile(os.getenv('HYPOTHESIS_PROFILE', 'fast'))


def ell(dim: int, q='2') -> SpaceSpec:
    return SpaceSpec(dim=dim, exponent=q)


@pytest.fixture
def ell2_2() -> SpaceSpec:
    return ell(2)


@pytest.fixture
def identity2(ell2_2) -> LinearOp:
    return LinearOp(domain=ell2_2, codomain=ell2_2, matrix=np.eye(2))


@pytest.fixture
def rank_one(ell2_2) -> LinearOp:
    # y = e1, f = (0.6, 0.8): norm 1
    return LinearOp(domain=ell2_2, codomain=ell2_2, matrix=np.outer([1.0, 0.0], [0.6, 0.8]))


@pytest.fixture
def zero_op(ell2_2) -> LinearOp:
    return LinearOp(domain=ell2_2, codomain=ell2_2, matrix=np.zeros((2, 2)))


@pytest.fixture
def corner_form() -> MultilinearOp:
    """B(x, y) = x1 * y1 on l2^2 x l2^2 with values in R."""
    tensor = np.zeros((1, 2, 2))
    tensor[0, 0, 0] = 1.0
    return MultilinearOp(domains=[ell(2), ell(2)], codomain=ell(1), tensor=tensor)


@pytest.fixture
def weak_cfg() -> WeakConfig:
    return WeakConfig(budget=64, multistarts=4, iterations=100, grid=360, grid_3d=20,
                      allow_grid=True)


@pytest.fixture
def witness_cfg(weak_cfg) -> WitnessConfig:
    return WitnessConfig(seed=0, m_max=3, multistarts=4, iterations=15, weak=weak_cfg)


@pytest.fixture
def refine_cfg(witness_cfg) -> RefineConfig:
    return RefineConfig(atoms=360, rounds=20, grid=360, grid_3d=20, budget=64, seed=0,
                        witness=witness_cfg)

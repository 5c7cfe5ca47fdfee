"""Upper bounds on summing constants by finite atomic domination."""

from .abstract import (
    AbstractProblem,
    Item,
    MeasureFit,
    RMap,
    abstract_bounds,
    abstract_lower,
    fit_measure,
    validate_measure,
)
from .certificate import (
    DominationCertificate,
    DominationPair,
    RefineConfig,
    ValidationResult,
    atom_grid,
    canonical_problem,
    fit_certificate,
    pairs_from_witness,
    refine,
    validate_certificate,
    witness_items,
)
from .simplex import LPSolution, LPStatus, lp_min

__all__ = [
    'AbstractProblem',
    'Item',
    'MeasureFit',
    'RMap',
    'abstract_bounds',
    'abstract_lower',
    'fit_measure',
    'validate_measure',
    'DominationCertificate',
    'DominationPair',
    'RefineConfig',
    'ValidationResult',
    'atom_grid',
    'canonical_problem',
    'fit_certificate',
    'pairs_from_witness',
    'refine',
    'validate_certificate',
    'witness_items',
    'LPSolution',
    'LPStatus',
    'lp_min',
]

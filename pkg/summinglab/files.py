"""JSON file schemas (version "1") and the report envelope.

Exponents are written as strings ("2", "4/3", "inf") so rational values
survive a round trip exactly. Every report file is an envelope

    {"header": {"timestamp": ..., "version": ...}, "payload": {...}, "digest": "<sha256>"}

whose digest covers the canonical JSON of the payload only, so identical runs
give identical payloads and digests.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .domination import DominationCertificate
from .errors import InputError
from .operators import LinearOp, MultilinearOp, Operator
from .seqnorms import VecSequence
from .spaces import BallKind, BallSample, SpaceSpec, format_exponent, parse_exponent
from .witness import ExponentScheme, SchemeKind

__all__ = [
    'SCHEMA_VERSION',
    'SpaceModel',
    'SchemeModel',
    'OperatorFile',
    'SequenceFile',
    'CertificateFile',
    'Envelope',
    'canonical_json',
    'digest',
    'operator_digest',
    'load_json',
    'load_model',
    'write_envelope',
]

SCHEMA_VERSION = '1'


def _version() -> str:
    try:
        return metadata.version('summinglab')
    except metadata.PackageNotFoundError:
        return '0.1.0'


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(',', ':'), ensure_ascii=False)


def digest(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode('utf-8')).hexdigest()


class SpaceModel(BaseModel):
    dim: int = Field(..., ge=1)
    exponent: str

    @field_validator('exponent', mode='before')
    @classmethod
    def _exponent(cls, value: Any) -> str:
        q = parse_exponent(value)
        SpaceSpec(dim=1, exponent=q)
        return format_exponent(q)

    def to_space(self) -> SpaceSpec:
        return SpaceSpec(dim=self.dim, exponent=self.exponent)

    @classmethod
    def of(cls, space: SpaceSpec) -> SpaceModel:
        return cls(dim=space.dim, exponent=format_exponent(space.exponent))


class SchemeModel(BaseModel):
    kind: SchemeKind
    p: str
    q0: str
    qs: list[str] = []
    n: int = 1

    def to_scheme(self) -> ExponentScheme:
        return ExponentScheme(kind=self.kind, p=self.p, q0=self.q0, qs=tuple(self.qs), n=self.n)

    @classmethod
    def of(cls, scheme: ExponentScheme) -> SchemeModel:
        return cls(
            kind=scheme.kind,
            p=format_exponent(scheme.p),
            q0=format_exponent(scheme.q0),
            qs=[format_exponent(q) for q in scheme.qs],
            n=scheme.n,
        )


class OperatorFile(BaseModel):
    """A dense operator; `entries` is the row-major tensor of shape (codim, d1, ..., dn)."""

    model_config = ConfigDict(populate_by_name=True)

    schema_version: Literal['1'] = Field(SCHEMA_VERSION, alias='schema')
    kind: Literal['linear', 'multilinear']
    codomain: SpaceModel
    domains: list[SpaceModel] = Field(..., min_length=1)
    entries: list[float]
    label: str | None = None

    @model_validator(mode='after')
    def _count(self) -> OperatorFile:
        if self.kind == 'linear' and len(self.domains) != 1:
            raise InputError('A linear operator has exactly one domain')
        expected = self.codomain.dim * int(np.prod([d.dim for d in self.domains]))
        if len(self.entries) != expected:
            raise InputError(f'{len(self.entries)} entries, expected {expected}')
        return self

    def to_operator(self) -> Operator:
        shape = (self.codomain.dim, *(d.dim for d in self.domains))
        tensor = np.array(self.entries, dtype=float).reshape(shape)
        domains = [d.to_space() for d in self.domains]
        if self.kind == 'linear':
            return LinearOp(domain=domains[0], codomain=self.codomain.to_space(), matrix=tensor)
        return MultilinearOp(domains=domains, codomain=self.codomain.to_space(), tensor=tensor)

    @classmethod
    def of(cls, T: Operator, label: str | None = None) -> OperatorFile:
        return cls(
            kind='linear' if isinstance(T, LinearOp) else 'multilinear',
            codomain=SpaceModel.of(T.codomain),
            domains=[SpaceModel.of(d) for d in T.domains],
            entries=[float(v) for v in np.asarray(T.tensor).ravel()],
            label=label,
        )


class SequenceFile(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: Literal['1'] = Field(SCHEMA_VERSION, alias='schema')
    space: SpaceModel
    items: list[list[float]] = Field(..., min_length=1)

    def to_sequence(self) -> VecSequence:
        return VecSequence.of(self.space.to_space(), self.items)


class CertificateFile(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: Literal['1'] = Field(SCHEMA_VERSION, alias='schema')
    operator_digest: str
    scheme: SchemeModel
    atom_space: SpaceModel
    atoms: list[list[float]]
    weights: list[float]
    constant: float

    def to_certificate(self) -> DominationCertificate:
        space = self.atom_space.to_space()
        atoms = BallSample(space=space, points=np.array(self.atoms, dtype=float),
                           kind=BallKind.HEURISTIC)
        return DominationCertificate(
            atoms=atoms,
            weights=self.weights,
            constant=self.constant,
            scheme=self.scheme.to_scheme(),
        )

    @classmethod
    def of(cls, cert: DominationCertificate, operator: Operator) -> CertificateFile:
        return cls(
            operator_digest=operator_digest(operator),
            scheme=SchemeModel.of(cert.scheme),
            atom_space=SpaceModel.of(cert.atoms.space),
            atoms=cert.atoms.points.tolist(),
            weights=cert.weights.tolist(),
            constant=cert.constant,
        )


class Header(BaseModel):
    timestamp: str
    version: str


class Envelope(BaseModel):
    header: Header
    payload: dict[str, Any]
    digest: str

    @classmethod
    def wrap(cls, payload: dict[str, Any]) -> Envelope:
        header = Header(timestamp=datetime.now(timezone.utc).isoformat(), version=_version())
        return cls(header=header, payload=payload, digest=digest(payload))


def operator_digest(T: Operator) -> str:
    return digest(OperatorFile.of(T).model_dump(mode='json', by_alias=True))


def load_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding='utf-8'))
    except OSError as e:
        raise InputError(f'Cannot read {path}: {e}') from e
    except json.JSONDecodeError as e:
        raise InputError(f'{path} is not valid JSON: {e}') from e


def load_model(model: type[BaseModel], path: str | Path) -> Any:
    """Parse a schema file, turning validation failures into InputError."""
    try:
        return model.model_validate(load_json(path))
    except ValidationError as e:
        raise InputError(f'{path}: {e}') from e


def write_envelope(path: str | Path, payload: dict[str, Any]) -> Envelope:
    envelope = Envelope.wrap(payload)
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(
        json.dumps(envelope.model_dump(mode='json'), indent=2, sort_keys=True) + '\n',
        encoding='utf-8',
    )
    return envelope

"""Environment-backed defaults.

Every numerical knob has a default here which can be overridden from the
environment (or a `.env` file) with the `SUMMINGLAB_` prefix, e.g.
`SUMMINGLAB_SEED=7` or `SUMMINGLAB_ATOMS=360`.
"""

import os

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

load_dotenv()

ENV_PREFIX = 'SUMMINGLAB_'


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int = 0
    budget: int = Field(256, ge=1, description='Ball sample size for heuristic sweeps.')
    m_max: int = Field(6, ge=1, description='Largest witness length searched.')
    atoms: int = Field(720, ge=4, description='Atoms on the codomain sphere (dim 2).')
    grid: int = Field(720, ge=90, description='Oracle angles on dim-2 spheres.')
    grid_3d: int = Field(64, ge=10, description='Fibonacci resolution on dim-3 spheres.')
    tol: float = Field(0.05, gt=0, description='Relative cross-consistency tolerance.')
    multistarts: int = Field(32, ge=1)
    iterations: int = Field(60, ge=1, description='Witness ascent iterations per start.')
    rounds: int = Field(20, ge=1, description='Cutting-plane rounds in refine.')
    log_level: str = 'INFO'

    @classmethod
    def from_env(cls) -> 'Settings':
        values = {}
        for name in cls.model_fields:
            raw = os.getenv(ENV_PREFIX + name.upper())
            if raw is not None:
                values[name] = raw
        return cls.model_validate(values)


SETTINGS = Settings.from_env()

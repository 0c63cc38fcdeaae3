"""
Environment-driven settings for the dihedral pattern toolkit
"""

import os
from dataclasses import dataclass

from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or not value.strip():
        return default
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got '{value}'")


def _env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    if value is None or not value.strip():
        return default
    try:
        return float(value)
    except ValueError:
        raise ValueError(f"{name} must be a number, got '{value}'")


@dataclass(frozen=True)
class Settings:
    """Runtime settings read from the environment (.env supported)"""
    threads: int = 1
    output_dir: str = 'runs'
    seed: int = 42
    seed_box: float = 10.0
    ngrid: int = 512
    dt: float = 0.1

    @classmethod
    def from_env(cls) -> 'Settings':
        return cls(
            threads=_env_int('DIHEDRAL_THREADS', cls.threads),
            output_dir=os.getenv('DIHEDRAL_OUTPUT_DIR') or cls.output_dir,
            seed=_env_int('DIHEDRAL_SEED', cls.seed),
            seed_box=_env_float('DIHEDRAL_SEED_BOX', cls.seed_box),
            ngrid=_env_int('DIHEDRAL_NGRID', cls.ngrid),
            dt=_env_float('DIHEDRAL_DT', cls.dt),
        )

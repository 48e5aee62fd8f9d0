from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    PROJECT_NAME: str = "Scattering Entanglement Toolkit"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "json"

    # Parallelism (threads used for tables and Monte-Carlo chunks)
    WORKERS: int = 4

    # Quadrature
    QUAD_RADIAL_NODES: int = 32
    QUAD_ANGULAR_NODES: int = 24
    QUAD_RADIAL_CUTOFF: float = 8.0
    QUAD_TARGET_REL_ERR: float = 1e-9
    QUAD_MAX_REFINEMENTS: int = 3
    MAX_GAUSS_NODES: int = 2048

    # Monte-Carlo
    MC_SAMPLES: int = 10_000_000
    MC_SEED: int = 20240531
    MC_CHUNK_SIZE: int = 32768
    MC_WIDE_FRACTION: float = 0.2
    MC_WIDE_VARIANCE: float = 3.0

    # Scattering length
    SCATLEN_GRID: int = 200
    SCATLEN_REL_TOL: float = 1e-3
    RESONANCE_CONDITION: float = 1e8
    COLLOCATION_GRID: int = 16
    MAX_COLLOCATION_CELLS: int = 6000

    # Acceptance slacks
    TABLE_TOLERANCE: float = 5e-3
    PURITY_SLACK: float = 1e-4
    LEADING_ORDER_LIMIT: float = 0.1
    EXPANSION_S_LIMIT: float = 0.3

    @field_validator("WORKERS")
    @classmethod
    def check_workers(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"WORKERS must be >= 1, got {v}")
        return v

    @field_validator("LOG_FORMAT")
    @classmethod
    def check_log_format(cls, v: str) -> str:
        if v not in ("json", "console"):
            raise ValueError(f"Unsupported LOG_FORMAT: {v}")
        return v

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")


settings = Settings()

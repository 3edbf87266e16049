# Copyright 2024
# Directory: fedgw-sim/app/config/settings.py

"""
Simulator Settings - Process-Level Configuration from the Environment.

Loads and validates process-level configuration from environment variables:
- Logging and environment name
- Output location for run bundles and sweeps
- Sweep parallelism
- Invariant checking and steady-state detection knobs

Scenario parameters (topology, traffic, thresholds, MAC/channel values) do not
live here; they come from scenario files (see app/schemas/scenario.py).

Uses Pydantic Settings for automatic .env file loading and validation.
"""

from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """
    Application settings loaded from environment variables.

    Every field can be overridden with a FEDGW_-prefixed variable, e.g.
    FEDGW_LOG_LEVEL=DEBUG or FEDGW_SWEEP_WORKERS=4.
    """

    # =========================================================================
    # Application Configuration
    # =========================================================================
    environment: str = Field(default="development")
    log_level: str = Field(default="INFO")

    # =========================================================================
    # Output Configuration
    # =========================================================================
    # Directory used by `run`/`sweep` when --out is omitted
    output_dir: Path = Field(default=Path("runs"))

    # Directory holding the bundled scenario files
    scenario_dir: Path = Field(
        default=Path(__file__).resolve().parent.parent / "data" / "scenarios"
    )

    # =========================================================================
    # Simulation Configuration
    # =========================================================================
    # Abort a run on the first global invariant violation
    check_invariants: bool = Field(default=True)

    # Quiet period (no protocol message, no status change) defining steady state
    steady_state_window: float = Field(default=5.0, gt=0)

    # Time a station needs to scan and reassociate after a handover (s)
    reassociation_delay: float = Field(default=0.05, ge=0)

    # =========================================================================
    # Sweep Configuration
    # =========================================================================
    # Worker processes for sweeps; 0 means one per CPU
    sweep_workers: int = Field(default=0, ge=0)

    class Config:
        """Pydantic configuration."""
        env_prefix = "FEDGW_"
        env_file = ".env"
        case_sensitive = False


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """The process-wide settings; tests build their own Settings instead."""
    return settings

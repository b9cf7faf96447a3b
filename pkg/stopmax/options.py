"""*Package configuration and options*."""
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


__all__ = [
    "StopmaxOptions",
    "smx_opts",
]


class StopmaxOptions(BaseSettings):
    """Defaults for solvers, simulations and the command line (env prefix `STOPMAX_`)."""

    model_config = SettingsConfigDict(env_prefix="STOPMAX_", validate_assignment=True)

    seed: int = Field(0, description="Master seed for Monte Carlo runs")

    grid: int = Field(
        4096,
        ge=2,
        description="Grid points of the quantile-spaced state grid for continuous laws",
    )

    gm_grid: int = Field(8192, ge=2, description="Grid points for the Game Max value DP")

    samples: int = Field(1_000_000, ge=1, description="Trajectories per Monte Carlo run")

    threads: int = Field(
        0, ge=0, description="Simulation worker threads (0 = one worker per CPU)"
    )

    precision: int = Field(6, description="Decimal places in CLI output (negative = full)")

    out: Literal["json", "csv"] = Field("json", description="CLI output format")

    decision_tol: float = Field(
        1e-12, gt=0, description="Bisection tolerance for Game Max decision numbers"
    )

    bisect_maxiter: int = Field(200, ge=1, description="Iteration cap for bisection")

    tie_tol: float = Field(
        1e-12, ge=0, description="Stop and continuation values this close count as a tie (stop)"
    )

    max_states: int = Field(
        10_000, ge=1, description="Maximum atoms per step for the exact discrete solver"
    )

    brute_force_limit: int = Field(
        10_000_000, ge=1, description="Maximum outcome sequences for the brute-force oracle"
    )

    block_size: int = Field(
        65_536, ge=1, description="Trajectories per independently seeded simulation block"
    )

    spread_eps_fraction: float = Field(
        0.9,
        gt=0,
        lt=1,
        description="Default spread-out slab half width as a fraction of max_epsilon",
    )


smx_opts = StopmaxOptions()

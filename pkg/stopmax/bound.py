"""*Sharpness of the Game Max bound for the alpha game*.

With `k` slabs of the spread-out law the alpha game and Game Max can only be decided
differently when the slab indices of the draws have no unique maximum. The functions here
count that event exactly and measure the gap between both games by simulation.
"""
import math
from fractions import Fraction
from typing import Optional

from loguru import logger as log
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator
import stopmax as smx


__all__ = [
    "GapReport",
    "unique_max_probability",
    "riemann_sum",
    "k_delta",
    "gap_demo",
    "gap_explore",
]


class GapReport(BaseModel):
    """Both games scored under the alpha-optimal policy on the same trajectories."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1, description="Horizon")
    alpha: float = Field(..., gt=0, lt=1, description="Proportion")
    delta: Optional[float] = Field(None, gt=0, lt=1, description="Target gap")
    k_used: Optional[int] = Field(None, ge=1, description="Slab count of the spread-out law")
    eps_used: Optional[float] = Field(None, gt=0, description="Slab half width")
    dist: str = Field(..., description="Distribution spec text")
    v_alpha_est: float = Field(..., ge=0, le=1, description="Alpha game win probability")
    v_alpha_stderr: float = Field(..., ge=0)
    v_max_est: float = Field(..., ge=0, le=1, description="Game Max win probability")
    v_max_stderr: float = Field(..., ge=0)
    samples: int = Field(..., ge=1)
    seed: int = Field(..., ge=0)
    violations: int = Field(0, ge=0, description="Game Max wins lost in the alpha game")

    @model_validator(mode="after")
    def check_slabs(self):
        if self.k_used is not None and self.delta is not None:
            if self.k_used != k_delta(self.n, self.delta):
                raise ValueError(f"k_used={self.k_used} is not k_delta({self.n}, {self.delta})")
        return self

    @computed_field
    @property
    def gap_est(self) -> float:
        return self.v_alpha_est - self.v_max_est

    @computed_field
    @property
    def gap_stderr(self) -> float:
        """Combined standard error of both estimates."""
        return math.sqrt(self.v_alpha_stderr**2 + self.v_max_stderr**2)


def _check_counts(n, k):
    # type: (int, int) -> None
    if n < 1 or k < 1:
        raise smx.GameSpecError(f"n and k must be >= 1, got n={n}, k={k}")


def unique_max_probability(n, k):
    # type: (int, int) -> float
    """
    Probability that `n` i.i.d. uniform draws from `{1..k}` have a strictly unique maximum.

    Evaluates `n * sum((j - 1)**(n - 1) for j in 1..k) / k**n` in exact arithmetic.

    :param int n: Number of draws.
    :param int k: Number of values.
    :rtype: float
    """
    _check_counts(n, k)
    return float(Fraction(n * sum((j - 1) ** (n - 1) for j in range(1, k + 1)), k**n))


def riemann_sum(n, k):
    # type: (int, int) -> float
    """
    Left Riemann sum `sum((j / k)**(n - 1) / k for j in 1..k-1)` of `t**(n - 1)` on [0, 1].

    :param int n: Horizon.
    :param int k: Number of cells.
    :return: Value below and converging to `1 / n`.
    :rtype: float
    """
    _check_counts(n, k)
    return float(Fraction(sum(j ** (n - 1) for j in range(1, k)), k**n))


def k_delta(n, delta):
    # type: (int, float) -> int
    """
    Smallest slab count `k` with `riemann_sum(n, k) > (1 - delta) / n`.

    The strict inequality is decided in exact arithmetic.

    :param int n: Horizon.
    :param float delta: Target gap in (0, 1).
    :rtype: int
    """
    _check_counts(n, 1)
    if not 0 < delta < 1:
        raise smx.GameSpecError(f"delta must be in (0, 1), got {delta}")
    target = 1 - smx.as_fraction(delta)
    k, total = 1, 0
    while not target * k**n < n * total:
        total += k ** (n - 1)
        k += 1
    return k


def _measure(d, spec, samples, seed, threads, grid, **extra):
    # type: (...) -> GapReport
    samples = smx.smx_opts.samples if samples is None else samples
    seed = smx.smx_opts.seed if seed is None else seed
    policy = smx.alpha_policy(smx.solve(d, spec, grid))
    paired = smx.simulate_paired(d, policy, spec.alpha, samples, seed, threads)
    report = GapReport(
        n=spec.n,
        alpha=spec.alpha,
        dist=d.text,
        v_alpha_est=paired.alpha_report.estimate,
        v_alpha_stderr=paired.alpha_report.stderr,
        v_max_est=paired.max_report.estimate,
        v_max_stderr=paired.max_report.stderr,
        samples=samples,
        seed=seed,
        violations=paired.violations,
        **extra,
    )
    log.debug(f"Gap on {d.text} n={spec.n}: {report.gap_est:.6f} +- {report.gap_stderr:.6f}")
    return report


def gap_demo(n, alpha, delta, samples=None, seed=None, threads=None, grid=None):
    # type: (...) -> GapReport
    """
    Demonstrate that the Game Max value is a sharp lower bound for the alpha game.

    Builds the spread-out law with `k_delta(n, delta)` slabs, solves the alpha game on it and
    scores the resulting policy in both games on the same trajectories. The gap stays within
    `delta` up to sampling error.

    :param int n: Horizon.
    :param float alpha: Proportion in (0, 1).
    :param float delta: Target gap in (0, 1).
    :param int samples: Number of trajectories.
    :param int seed: Master seed.
    :param int threads: Worker threads.
    :param int grid: Grid size of the alpha-game solver.
    :rtype: GapReport
    """
    spec = smx.GameSpec(n=n, alpha=alpha)
    k = k_delta(n, delta)
    d = smx.make_spread(alpha, k)
    log.debug(f"Spread-out law for n={n} delta={delta}: {d.text}")
    return _measure(d, spec, samples, seed, threads, grid, delta=delta, k_used=k, eps_used=d.eps)


def gap_explore(d, spec, samples=None, seed=None, threads=None, grid=None):
    # type: (...) -> GapReport
    """
    Measure the gap between both games for an arbitrary law.

    :param Distribution d: Observation law (finite-support laws included).
    :param GameSpec spec: Game instance.
    :param int samples: Number of trajectories.
    :param int seed: Master seed.
    :param int threads: Worker threads.
    :param int grid: Grid size for continuous laws.
    :rtype: GapReport
    """
    return _measure(d, spec, samples, seed, threads, grid)

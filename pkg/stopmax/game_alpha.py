"""*Game Proportion of the Max: optimal policy and value by backward induction*.

Win is to stop on an observation of at least `alpha` times the overall maximum. The state of
the dynamic program is the running maximum. A candidate `x` (one with `x >= alpha * m` for the
running maximum `m`) wins when stopped iff no later draw exceeds `x / alpha`, so its stop value
at step `k` is `F(x / alpha) ** (n - k)`. The continuation value `W_k(m)` is the expected value
of playing on optimally.

Finite-support laws are solved exactly over atom indices. Continuous laws are solved on a grid
of cdf levels (equal probability mass per cell) with trapezoid quadrature.
"""
import math
from typing import Literal, Optional, Tuple

import numpy as np
from loguru import logger as log
from pydantic import BaseModel, ConfigDict, Field, computed_field
from scipy.integrate import cumulative_trapezoid, trapezoid
import stopmax as smx


__all__ = [
    "GameSpec",
    "AlphaDPSolution",
    "CertaintyReport",
    "stop_value",
    "continue_value",
    "solve_discrete",
    "solve_continuous",
    "solve",
    "alpha_policy",
    "uniform_n2_closed_form",
    "certainty_report",
    "certainty_condition",
    "theorem_gap",
]


class GameSpec(BaseModel):
    """Instance of either game: horizon and proportion."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1, description="Horizon (number of observations)")
    alpha: float = Field(..., gt=0, lt=1, description="Proportion of the maximum to reach")


class AlphaDPSolution(BaseModel):
    """
    Stop and continuation tables over running-maximum states.

    Row `k - 1` of each table belongs to step `k`. Columns follow `state_grid`, the encoded
    states (atom indices for finite-support laws, cdf levels otherwise).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    spec: GameSpec
    dist: smx.Distribution = Field(..., description="Observation law")
    method: Literal["exact", "grid"] = Field(..., description="Exact atoms or cdf-level grid")
    state_grid: np.ndarray = Field(..., description="Encoded states, ascending")
    state_values: np.ndarray = Field(..., description="Values of the states")
    stop_value: np.ndarray = Field(..., description="Stop value of a candidate, shape (n, S)")
    continue_value: np.ndarray = Field(..., description="Continuation value W_k, shape (n, S)")
    optimal_value: float = Field(..., ge=0, le=1, description="Optimal win probability")

    def continue_at(self, k, m):
        """
        Continuation value at step `k` with encoded running maximum `m`.

        :param int k: Step (1-based).
        :param m: Encoded running maximum (scalar or array).
        """
        row = self.continue_value[k - 1]
        if self.method == "exact":
            return row[np.asarray(m).astype(np.intp)]
        return np.interp(m, self.state_grid, row)

    def stop_region(self, k, m):
        # type: (int, float) -> np.ndarray
        """
        Encoded observations on the state grid that stop at step `k` under running maximum `m`.

        Only observations up to `m` are listed (`m` includes the current observation).

        :param int k: Step (1-based).
        :param float m: Encoded running maximum.
        :rtype: np.ndarray
        """
        if k >= self.spec.n:
            mask = self.state_grid <= m
        else:
            mask = (self.state_grid <= m) & (
                self.state_grid >= self.dist.rank_floor(m, self.spec.alpha)
            )
            stop = self._stop_row(k, self.state_grid)
            mask &= stop >= self.continue_at(k, m) - smx.smx_opts.tie_tol
        return self.state_grid[mask]

    def threshold(self, k, m):
        # type: (int, float) -> Optional[float]
        """Smallest stopping observation value at step `k` under running maximum `m`."""
        region = self.stop_region(k, m)
        return float(self.dist.rank_value(region[0])) if len(region) else None

    def first_threshold(self):
        # type: () -> float
        """
        Step-1 threshold: stop on the first observation iff it is at least this value.

        :return: Smallest first observation value worth stopping on.
        :rtype: float
        """
        diff = self.stop_value[0] - self.continue_value[0] + smx.smx_opts.tie_tol
        if self.method == "exact":
            hits = np.nonzero(diff >= 0)[0]
            return float(self.state_values[hits[0]]) if len(hits) else math.inf
        level = smx.crossing_point(self.state_grid, diff)
        return float(self.dist.rank_value(level))

    def _stop_row(self, k, r):
        if self.method == "exact":
            return self.stop_value[k - 1][np.asarray(r).astype(np.intp)]
        return np.power(self.dist.rank_cdf_over(r, self.spec.alpha), self.spec.n - k)


class CertaintyReport(BaseModel):
    """Check of the two sufficient and necessary conditions for a sure win."""

    model_config = ConfigDict(frozen=True)

    alpha: float
    support_min: float
    support_max: float
    ratio_condition: bool = Field(..., description="alpha**2 <= support_min / support_max")
    gap_condition: bool = Field(..., description="No mass in (min / alpha, alpha * max)")
    interval: Optional[Tuple[float, float]] = Field(None, description="Open interval checked")
    mass: Optional[float] = Field(None, description="Probability of the checked interval")

    @computed_field
    @property
    def certain(self) -> bool:
        """Whether either condition holds."""
        return self.ratio_condition or self.gap_condition


def _check_step(spec, k):
    # type: (GameSpec, int) -> None
    if not 1 <= k <= spec.n:
        raise smx.GameSpecError(f"Step must be in 1..{spec.n}, got {k}")


def stop_value(d, spec, k, x, m):
    # type: (smx.Distribution, GameSpec, int, float, float) -> float
    """
    Win probability when stopping at step `k` on `x` with running maximum `m` (including `x`).

    Finite-support laws compare `x` with `alpha * m` exactly.

    :param Distribution d: Observation law.
    :param GameSpec spec: Game instance.
    :param int k: Step (1-based).
    :param float x: Observed value.
    :param float m: Running maximum including `x`.
    :return: `F(x / alpha) ** (n - k)` for a candidate, 0 otherwise.
    :rtype: float
    """
    _check_step(spec, k)
    if m < x:
        raise smx.GameSpecError(f"Running maximum {m} is below the observation {x}")
    if d.atoms is not None:
        candidate = smx.as_fraction(x) >= smx.as_fraction(spec.alpha) * smx.as_fraction(m)
    else:
        candidate = x >= spec.alpha * m
    if not candidate:
        return 0.0
    return d.cdf_over(x, spec.alpha) ** (spec.n - k)


def continue_value(d, spec, k, m, grid=None):
    # type: (smx.Distribution, GameSpec, int, float, Optional[int]) -> float
    """
    Win probability of taking at least one more observation and then playing optimally.

    :param Distribution d: Observation law.
    :param GameSpec spec: Game instance.
    :param int k: Step (1-based).
    :param float m: Running maximum value (an atom for finite-support laws).
    :param int grid: Grid size for continuous laws.
    :return: `W_k(m)`; 0 at the horizon.
    :rtype: float
    """
    if k >= spec.n:
        return 0.0
    _check_step(spec, k)
    solution = solve(d, spec, grid)
    return float(solution.continue_at(k, d.rank_of(m)))


def solve_discrete(d, spec):
    # type: (smx.Distribution, GameSpec) -> AlphaDPSolution
    """
    Exact backward induction over atom indices.

    !!! example
        ```
        >>> import stopmax as smx
        >>> d = smx.parse_dist_spec("duniform:1..10")
        >>> sol = smx.solve_discrete(d, smx.GameSpec(n=2, alpha=0.5))
        >>> round(sol.optimal_value, 12), sol.first_threshold()
        (0.98, 5.0)

        ```

    :param Distribution d: Finite-support law.
    :param GameSpec spec: Game instance.
    :rtype: AlphaDPSolution
    """
    if d.atoms is None:
        raise smx.DistributionSpecError(f"Exact solver needs a finite-support law, got {d.text}")
    s, n = d.size, spec.n
    if s > smx.smx_opts.max_states:
        raise smx.InstanceTooLargeError(
            f"{s} atoms exceed the state limit {smx.smx_opts.max_states}"
        )
    p = d.probs
    cum = np.concatenate([[0.0], np.cumsum(p)])
    floor, over = d.alpha_tables(spec.alpha)
    r = np.arange(s)
    stop = np.stack([over ** (n - k) for k in range(1, n + 1)])
    cont = np.zeros((n, s))
    tol = smx.smx_opts.tie_tol
    for k in range(n - 1, 0, -1):
        s_next, w_next = stop[k], cont[k]
        # Below the candidate floor the next draw only continues; between floor and the
        # running max it stops once its stop value reaches W; above it becomes the new max.
        lo = np.clip(np.searchsorted(s_next, w_next - tol, side="left"), floor, r + 1)
        stop_mass = np.concatenate([[0.0], np.cumsum(p * s_next)])
        gain = p * np.maximum(s_next, w_next)
        tail = np.concatenate([np.cumsum(gain[::-1])[::-1][1:], [0.0]])
        cont[k - 1] = np.clip(cum[lo] * w_next + stop_mass[r + 1] - stop_mass[lo] + tail, 0.0, 1.0)
    value = float(np.clip(np.dot(p, np.maximum(stop[0], cont[0])), 0.0, 1.0))
    log.debug(f"Exact alpha game {d.text} n={n} alpha={spec.alpha}: {value:.12f}")
    return AlphaDPSolution(
        spec=spec,
        dist=d,
        method="exact",
        state_grid=r.astype(float),
        state_values=d.values,
        stop_value=stop,
        continue_value=cont,
        optimal_value=value,
    )


def _first_reach(levels, s, w):
    # type: (np.ndarray, np.ndarray, np.ndarray) -> np.ndarray
    """Interpolated first level where the nondecreasing `s` reaches each value of `w`."""
    idx = np.searchsorted(s, w, side="left")
    i = np.clip(idx, 1, len(levels) - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.clip(np.nan_to_num((w - s[i - 1]) / (s[i] - s[i - 1])), 0.0, 1.0)
    inner = levels[i - 1] + frac * (levels[i] - levels[i - 1])
    return np.where(idx == 0, levels[0], np.where(idx >= len(levels), levels[-1], inner))


def solve_continuous(d, spec, grid=None):
    # type: (smx.Distribution, GameSpec, Optional[int]) -> AlphaDPSolution
    """
    Backward induction on a grid of cdf levels of the running maximum.

    With `g` the level of the running maximum, `f(g)` the level of `alpha * m` and `S`, `W` the
    next step tables:
    `W_k(g) = g * W(g) + integral_f^g [max(S, W(g)) - W(g)] + integral_g^1 max(S, W)`.

    :param Distribution d: Continuous law.
    :param GameSpec spec: Game instance.
    :param int grid: Number of levels (default `smx_opts.grid`).
    :rtype: AlphaDPSolution
    """
    if not d.continuous:
        raise smx.DistributionSpecError(f"Grid solver needs a continuous law, got {d.text}")
    grid = grid or smx.smx_opts.grid
    if grid < 2:
        raise smx.GameSpecError(f"Grid needs at least 2 levels, got {grid}")
    n = spec.n
    levels = np.linspace(0.0, 1.0, grid)
    floor = np.minimum(np.asarray(d.rank_floor(levels, spec.alpha), dtype=float), levels)
    over = np.asarray(d.rank_cdf_over(levels, spec.alpha), dtype=float)
    stop = np.stack([over ** (n - k) for k in range(1, n + 1)])
    cont = np.zeros((n, grid))
    for k in range(n - 1, 0, -1):
        s_next, w_next = stop[k], cont[k]
        lo = np.clip(_first_reach(levels, s_next, w_next - smx.smx_opts.tie_tol), floor, levels)
        stop_mass = cumulative_trapezoid(s_next, levels, initial=0.0)
        gain = cumulative_trapezoid(np.maximum(s_next, w_next), levels, initial=0.0)
        cont[k - 1] = np.clip(
            lo * w_next + stop_mass - np.interp(lo, levels, stop_mass) + gain[-1] - gain, 0.0, 1.0
        )
    value = float(np.clip(trapezoid(np.maximum(stop[0], cont[0]), levels), 0.0, 1.0))
    log.debug(f"Grid alpha game {d.text} n={n} alpha={spec.alpha} grid={grid}: {value:.8f}")
    return AlphaDPSolution(
        spec=spec,
        dist=d,
        method="grid",
        state_grid=levels,
        state_values=np.asarray(d.rank_value(levels), dtype=float),
        stop_value=stop,
        continue_value=cont,
        optimal_value=value,
    )


def solve(d, spec, grid=None):
    # type: (smx.Distribution, GameSpec, Optional[int]) -> AlphaDPSolution
    """
    Optimal alpha-game solution, exact for finite-support laws and on a grid otherwise.

    :param Distribution d: Observation law.
    :param GameSpec spec: Game instance.
    :param int grid: Grid size for continuous laws.
    :rtype: AlphaDPSolution
    """
    if d.atoms is not None:
        return solve_discrete(d, spec)
    return solve_continuous(d, spec, grid)


def alpha_policy(solution):
    # type: (AlphaDPSolution) -> smx.AlphaDPPolicy
    """Policy that plays the decisions of a solved alpha game."""
    return smx.AlphaDPPolicy(solution)


def uniform_n2_closed_form(alpha):
    # type: (float) -> Tuple[float, float]
    """
    First-step threshold and optimal value for uniform(0, 1) with two observations.

    :param float alpha: Proportion in (0, 1).
    :return: `(alpha / (1 + alpha**2), 1 - alpha**3 / (2 * (alpha**2 + 1)))`
    :rtype: tuple[float, float]
    """
    if not 0 < alpha < 1:
        raise smx.GameSpecError(f"alpha must be in (0, 1), got {alpha}")
    return alpha / (1 + alpha**2), 1 - alpha**3 / (2 * (alpha**2 + 1))


def certainty_report(d, alpha):
    # type: (smx.Distribution, float) -> CertaintyReport
    """
    Evaluate both certainty conditions with witnesses.

    :param Distribution d: Observation law.
    :param float alpha: Proportion in (0, 1).
    :rtype: CertaintyReport
    """
    if not 0 < alpha < 1:
        raise smx.GameSpecError(f"alpha must be in (0, 1), got {alpha}")
    lo, hi = d.support_min, d.support_max
    if lo <= 0 or not math.isfinite(hi):
        return CertaintyReport(
            alpha=alpha,
            support_min=lo,
            support_max=hi,
            ratio_condition=False,
            gap_condition=False,
        )
    a = smx.as_fraction(alpha)
    m, big = smx.as_fraction(lo), smx.as_fraction(hi)
    left, right = m / a, a * big
    mass = d.mass_between(left, right)
    return CertaintyReport(
        alpha=alpha,
        support_min=lo,
        support_max=hi,
        ratio_condition=a * a * big <= m,
        gap_condition=mass == 0,
        interval=(float(left), float(right)),
        mass=mass,
    )


def certainty_condition(d, alpha):
    # type: (smx.Distribution, float) -> bool
    """
    Whether the alpha game is won with certainty for any horizon.

    :param Distribution d: Observation law.
    :param float alpha: Proportion in (0, 1).
    :return: True iff `alpha**2 <= min / max` or no mass lies in `(min / alpha, alpha * max)`.
    :rtype: bool
    """
    return certainty_report(d, alpha).certain


def theorem_gap(d, spec, grid=None):
    # type: (smx.Distribution, GameSpec, Optional[int]) -> float
    """
    Excess of the optimal alpha-game value over the distribution-free Game Max value.

    :param Distribution d: Observation law.
    :param GameSpec spec: Game instance.
    :param int grid: Grid size for continuous laws.
    :rtype: float
    """
    return solve(d, spec, grid).optimal_value - smx.gm_value(spec.n)

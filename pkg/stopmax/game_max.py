"""*Game Max: decision numbers, optimal policy and optimal value*.

Win is to stop at the overall maximum. For continuous laws the probability-integral transform
reduces every instance to uniform(0, 1), so everything here works on cdf levels and is
distribution free.
"""
from typing import Iterator, List, Optional, Tuple

import numpy as np
from loguru import logger as log
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.optimize import bisect
import stopmax as smx


__all__ = [
    "DecisionNumbers",
    "crossing_point",
    "decision_number",
    "decision_numbers",
    "gm_policy",
    "gm_value",
    "gm_thresholds",
]


class DecisionNumbers(BaseModel):
    """Stopping thresholds on the cdf of a running maximum, by remaining observations."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1, description="Horizon")
    b: List[float] = Field(..., description="Threshold with m = 0..n-1 observations remaining")

    @model_validator(mode="after")
    def check_thresholds(self):
        if len(self.b) != self.n:
            raise ValueError(f"Expected {self.n} decision numbers, got {len(self.b)}")
        if self.b[0] != 0:
            raise ValueError("Decision number with no observation remaining must be 0")
        if any(not 0 <= v < 1 for v in self.b):
            raise ValueError("Decision numbers must lie in [0, 1)")
        if any(lo >= hi for lo, hi in zip(self.b[1:], self.b[2:])):
            raise ValueError("Decision numbers must increase with remaining observations")
        return self

    def at_time(self, i):
        # type: (int) -> float
        """Decision number `d_i` for observation `i` (1-based)."""
        return self.b[self.n - i]


def crossing_point(grid, diff):
    # type: (np.ndarray, np.ndarray) -> float
    """
    First grid location where `diff` becomes nonnegative, linearly interpolated.

    :param np.ndarray grid: Ascending grid.
    :param np.ndarray diff: Stop minus continue value on the grid.
    :return: Interpolated indifference point (last grid point if `diff` stays negative).
    :rtype: float
    """
    hits = np.nonzero(diff >= 0)[0]
    if len(hits) == 0:
        return float(grid[-1])
    idx = hits[0]
    if idx == 0:
        return float(grid[0])
    d0, d1 = diff[idx - 1], diff[idx]
    return float(grid[idx - 1] + (grid[idx] - grid[idx - 1]) * (-d0) / (d1 - d0))


def decision_number(m, tol=None):
    # type: (int, Optional[float]) -> float
    """
    Indifference threshold with `m` observations remaining.

    The root in (0, 1) of `sum((b**-j - 1) / j for j in 1..m) = 1`, found by bisection.

    :param int m: Remaining observations (>= 0).
    :param float tol: Absolute tolerance (default `smx_opts.decision_tol`).
    :return: Decision number (0 for m = 0, 1/2 for m = 1).
    :rtype: float
    """
    if m < 0:
        raise smx.GameSpecError(f"Remaining observations must be >= 0, got {m}")
    if m == 0:
        return 0.0
    tol = tol or smx.smx_opts.decision_tol
    j = np.arange(1, m + 1)

    def excess(b):
        with np.errstate(over="ignore", divide="ignore"):
            return float(np.sum((np.power(b, -j) - 1.0) / j)) - 1.0

    maxiter = smx.smx_opts.bisect_maxiter
    root, info = bisect(excess, 0.0, 1.0, xtol=tol, maxiter=maxiter, full_output=True, disp=False)
    if not info.converged:
        raise smx.ConvergenceError(
            f"Bisection for m={m} did not converge to {tol} in {info.iterations} iterations"
        )
    return float(root)


def decision_numbers(n, tol=None):
    # type: (int, Optional[float]) -> DecisionNumbers
    """
    All decision numbers for horizon `n`.

    :param int n: Horizon (>= 1).
    :param float tol: Bisection tolerance.
    :rtype: DecisionNumbers
    """
    if n < 1:
        raise smx.GameSpecError(f"Horizon must be >= 1, got {n}")
    return DecisionNumbers(n=n, b=[decision_number(m, tol) for m in range(n)])


def gm_policy(n):
    # type: (int) -> smx.GMPolicy
    """
    Optimal Game Max policy: stop at the first running maximum with `F(x) >= d_i`.

    :param int n: Horizon.
    :rtype: GMPolicy
    """
    return smx.GMPolicy(decision_numbers(n))


def _backward(n, grid):
    # type: (int, int) -> Iterator[Tuple[int, np.ndarray, np.ndarray]]
    """Yield `(k, levels, W_k)` for k = n..1 on the transformed uniform problem."""
    if n < 1:
        raise smx.GameSpecError(f"Horizon must be >= 1, got {n}")
    levels = np.linspace(0.0, 1.0, grid)
    cont = np.zeros(grid)
    yield n, levels, cont
    for k in range(n - 1, 0, -1):
        gain = np.maximum(levels ** (n - k - 1), cont)
        cum = cumulative_trapezoid(gain, levels, initial=0.0)
        cont = levels * cont + (cum[-1] - cum)
        yield k, levels, cont


def gm_value(n, grid=None):
    # type: (int, Optional[int]) -> float
    """
    Optimal Game Max win probability for continuous laws.

    Backward induction on the cdf level of the running maximum with trapezoid quadrature:
    `W_k(r) = r * W_{k+1}(r) + integral_r^1 max(y**(n-k-1), W_{k+1}(y)) dy`.

    :param int n: Horizon (>= 1).
    :param int grid: Number of grid points (default `smx_opts.gm_grid`).
    :return: Optimal win probability.
    :rtype: float
    """
    grid = grid or smx.smx_opts.gm_grid
    for k, levels, cont in _backward(n, grid):
        pass
    value = float(trapezoid(np.maximum(levels ** (n - 1), cont), levels))
    log.debug(f"Game Max value n={n} grid={grid}: {value:.8f}")
    return value


def gm_thresholds(n, grid=None):
    # type: (int, Optional[int]) -> List[float]
    """
    Decision numbers read off the backward-induction DP (independent of the root equation).

    :param int n: Horizon (>= 1).
    :param int grid: Number of grid points (default `smx_opts.gm_grid`).
    :return: Indifference points indexed by remaining observations m = 0..n-1.
    :rtype: list[float]
    """
    grid = grid or smx.smx_opts.gm_grid
    thresholds = [0.0] * n
    for k, levels, cont in _backward(n, grid):
        m = n - k
        thresholds[m] = crossing_point(levels, levels**m - cont)
    return thresholds

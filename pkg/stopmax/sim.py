"""*Seeded Monte Carlo evaluation of stopping policies and a brute-force oracle*.

Trajectories are drawn in fixed blocks of `smx_opts.block_size`. Block `b` owns the random
stream `Philox(SeedSequence(seed, spawn_key=(b,)))`, so the result of a run depends on the
seed only and never on how blocks are spread over worker threads.
"""
import math
import os
from concurrent.futures import ThreadPoolExecutor
from functools import reduce
from typing import List, Literal, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger as log
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator
import stopmax as smx


__all__ = [
    "StoppingPolicy",
    "GMPolicy",
    "AlphaDPPolicy",
    "ThresholdPolicy",
    "SimulationReport",
    "PairedReport",
    "Trajectories",
    "play",
    "simulate",
    "simulate_paired",
    "brute_force_optimal",
]


class StoppingPolicy:
    """
    Decision rule adapted to the observations seen so far.

    `decide` is vectorised over trajectories and works on encoded observations (see the rank
    view of `Distribution`). Subclasses implement `_decide` for steps before the horizon; the
    last step always stops.
    """

    def __init__(self, horizon):
        # type: (int) -> None
        if horizon < 1:
            raise smx.GameSpecError(f"Horizon must be >= 1, got {horizon}")
        self.horizon = int(horizon)

    def decide(self, step, obs, prev_max, dist):
        # type: (int, np.ndarray, np.ndarray, smx.Distribution) -> np.ndarray
        """
        Stop decisions at `step` (1-based).

        :param int step: Current step.
        :param np.ndarray obs: Encoded observations at this step.
        :param np.ndarray prev_max: Encoded running maximum before `obs` (-1 at step 1).
        :param Distribution dist: Law the observations are drawn from.
        :return: Boolean array, True where the policy stops.
        :rtype: np.ndarray
        """
        obs = np.asarray(obs, dtype=float)
        if step >= self.horizon:
            return np.ones(obs.shape, dtype=bool)
        prev_max = np.broadcast_to(np.asarray(prev_max, dtype=float), obs.shape)
        return np.asarray(self._decide(step, obs, prev_max, dist), dtype=bool)

    def _decide(self, step, obs, prev_max, dist):
        raise NotImplementedError


class GMPolicy(StoppingPolicy):
    """Stop on a running maximum whose cdf level reaches the decision number."""

    def __init__(self, numbers):
        # type: (smx.DecisionNumbers) -> None
        super().__init__(numbers.n)
        self.numbers = numbers

    def _decide(self, step, obs, prev_max, dist):
        level = np.asarray(dist.rank_cdf(obs), dtype=float)
        return (obs >= prev_max) & (level >= self.numbers.at_time(step))


class AlphaDPPolicy(StoppingPolicy):
    """Stop on a candidate when its stop value reaches the continuation value (ties stop)."""

    def __init__(self, solution):
        # type: (smx.AlphaDPSolution) -> None
        super().__init__(solution.spec.n)
        self.solution = solution

    def _decide(self, step, obs, prev_max, dist):
        alpha = self.solution.spec.alpha
        m = np.maximum(obs, prev_max)
        candidate = (obs >= prev_max) | (obs >= dist.rank_floor(m, alpha))
        stop = np.power(dist.rank_cdf_over(obs, alpha), self.horizon - step)
        return candidate & (stop >= self.solution.continue_at(step, m) - smx.smx_opts.tie_tol)


class ThresholdPolicy(StoppingPolicy):
    """
    Stop at step `k` iff the observed value is at least `thresholds[k - 1]`.

    One threshold per step before the horizon, so the horizon is `len(thresholds) + 1`.
    """

    def __init__(self, thresholds):
        # type: (Sequence[float]) -> None
        super().__init__(len(thresholds) + 1)
        self.thresholds = [float(t) for t in thresholds]

    def _decide(self, step, obs, prev_max, dist):
        return np.asarray(dist.rank_value(obs), dtype=float) >= self.thresholds[step - 1]


class SimulationReport(BaseModel):
    """Monte Carlo win-probability estimate of one game."""

    model_config = ConfigDict(frozen=True)

    game: Literal["max", "alpha"] = Field(..., description="Scored game")
    alpha: Optional[float] = Field(None, gt=0, lt=1, description="Proportion (alpha game)")
    wins: int = Field(..., ge=0, description="Number of won trajectories")
    samples: int = Field(..., ge=1, description="Number of trajectories")
    seed: int = Field(..., ge=0, description="Master seed")

    @model_validator(mode="after")
    def check_report(self):
        if self.wins > self.samples:
            raise ValueError("More wins than samples")
        if (self.game == "alpha") != (self.alpha is not None):
            raise ValueError("alpha is required for the alpha game and only there")
        return self

    @computed_field
    @property
    def estimate(self) -> float:
        """Fraction of won trajectories."""
        return self.wins / self.samples

    @computed_field
    @property
    def stderr(self) -> float:
        """Binomial standard error of the estimate."""
        p = self.estimate
        return math.sqrt(p * (1.0 - p) / self.samples)


class PairedReport(NamedTuple):
    max_report: SimulationReport
    alpha_report: SimulationReport
    violations: int


class Trajectories(NamedTuple):
    obs: np.ndarray
    """Encoded observations, shape `(samples, n)`."""
    stop: np.ndarray
    """Chosen step per trajectory (0-based column index into `obs`)."""


def _workers(threads):
    # type: (Optional[int]) -> int
    threads = smx.smx_opts.threads if threads is None else threads
    if threads < 0:
        raise ValueError(f"threads must be >= 0, got {threads}")
    return threads or os.cpu_count() or 1


def _blocks(samples):
    # type: (int) -> List[Tuple[int, int]]
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    size = smx.smx_opts.block_size
    return [(b, min(size, samples - start)) for b, start in enumerate(range(0, samples, size))]


def _block_rng(seed, block):
    # type: (int, int) -> np.random.Generator
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _play_block(d, policy, seed, block, size):
    # type: (smx.Distribution, StoppingPolicy, int, int, int) -> Trajectories
    n = policy.horizon
    obs = np.asarray(d.draw_ranks(_block_rng(seed, block), (size, n)), dtype=float)
    chosen = np.full(size, -1, dtype=np.intp)
    prev_max = np.full(size, -1.0)
    for k in range(1, n + 1):
        x = obs[:, k - 1]
        stop = policy.decide(k, x, prev_max, d) & (chosen < 0)
        chosen[stop] = k - 1
        prev_max = np.maximum(prev_max, x)
    return Trajectories(obs, chosen)


def _map_blocks(fn, samples, seed, threads):
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    blocks = _blocks(samples)
    workers = min(_workers(threads), len(blocks))
    log.debug(f"Running {samples} trajectories in {len(blocks)} blocks on {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(lambda bs: fn(bs[0], bs[1]), blocks))


def _wins(d, traj, alpha):
    # type: (smx.Distribution, Trajectories, Optional[float]) -> Tuple[np.ndarray, np.ndarray]
    """Per-trajectory wins of the max game and (if `alpha` is given) the alpha game."""
    top = traj.obs.max(axis=1)
    x = traj.obs[np.arange(len(traj.stop)), traj.stop]
    max_win = x >= top
    if alpha is None:
        return max_win, max_win
    alpha_win = max_win | (x >= d.rank_floor(top, alpha))
    return max_win, alpha_win


def play(d, policy, samples=None, seed=None, threads=None):
    # type: (...) -> Trajectories
    """
    Sample trajectories and record where the policy stops.

    :param Distribution d: Observation law.
    :param StoppingPolicy policy: Policy to run (its horizon is the trajectory length).
    :param int samples: Number of trajectories.
    :param int seed: Master seed.
    :param int threads: Worker threads (0 = one per CPU).
    :return: Encoded observations and chosen steps.
    :rtype: Trajectories
    """
    samples = smx.smx_opts.samples if samples is None else samples
    seed = smx.smx_opts.seed if seed is None else seed
    parts = _map_blocks(lambda b, s: _play_block(d, policy, seed, b, s), samples, seed, threads)
    return Trajectories(
        np.concatenate([p.obs for p in parts]), np.concatenate([p.stop for p in parts])
    )


def _count(d, policy, alpha, samples, seed, threads):
    # type: (...) -> Tuple[int, int, int]
    def count_block(block, size):
        max_win, alpha_win = _wins(d, _play_block(d, policy, seed, block, size), alpha)
        return int(max_win.sum()), int(alpha_win.sum()), int((max_win & ~alpha_win).sum())

    counts = _map_blocks(count_block, samples, seed, threads)
    return tuple(sum(c[i] for c in counts) for i in range(3))


def simulate(d, policy, game="max", samples=None, seed=None, threads=None):
    # type: (...) -> SimulationReport
    """
    Estimate the win probability of a policy.

    !!! example
        ```
        >>> import stopmax as smx
        >>> d = smx.parse_dist_spec("uniform:0,1")
        >>> smx.simulate(d, smx.gm_policy(1), samples=100).estimate
        1.0

        ```

    :param Distribution d: Observation law.
    :param StoppingPolicy policy: Policy to evaluate.
    :param game: `"max"` for Game Max or the proportion alpha for Game Proportion of the Max.
    :param int samples: Number of trajectories (default `smx_opts.samples`).
    :param int seed: Master seed (default `smx_opts.seed`).
    :param int threads: Worker threads; never changes the result.
    :rtype: SimulationReport
    """
    samples = smx.smx_opts.samples if samples is None else samples
    seed = smx.smx_opts.seed if seed is None else seed
    alpha = None if game == "max" else smx.GameSpec(n=policy.horizon, alpha=game).alpha
    max_wins, alpha_wins, _ = _count(d, policy, alpha, samples, seed, threads)
    if alpha is None:
        report = SimulationReport(game="max", wins=max_wins, samples=samples, seed=seed)
    else:
        report = SimulationReport(
            game="alpha", alpha=alpha, wins=alpha_wins, samples=samples, seed=seed
        )
    log.debug(f"{d.text} n={policy.horizon} game={game}: {report.estimate:.6f}")
    return report


def simulate_paired(d, policy, alpha, samples=None, seed=None, threads=None):
    # type: (...) -> PairedReport
    """
    Score both games on the same trajectories.

    :param Distribution d: Observation law.
    :param StoppingPolicy policy: Policy to evaluate.
    :param float alpha: Proportion of the alpha game.
    :param int samples: Number of trajectories.
    :param int seed: Master seed.
    :param int threads: Worker threads.
    :return: Both reports and the number of trajectories won in Game Max but lost in the
        alpha game.
    :rtype: PairedReport
    """
    samples = smx.smx_opts.samples if samples is None else samples
    seed = smx.smx_opts.seed if seed is None else seed
    alpha = smx.GameSpec(n=policy.horizon, alpha=alpha).alpha
    max_wins, alpha_wins, violations = _count(d, policy, alpha, samples, seed, threads)
    if violations:
        log.warning(f"{violations} trajectories won Game Max but lost the alpha game")
    return PairedReport(
        SimulationReport(game="max", wins=max_wins, samples=samples, seed=seed),
        SimulationReport(game="alpha", alpha=alpha, wins=alpha_wins, samples=samples, seed=seed),
        violations,
    )


def brute_force_optimal(d, spec):
    # type: (smx.Distribution, smx.GameSpec) -> float
    """
    Optimal alpha-game win probability over all history-dependent stopping rules.

    Backward induction on full histories: every one of the `s**n` observation sequences is a
    cell of an n-dimensional array, the value of stopping is averaged over the unseen tail and
    compared with the value of going on.

    :param Distribution d: Finite-support law.
    :param GameSpec spec: Game instance.
    :return: Optimal win probability.
    :rtype: float
    """
    if d.atoms is None:
        raise smx.DistributionSpecError(f"Brute force needs a finite-support law, got {d.text}")
    s, n = d.size, spec.n
    if s**n > smx.smx_opts.brute_force_limit:
        raise smx.InstanceTooLargeError(
            f"{s}**{n} sequences exceed the brute force limit {smx.smx_opts.brute_force_limit}"
        )
    p = d.probs
    floor, _ = d.alpha_tables(spec.alpha)
    top = reduce(np.maximum, np.ix_(*[np.arange(s)] * n))

    def stop_win(k):
        # Win indicator of stopping at step k, averaged over steps k+1..n.
        shape = [1] * n
        shape[k - 1] = s
        win = (np.arange(s).reshape(shape) >= floor[top]).astype(float)
        for _ in range(n - k):
            win = win @ p
        return win

    value = stop_win(n)
    for k in range(n - 1, 0, -1):
        value = np.maximum(stop_win(k), value @ p)
    result = float(value @ p)
    log.debug(f"Brute force {d.text} n={n} alpha={spec.alpha}: {result:.12f}")
    return result

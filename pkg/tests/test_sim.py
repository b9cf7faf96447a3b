import numpy as np
import pytest
from pydantic import ValidationError
import stopmax as smx


def test_single_observation_always_wins(uniform01, d10):
    policy = smx.ThresholdPolicy([])
    assert policy.horizon == 1
    assert smx.simulate(uniform01, policy, samples=1000).estimate == 1.0
    assert smx.simulate(d10, policy, 0.5, samples=1000).estimate == 1.0


def test_policy_horizon_errors():
    with pytest.raises(smx.GameSpecError):
        smx.StoppingPolicy(0)


def test_threshold_policy_decide(d10):
    policy = smx.ThresholdPolicy([5.0, 8.0])
    obs = np.arange(10, dtype=float)
    assert policy.decide(1, obs, -1.0, d10).tolist() == [False] * 4 + [True] * 6
    assert policy.decide(2, obs, -1.0, d10).tolist() == [False] * 7 + [True] * 3
    assert policy.decide(3, obs, -1.0, d10).all()


def test_gm_policy_matches_table(uniform01):
    report = smx.simulate(uniform01, smx.gm_policy(3), samples=200_000, seed=7)
    assert report.game == "max"
    assert report.alpha is None
    assert abs(report.estimate - 0.684293) < 4 * report.stderr


def test_alpha_policy_matches_solver(uniform01, d10_half):
    report = smx.simulate(d10_half.dist, smx.alpha_policy(d10_half), 0.5, 200_000, seed=11)
    assert report.game == "alpha"
    assert report.alpha == 0.5
    assert abs(report.estimate - 0.98) < 4 * report.stderr
    solution = smx.solve(uniform01, smx.GameSpec(n=2, alpha=0.5), grid=1024)
    report = smx.simulate(uniform01, smx.alpha_policy(solution), 0.5, 200_000, seed=11)
    assert abs(report.estimate - 0.95) < 4 * report.stderr + 1e-3


def test_simulate_reproducible(uniform01):
    policy = smx.gm_policy(4)
    a = smx.simulate(uniform01, policy, samples=20_000, seed=3)
    b = smx.simulate(uniform01, policy, samples=20_000, seed=3)
    assert a == b
    x = smx.play(uniform01, policy, samples=100, seed=3)
    y = smx.play(uniform01, policy, samples=100, seed=4)
    assert not np.array_equal(x.obs, y.obs)


def test_simulate_independent_of_threads(d10_half, monkeypatch):
    monkeypatch.setattr(smx.smx_opts, "block_size", 1000)
    policy = smx.alpha_policy(d10_half)
    one = smx.simulate(d10_half.dist, policy, 0.5, samples=10_500, seed=5, threads=1)
    four = smx.simulate(d10_half.dist, policy, 0.5, samples=10_500, seed=5, threads=4)
    assert one == four
    a = smx.play(d10_half.dist, policy, samples=10_500, seed=5, threads=1)
    b = smx.play(d10_half.dist, policy, samples=10_500, seed=5, threads=3)
    assert np.array_equal(a.obs, b.obs)
    assert np.array_equal(a.stop, b.stop)


def test_play_shapes(uniform01):
    traj = smx.play(uniform01, smx.gm_policy(5), samples=1234, seed=1)
    assert traj.obs.shape == (1234, 5)
    assert traj.stop.shape == (1234,)
    assert traj.stop.min() >= 0 and traj.stop.max() <= 4


def test_simulate_argument_errors(uniform01):
    policy = smx.gm_policy(2)
    with pytest.raises(ValidationError):
        smx.simulate(uniform01, policy, 1.5, samples=10)
    with pytest.raises(ValueError):
        smx.simulate(uniform01, policy, samples=0)
    with pytest.raises(ValueError):
        smx.simulate(uniform01, policy, samples=10, seed=-1)


@pytest.mark.parametrize("n", [2, 3])
def test_no_violations(uniform01, d10, spread2, n):
    spec = smx.GameSpec(n=n, alpha=0.5)
    for d in (uniform01, d10, spread2):
        policy = smx.alpha_policy(smx.solve(d, spec, grid=512))
        paired = smx.simulate_paired(d, policy, 0.5, samples=20_000, seed=n)
        assert paired.violations == 0
        assert paired.alpha_report.wins >= paired.max_report.wins


def test_spread_gap_bounded_by_slab_ties(spread2):
    spec = smx.GameSpec(n=3, alpha=0.5)
    policy = smx.alpha_policy(smx.solve(spread2, spec, grid=512))
    paired = smx.simulate_paired(spread2, policy, 0.5, samples=50_000, seed=9)
    gap = paired.alpha_report.estimate - paired.max_report.estimate
    bound = 1 - smx.unique_max_probability(3, 2)
    assert gap <= bound + 3 * (paired.alpha_report.stderr + paired.max_report.stderr)


def test_alpha_win_without_max_win_shares_top_slab():
    d = smx.make_spread(0.5, 5)
    policy = smx.alpha_policy(smx.solve(d, smx.GameSpec(n=3, alpha=0.5), grid=512))
    traj = smx.play(d, policy, samples=20_000, seed=3)
    top = traj.obs.max(axis=1)
    x = traj.obs[np.arange(len(traj.stop)), traj.stop]
    near_miss = (x < top) & (x >= d.rank_floor(top, 0.5))
    assert np.array_equal(d.rank_slab(x[near_miss]), d.rank_slab(top[near_miss]))


def test_threshold_policies_never_beat_optimum(d10):
    for t in range(1, 11):
        report = smx.simulate(d10, smx.ThresholdPolicy([t]), 0.5, samples=20_000, seed=t)
        assert report.estimate <= 0.98 + 4 * report.stderr


def test_brute_force_examples(d10):
    two = smx.parse_dist_spec("cat:1=0.5,2=0.5")
    assert smx.brute_force_optimal(two, smx.GameSpec(n=2, alpha=0.6)) == pytest.approx(1.0)
    assert smx.brute_force_optimal(d10, smx.GameSpec(n=2, alpha=0.5)) == pytest.approx(0.98)
    single = smx.parse_dist_spec("cat:3=1")
    assert smx.brute_force_optimal(single, smx.GameSpec(n=3, alpha=0.9)) == pytest.approx(1.0)


def test_brute_force_agrees_with_solver():
    rng = np.random.default_rng(7)
    for _ in range(40):
        size = int(rng.integers(1, 7))
        values = np.sort(rng.choice(np.arange(1, 31), size=size, replace=False))
        weights = rng.integers(1, 6, size=size)
        total = int(weights.sum())
        text = ",".join(f"{v}={w}/{total}" for v, w in zip(values, weights))
        d = smx.parse_dist_spec(f"cat:{text}")
        for n in (1, 2, 3):
            for alpha in (0.3, 0.5, 0.8):
                spec = smx.GameSpec(n=n, alpha=alpha)
                exact = smx.solve_discrete(d, spec).optimal_value
                assert smx.brute_force_optimal(d, spec) == pytest.approx(exact, abs=1e-10)


def test_brute_force_errors(uniform01, d10):
    with pytest.raises(smx.InstanceTooLargeError):
        smx.brute_force_optimal(d10, smx.GameSpec(n=8, alpha=0.5))
    with pytest.raises(smx.DistributionSpecError):
        smx.brute_force_optimal(uniform01, smx.GameSpec(n=2, alpha=0.5))


def test_simulation_report():
    report = smx.SimulationReport(game="max", wins=25, samples=100, seed=0)
    assert report.estimate == 0.25
    assert report.stderr == pytest.approx(np.sqrt(0.25 * 0.75 / 100))
    assert "estimate" in report.model_dump()
    with pytest.raises(ValidationError):
        smx.SimulationReport(game="max", wins=101, samples=100, seed=0)
    with pytest.raises(ValidationError):
        smx.SimulationReport(game="alpha", wins=1, samples=100, seed=0)
    with pytest.raises(ValidationError):
        smx.SimulationReport(game="max", alpha=0.5, wins=1, samples=100, seed=0)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_gm_policy_distribution_free(n):
    value = smx.gm_value(n)
    policy = smx.gm_policy(n)
    continuous = [smx.parse_dist_spec("uniform:0,1"), smx.make_spread(0.5, 8)]
    reports = [smx.simulate(d, policy, samples=1_000_000, seed=n) for d in continuous]
    for report in reports:
        assert abs(report.estimate - value) < 4 * report.stderr
    a, b = reports
    assert abs(a.estimate - b.estimate) < 4 * np.hypot(a.stderr, b.stderr)
    # ties among many atoms can only help
    near = smx.simulate(smx.parse_dist_spec("duniform:1..1000"), policy, "max", 1_000_000, n)
    assert near.estimate >= value - 4 * near.stderr

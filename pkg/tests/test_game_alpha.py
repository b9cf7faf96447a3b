import numpy as np
import pytest
from pydantic import ValidationError
import stopmax as smx


ALPHAS = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]

# First-step thresholds and optimal values on duniform{1..10} with two observations. At
# alpha = 0.8 the value 0.86 needs threshold 6: a first 5 stops with 0.6 but continues with 0.7.
DUNIFORM_N2 = [
    (0.1, 1, 1.0),
    (0.2, 2, 1.0),
    (0.3, 3, 1.0),
    (0.4, 4, 0.99),
    (0.5, 5, 0.98),
    (0.6, 5, 0.94),
    (0.7, 5, 0.9),
    (0.8, 6, 0.86),
    (0.9, 6, 0.81),
]


def test_game_spec_validation():
    spec = smx.GameSpec(n=3, alpha=0.5)
    assert spec.n == 3
    with pytest.raises(ValidationError):
        smx.GameSpec(n=0, alpha=0.5)
    with pytest.raises(ValidationError):
        smx.GameSpec(n=2, alpha=1.0)


def test_stop_value(uniform01, d10):
    spec = smx.GameSpec(n=2, alpha=0.5)
    assert smx.stop_value(uniform01, spec, 1, 0.5, 0.5) == 1.0
    assert smx.stop_value(d10, spec, 1, 4, 4) == 0.8
    assert smx.stop_value(d10, spec, 2, 6, 10) == 1.0
    assert smx.stop_value(d10, spec, 1, 3, 10) == 0.0
    assert smx.stop_value(d10, spec, 2, 4, 10) == 0.0


def test_stop_value_exact_comparison():
    d = smx.parse_dist_spec("cat:0.3=0.5,3=0.5")
    spec = smx.GameSpec(n=2, alpha=0.1)
    assert smx.stop_value(d, spec, 1, 0.3, 3) == 1.0


def test_stop_value_errors(d10):
    spec = smx.GameSpec(n=2, alpha=0.5)
    with pytest.raises(smx.GameSpecError):
        smx.stop_value(d10, spec, 3, 4, 4)
    with pytest.raises(smx.GameSpecError):
        smx.stop_value(d10, spec, 1, 5, 4)


def test_continue_value(uniform01, d10):
    spec = smx.GameSpec(n=2, alpha=0.5)
    assert smx.continue_value(uniform01, spec, 1, 0.2) == pytest.approx(0.9, abs=1e-6)
    assert smx.continue_value(d10, spec, 1, 3) == pytest.approx(0.9, abs=1e-12)
    assert smx.continue_value(d10, spec, 2, 3) == 0.0
    assert smx.continue_value(d10, smx.GameSpec(n=1, alpha=0.5), 1, 3) == 0.0


@pytest.mark.parametrize("alpha,threshold,value", DUNIFORM_N2)
def test_solve_discrete_duniform(d10, alpha, threshold, value):
    solution = smx.solve_discrete(d10, smx.GameSpec(n=2, alpha=alpha))
    assert solution.method == "exact"
    assert solution.optimal_value == pytest.approx(value, abs=1e-12)
    assert solution.first_threshold() == threshold


def test_solve_discrete_tables(d10_half):
    n = d10_half.spec.n
    assert d10_half.stop_value.shape == (n, 10)
    assert d10_half.continue_value.shape == (n, 10)
    assert np.all(d10_half.continue_value[-1] == 0.0)
    assert np.all((d10_half.stop_value >= 0) & (d10_half.stop_value <= 1))
    assert np.all((d10_half.continue_value >= 0) & (d10_half.continue_value <= 1))
    p = np.full(10, 0.1)
    best = np.maximum(d10_half.stop_value[0], d10_half.continue_value[0])
    assert d10_half.optimal_value == pytest.approx(float(p @ best), abs=1e-15)


def test_solve_discrete_single_observation(d10):
    solution = smx.solve_discrete(d10, smx.GameSpec(n=1, alpha=0.9))
    assert solution.optimal_value == pytest.approx(1.0, abs=1e-12)


def test_stop_region_with_tie(d10_half):
    # running max 5: continuing is worth 0.8, a 4 stops with F(8) = 0.8
    assert d10_half.stop_region(1, 4.0).tolist() == [3.0, 4.0]
    assert d10_half.threshold(1, 4.0) == 4.0
    # running max 4: continuing is worth 0.9, no candidate reaches it
    assert d10_half.stop_region(1, 3.0).tolist() == []
    assert d10_half.threshold(1, 3.0) is None
    assert d10_half.stop_region(2, 3.0).tolist() == [0.0, 1.0, 2.0, 3.0]


def test_solve_discrete_errors(uniform01, d10, monkeypatch):
    spec = smx.GameSpec(n=2, alpha=0.5)
    with pytest.raises(smx.DistributionSpecError):
        smx.solve_discrete(uniform01, spec)
    with pytest.raises(smx.DistributionSpecError):
        smx.solve_continuous(d10, spec)
    monkeypatch.setattr(smx.smx_opts, "max_states", 5)
    with pytest.raises(smx.InstanceTooLargeError):
        smx.solve_discrete(d10, spec)


def test_solve_dispatch(uniform01, d10):
    spec = smx.GameSpec(n=2, alpha=0.5)
    assert smx.solve(d10, spec).method == "exact"
    assert smx.solve(uniform01, spec, grid=256).method == "grid"


def test_solve_continuous_uniform(uniform01):
    solution = smx.solve_continuous(uniform01, smx.GameSpec(n=2, alpha=0.5), grid=4096)
    assert solution.method == "grid"
    assert solution.optimal_value == pytest.approx(0.95, abs=1e-3)
    assert solution.first_threshold() == pytest.approx(0.4, abs=1e-3)
    assert np.all(solution.continue_value[-1] == 0.0)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_solve_continuous_matches_closed_form(uniform01, alpha):
    threshold, value = smx.uniform_n2_closed_form(alpha)
    solution = smx.solve_continuous(uniform01, smx.GameSpec(n=2, alpha=alpha), grid=4096)
    assert solution.optimal_value == pytest.approx(value, abs=1e-3)
    assert solution.first_threshold() == pytest.approx(threshold, abs=1e-3)


def test_solve_continuous_grid_convergence(uniform01):
    spec = smx.GameSpec(n=2, alpha=0.7)
    _, exact = smx.uniform_n2_closed_form(0.7)
    errors = [
        abs(smx.solve_continuous(uniform01, spec, grid).optimal_value - exact)
        for grid in (16, 1024)
    ]
    assert errors[1] < errors[0]


def test_solve_continuous_scale_free():
    spec = smx.GameSpec(n=3, alpha=0.6)
    a = smx.solve_continuous(smx.parse_dist_spec("uniform:0,1"), spec, 1024).optimal_value
    b = smx.solve_continuous(smx.parse_dist_spec("uniform:0,5"), spec, 1024).optimal_value
    assert a == pytest.approx(b, abs=1e-9)


def test_uniform_n2_closed_form():
    assert smx.uniform_n2_closed_form(0.5) == pytest.approx((0.4, 0.95))
    assert smx.uniform_n2_closed_form(1e-9) == pytest.approx((0.0, 1.0), abs=1e-8)
    assert smx.uniform_n2_closed_form(1 - 1e-9) == pytest.approx((0.5, 0.75), abs=1e-6)
    with pytest.raises(smx.GameSpecError):
        smx.uniform_n2_closed_form(1.0)


def test_monotone_in_alpha(d10, uniform01):
    for d in (d10, uniform01):
        values = [smx.solve(d, smx.GameSpec(n=3, alpha=a), 1024).optimal_value for a in ALPHAS]
        assert all(hi >= lo - 1e-9 for hi, lo in zip(values, values[1:]))


def test_certainty_condition(d10, uniform01):
    assert smx.certainty_condition(d10, 0.3) is True
    assert smx.certainty_condition(d10, 0.4) is False
    assert smx.certainty_condition(uniform01, 0.5) is False


def test_certainty_report_witness(d10):
    report = smx.certainty_report(d10, 0.4)
    assert report.ratio_condition is False
    assert report.gap_condition is False
    assert report.interval == pytest.approx((2.5, 4.0))
    assert report.mass == pytest.approx(0.1)
    report = smx.certainty_report(d10, 0.3)
    assert report.ratio_condition is True
    assert report.certain is True


def test_certainty_gap_only():
    # alpha**2 = 0.25 > 1/10, but no mass strictly inside (2, 5)
    d = smx.parse_dist_spec("cat:1=0.25,2=0.25,5=0.25,10=0.25")
    report = smx.certainty_report(d, 0.5)
    assert report.ratio_condition is False
    assert report.gap_condition is True
    assert smx.solve_discrete(d, smx.GameSpec(n=3, alpha=0.5)).optimal_value == pytest.approx(1.0)


def test_certainty_matches_solver_on_random_laws():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        size = int(rng.integers(1, 6))
        values = rng.choice(np.arange(1, 21), size=size, replace=False)
        weights = rng.integers(1, 10, size=size)
        total = int(weights.sum())
        spec = ",".join(f"{v}={w}/{total}" for v, w in zip(values, weights))
        d = smx.parse_dist_spec(f"cat:{spec}")
        alpha = float(rng.choice([0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]))
        n = int(rng.integers(2, 4))
        value = smx.solve_discrete(d, smx.GameSpec(n=n, alpha=alpha)).optimal_value
        if smx.certainty_condition(d, alpha):
            assert value >= 1 - 1e-9
        else:
            assert value < 1 - 1e-9


@pytest.mark.parametrize("n", [2, 3, 4, 5])
@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_theorem_gap_nonnegative(uniform01, d10, n, alpha):
    spec = smx.GameSpec(n=n, alpha=alpha)
    spreads = [smx.make_spread(alpha, k) for k in (5, 20, 50)]
    for d in [uniform01, d10] + spreads:
        assert smx.theorem_gap(d, spec) >= -1e-3


def test_theorem_gap_examples(uniform01, d10):
    assert smx.theorem_gap(uniform01, smx.GameSpec(n=2, alpha=0.5)) == pytest.approx(0.2, abs=1e-3)
    assert smx.theorem_gap(d10, smx.GameSpec(n=1, alpha=0.5)) == pytest.approx(0.0, abs=1e-9)


def test_spread_many_slabs_close_to_game_max():
    spec = smx.GameSpec(n=3, alpha=0.5)
    value = smx.solve(smx.make_spread(0.5, 50), spec).optimal_value
    gm = smx.gm_value(3)
    assert value >= gm - 1e-3
    assert value - gm <= 0.02


def test_alpha_policy(d10_half):
    policy = smx.alpha_policy(d10_half)
    assert policy.horizon == 2
    obs = np.arange(10, dtype=float)
    stops = policy.decide(1, obs, np.full(10, -1.0), d10_half.dist)
    assert stops.tolist() == [False] * 4 + [True] * 6

import math

import numpy as np
import pytest

from fockbell.sampler import (
    alternating_policy,
    child_seeds,
    conditional_law_deviation,
    estimate_phase,
    phase_emergence_curve,
    resolve_angles,
    running_estimates,
    sample_trajectory,
    trajectory_rows,
)
from fockbell.types import ExperimentConfig, as_sequence, equal_split


def test_alternating_policy():
    assert [alternating_policy(j) for j in range(4)] == [
        0.0,
        math.pi / 2,
        0.0,
        math.pi / 2,
    ]


def test_resolve_angles_variants():
    assert resolve_angles(None, 3) == (0.0, math.pi / 2, 0.0)
    assert resolve_angles([0.1, 0.2], 4) == (0.1, 0.2, 0.1, 0.2)
    assert resolve_angles(lambda j: 0.5 * j, 3) == (0.0, 0.5, 1.0)


def test_trajectory_determinism():
    config = ExperimentConfig(4, 4)
    angles = [0.0, math.pi / 2, 1.0, -1.0]
    first = sample_trajectory(config, angles, 99)
    second = sample_trajectory(config, angles, 99)
    assert first.records == second.records
    other = sample_trajectory(config, angles, 100)
    assert first.records != other.records  # seeds chosen to differ


def test_child_seeds_are_stable_and_distinct():
    seeds = child_seeds(7, 16)
    again = child_seeds(7, 16)
    assert np.array_equal(seeds, again)
    assert len(set(int(s) for s in seeds)) == 16


def test_phase_estimate_balanced_quarter():
    # equal + counts at angles 0 and pi/2 put the likelihood peak at pi/4
    angles = [0.0, math.pi / 2] * 6
    outcomes = [1] * 12
    est = estimate_phase(as_sequence(angles, outcomes))
    assert abs(est.lambda_hat - math.pi / 4) < 1e-7
    assert abs(est.concentration - math.cos(math.pi / 4)) < 1e-7
    assert not est.degenerate


def test_phase_estimate_single_record():
    est = estimate_phase(as_sequence([0.3], [1]))
    assert abs(est.lambda_hat - 0.3) < 1e-7
    assert abs(est.concentration - 1.0) < 1e-12
    assert est.degenerate  # one angle cannot pin the phase sign structure


def test_degenerate_flag_for_collinear_angles():
    angles = [0.2, 0.2 + math.pi, 0.2, 0.2 - math.pi]
    outcomes = [1, -1, 1, -1]
    est = estimate_phase(as_sequence(angles, outcomes))
    assert est.degenerate
    mixed = estimate_phase(as_sequence([0.2, 1.0, 0.2], [1, 1, -1]))
    assert not mixed.degenerate


def test_phase_estimate_shift_covariance():
    angles = [0.0, math.pi / 2, 1.1, 2.0, -0.7]
    outcomes = [1, -1, 1, 1, -1]
    base = estimate_phase(as_sequence(angles, outcomes))
    delta = 0.9
    shifted = estimate_phase(
        as_sequence([a + delta for a in angles], outcomes)
    )
    gap = math.remainder(shifted.lambda_hat - base.lambda_hat - delta, math.tau)
    assert abs(gap) < 1e-6
    assert abs(shifted.concentration - base.concentration) < 1e-6


def test_running_estimates_match_final():
    config = ExperimentConfig(5, 5)
    traj = sample_trajectory(config, resolve_angles(None, 8), 1234)
    running = running_estimates(traj.records)
    assert len(running) == 8
    final = estimate_phase(traj.records)
    assert abs(running[-1].lambda_hat - final.lambda_hat) < 1e-9
    assert abs(running[-1].resultant - final.resultant) < 1e-9


def test_trajectory_rows_shape():
    config = ExperimentConfig(3, 3)
    traj = sample_trajectory(config, [0.0, 1.0, 2.0], 5)
    rows = trajectory_rows(traj, trajectory_id=2)
    assert len(rows) == 3
    assert rows[0]["trajectory_id"] == 2
    assert rows[0]["step"] == 1
    assert set(rows[0]) == {
        "trajectory_id",
        "step",
        "angle",
        "outcome",
        "lambda_hat",
        "concentration",
    }


def test_emergence_curve_shape_and_start():
    points = phase_emergence_curve(equal_split(20), 6, 25, 31)
    assert [p.step for p in points] == [1, 2, 3, 4, 5, 6]
    # a single detection always looks perfectly phase-locked
    assert abs(points[0].mean_concentration - 1.0) < 1e-12
    assert abs(points[0].mean_resultant - 0.5) < 1e-9
    assert all(0.0 <= p.mean_resultant <= 1.0 for p in points)


def test_conditional_sampling_tracks_exact_law():
    # after a 30-step prefix the next outcome follows the classical cosine
    # law built on the estimated phase
    deviation = conditional_law_deviation(equal_split(100), 30, 100, 99)
    assert deviation < 0.02


def test_emergence_is_established_by_fifty_steps():
    points = phase_emergence_curve(equal_split(100), 50, 200, 20260819)
    resultants = [p.mean_resultant for p in points]
    # the posterior sharpens monotonically (small slack for MC noise)...
    assert all(b >= a - 5e-3 for a, b in zip(resultants, resultants[1:]))
    assert resultants[-1] > 0.8
    # ...while the outcome-alignment score settles at the cosine-law
    # equilibrium of one half, after starting pinned at one
    assert abs(points[0].mean_concentration - 1.0) < 1e-12
    assert 0.4 < points[-1].mean_concentration < 0.6


def test_estimate_at_single_orientation_is_flagged():
    est = estimate_phase(as_sequence([0.0] * 5, [1] * 5))
    assert abs(est.lambda_hat) < 1e-7
    assert est.degenerate


def test_empirical_sequence_distribution_matches_exact_law():
    # full run at one orientation: compare 1e5 sampled sequences against
    # the exact table, per exchangeability class and as a pooled chi-square
    from itertools import product

    from scipy.stats import chisquare

    from fockbell.engine import sequence_probability_table

    config = equal_split(10)
    angle = 0.4
    angles = [angle] * 10
    n_runs = 100_000
    index_of = {
        outcomes: i for i, outcomes in enumerate(product((-1, 1), repeat=10))
    }
    plus_count = np.array(
        [sum(o == 1 for o in outcomes) for outcomes in index_of]
    )
    counts = np.zeros(1024)
    for seed in child_seeds(55, n_runs):
        traj = sample_trajectory(config, angles, seed)
        counts[index_of[traj.records.outcomes]] += 1
    probs = sequence_probability_table(config, angles)
    # class totals: number of + outcomes is a sufficient statistic here
    for k in range(11):
        mask = plus_count == k
        # clamp away the -1e-18 roundoff of identically-zero classes
        p = min(max(float(probs[mask].sum()), 0.0), 1.0)
        observed = float(counts[mask].sum())
        sigma = math.sqrt(n_runs * p * (1 - p))
        assert abs(observed - n_runs * p) <= 3 * sigma
    expected = probs * n_runs
    keep = expected >= 5.0
    observed = list(counts[keep]) + [float(counts[~keep].sum())]
    reference = list(expected[keep]) + [float(expected[~keep].sum())]
    assert chisquare(observed, reference).pvalue > 0.001


def test_sampler_rejects_overlong_runs():
    with pytest.raises(ValueError):
        sample_trajectory(ExperimentConfig(1, 1), [0.0, 0.0, 0.0], 1)

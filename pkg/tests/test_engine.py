import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockbell.engine import (
    closed_form_correlation,
    closed_form_correlation_grid,
    correlation,
    correlation_batch,
    default_node_count,
    normalization_constant,
    quadrature_nodes,
    sequence_probability,
    sequence_probability_table,
)
from fockbell.types import CorrelationQuery, ExperimentConfig, as_sequence

RNG = np.random.default_rng(915)


def _random_angles(m):
    return RNG.uniform(-math.pi, math.pi, size=m).tolist()


def test_normalization_golden_values():
    assert normalization_constant(ExperimentConfig(0, 0)) == 1.0
    assert abs(normalization_constant(ExperimentConfig(1, 1)) - 0.5) < 1e-15
    assert abs(normalization_constant(ExperimentConfig(2, 0)) - 0.25) < 1e-15
    assert abs(normalization_constant(ExperimentConfig(2, 2)) - 0.375) < 1e-15
    assert abs(normalization_constant(ExperimentConfig(3, 1)) - 0.25) < 1e-15


def test_normalization_agrees_with_direct_quadrature():
    for n_plus in range(0, 6):
        for n_minus in range(0, 6):
            config = ExperimentConfig(n_plus, n_minus)
            nodes = quadrature_nodes(default_node_count(config.total))
            direct = float(
                np.mean(np.cos(config.imbalance * nodes) * np.cos(nodes) ** config.total)
            )
            expected = normalization_constant(config)
            assert abs(direct - expected) <= 1e-12 * max(1.0, abs(expected))


def test_single_detection_is_unbiased():
    config = ExperimentConfig(1, 1)
    for angle in (-2.0, 0.0, 0.31, 3.0):
        for outcome in (-1, 1):
            p = sequence_probability(config, as_sequence([angle], [outcome]))
            assert abs(p - 0.5) < 1e-13


def test_two_particle_probabilities():
    config = ExperimentConfig(1, 1)
    delta = 0.7
    same = sequence_probability(config, as_sequence([0.0, delta], [1, 1]))
    opposite = sequence_probability(config, as_sequence([0.0, delta], [1, -1]))
    assert abs(same - (1 + math.cos(delta)) / 4) < 1e-13
    assert abs(opposite - (1 - math.cos(delta)) / 4) < 1e-13


def test_empty_sequence_is_certain():
    for config in (ExperimentConfig(0, 0), ExperimentConfig(3, 2)):
        assert sequence_probability(config, as_sequence([], [])) == 1.0


def test_table_matches_pointwise_and_sums_to_one():
    config = ExperimentConfig(3, 2)
    angles = _random_angles(3)
    table = sequence_probability_table(config, angles)
    assert table.shape == (8,)
    assert abs(table.sum() - 1.0) < 1e-12
    for index, outcomes in enumerate(itertools.product((-1, 1), repeat=3)):
        direct = sequence_probability(config, as_sequence(angles, outcomes))
        assert abs(table[index] - direct) < 1e-13


def test_marginals_are_consistent():
    # dropping the last detection must reproduce the shorter-run table
    config = ExperimentConfig(2, 2)
    angles = _random_angles(4)
    full = sequence_probability_table(config, angles)
    shorter = sequence_probability_table(config, angles[:3])
    folded = full.reshape(8, 2).sum(axis=1)
    assert np.max(np.abs(folded - shorter)) < 1e-13


@settings(max_examples=25, deadline=None)
@given(
    n_plus=st.integers(0, 4),
    n_minus=st.integers(0, 4),
    shift=st.floats(-10, 10, allow_nan=False),
    data=st.data(),
)
def test_probability_gauge_invariance(n_plus, n_minus, shift, data):
    config = ExperimentConfig(n_plus, n_minus)
    m = data.draw(st.integers(0, config.total))
    angles = data.draw(
        st.lists(st.floats(-3.0, 3.0), min_size=m, max_size=m)
    )
    outcomes = data.draw(
        st.lists(st.sampled_from((-1, 1)), min_size=m, max_size=m)
    )
    base = sequence_probability(config, as_sequence(angles, outcomes))
    shifted = sequence_probability(
        config, as_sequence([a + shift for a in angles], outcomes)
    )
    assert abs(base - shifted) < 1e-13


@settings(max_examples=25, deadline=None)
@given(n_plus=st.integers(0, 4), n_minus=st.integers(0, 4), data=st.data())
def test_probability_exchangeable(n_plus, n_minus, data):
    config = ExperimentConfig(n_plus, n_minus)
    m = data.draw(st.integers(2, max(2, config.total)))
    if m > config.total:
        return
    angles = _random_angles(m)
    outcomes = data.draw(
        st.lists(st.sampled_from((-1, 1)), min_size=m, max_size=m)
    )
    pairs = list(zip(angles, outcomes))
    base = sequence_probability(config, as_sequence(angles, outcomes))
    perm = data.draw(st.permutations(pairs))
    shuffled = sequence_probability(
        config, as_sequence([p[0] for p in perm], [p[1] for p in perm])
    )
    assert abs(base - shuffled) < 1e-13


def test_spin_flip_symmetry():
    # negating every outcome while rotating every analyzer by pi is a no-op
    config = ExperimentConfig(3, 1)
    angles = _random_angles(3)
    outcomes = [1, -1, 1]
    base = sequence_probability(config, as_sequence(angles, outcomes))
    flipped = sequence_probability(
        config,
        as_sequence([a + math.pi for a in angles], [-o for o in outcomes]),
    )
    assert abs(base - flipped) < 1e-13


def test_population_swap_symmetry():
    config = ExperimentConfig(3, 1)
    swapped = ExperimentConfig(1, 3)
    angles = _random_angles(3)
    outcomes = [1, 1, -1]
    base = sequence_probability(config, as_sequence(angles, outcomes))
    other = sequence_probability(
        swapped, as_sequence(angles, [-o for o in outcomes])
    )
    assert abs(base - other) < 1e-13


def test_node_doubling_changes_nothing():
    config = ExperimentConfig(2, 2)
    angles = _random_angles(3)
    seq = as_sequence(angles, [1, -1, 1])
    baseline = sequence_probability(config, seq)
    doubled = sequence_probability(
        config, seq, node_count=2 * default_node_count(config.total)
    )
    assert abs(baseline - doubled) <= 1e-13
    query = CorrelationQuery(config, tuple(angles))
    assert (
        abs(
            correlation(query)
            - correlation(query, node_count=4 * default_node_count(4))
        )
        <= 1e-13
    )


def test_correlation_zero_identities():
    # full-length runs with imbalanced populations carry no correlation,
    # nor do balanced runs one detection short of exhausting the state
    imbalanced = ExperimentConfig(3, 1)
    assert correlation(CorrelationQuery(imbalanced, tuple(_random_angles(4)))) == 0.0
    balanced = ExperimentConfig(3, 3)
    assert correlation(CorrelationQuery(balanced, tuple(_random_angles(5)))) == 0.0


def test_correlation_trivial_cases():
    config = ExperimentConfig(2, 2)
    assert correlation(CorrelationQuery(config, ())) == 1.0
    # a full run at a single orientation is perfectly correlated in product
    aligned = correlation(CorrelationQuery(config, (0.9,) * 4))
    assert abs(aligned - 1.0) < 1e-12
    singlet = ExperimentConfig(1, 1)
    for _ in range(5):
        a, b = _random_angles(2)
        value = correlation(CorrelationQuery(singlet, (a, b)))
        assert abs(value - math.cos(a - b)) < 1e-12


def test_correlation_batch_matches_loop():
    config = ExperimentConfig(3, 3)
    stack = RNG.uniform(-math.pi, math.pi, size=(7, 4))
    batch = correlation_batch(config, stack)
    for row, angles in zip(batch, stack):
        single = correlation(CorrelationQuery(config, tuple(angles)))
        assert abs(row - single) < 1e-13


def test_closed_form_small_cases():
    for chi in np.linspace(-math.pi, math.pi, 9):
        assert abs(closed_form_correlation(6, 1, chi) - math.cos(chi)) < 1e-14
        expected = 0.5 * (1 + 1 / 3 + (1 - 1 / 3) * math.cos(2 * chi))
        assert abs(closed_form_correlation(4, 2, chi) - expected) < 1e-14
        assert abs(closed_form_correlation(4, 4, chi) - 1.0) < 1e-14


def test_closed_form_is_one_at_zero_separation():
    for n_total in (2, 4, 8, 12):
        for p_alice in range(1, n_total + 1):
            assert abs(closed_form_correlation(n_total, p_alice, 0.0) - 1.0) < 1e-13


def test_closed_form_symmetries():
    for chi in (0.3, 1.1, 2.9):
        assert (
            abs(
                closed_form_correlation(8, 3, chi)
                - closed_form_correlation(8, 5, chi)
            )
            < 1e-13
        )
        assert (
            abs(
                closed_form_correlation(8, 3, chi)
                - closed_form_correlation(8, 3, -chi)
            )
            < 1e-13
        )


def test_closed_form_matches_quadrature():
    for n_total, p_alice in ((4, 2), (6, 3), (10, 4), (12, 5)):
        config = ExperimentConfig(n_total // 2, n_total // 2)
        for chi in (0.2, 0.9, 1.7, 2.6):
            angles = (chi,) * p_alice + (0.0,) * (n_total - p_alice)
            quad = correlation(CorrelationQuery(config, angles))
            closed = closed_form_correlation(n_total, p_alice, chi)
            assert abs(quad - closed) < 1e-10


def test_closed_form_grid_matches_scalar():
    chis = np.linspace(-2.0, 2.0, 33)
    grid = closed_form_correlation_grid(10, 4, chis)
    for chi, value in zip(chis, grid):
        assert abs(value - closed_form_correlation(10, 4, chi)) < 1e-14


def test_closed_form_large_n_path_is_continuous():
    # the exact-rational and log-gamma coefficient routes must agree
    # where they hand over
    for p_alice in (1, 2, 7, 32):
        low = closed_form_correlation(64, p_alice, 0.83)
        config_independent = closed_form_correlation(66, p_alice, 0.83)
        assert abs(low - config_independent) < 5e-3
    grid_64 = closed_form_correlation_grid(64, 2, np.array([0.4, 1.3]))
    explicit = 0.5 * (1 + 1 / 63 + (1 - 1 / 63) * np.cos(2 * np.array([0.4, 1.3])))
    assert np.max(np.abs(grid_64 - explicit)) < 1e-13
    grid_128 = closed_form_correlation_grid(128, 2, np.array([0.4, 1.3]))
    explicit = 0.5 * (1 + 1 / 127 + (1 - 1 / 127) * np.cos(2 * np.array([0.4, 1.3])))
    assert np.max(np.abs(grid_128 - explicit)) < 1e-12


def test_closed_form_validation():
    with pytest.raises(ValueError):
        closed_form_correlation(5, 2, 0.3)
    with pytest.raises(ValueError):
        closed_form_correlation(4, 0, 0.3)
    with pytest.raises(ValueError):
        closed_form_correlation(4, 5, 0.3)

"""Brute-force detection statistics by direct two-mode operator algebra.

Deliberately independent of the quadrature engine: states are explicit
amplitude vectors over occupation pairs, and each detection applies the
annihilation combination

    b = (a_plus + outcome * exp(i*angle) * a_minus) / sqrt(2),

whose normal-ordered square b'b is the projector onto the detected
transverse spin direction.  Squared norms of repeated applications give
sequence probabilities after dividing by the falling factorial of the
particle number, which is the outcome-independent normalization because
summing b'b over the two outcomes at any fixed angle returns the number
operator.  Cost is linear in the particle number per detection, so this
doubles as the sampler's workhorse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .types import (
    ExperimentConfig,
    MeasurementSequence,
    validate_run_size,
    wrap_angle,
)

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class FockVector:
    """Amplitudes over occupation pairs with a fixed particle total.

    ``amplitudes[k]`` multiplies the basis state with k particles in the
    plus mode and ``total - k`` in the minus mode.  Vectors are in general
    unnormalized: detections shrink the norm by the outcome probability.
    """

    total: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.total < 0:
            raise ValueError("particle total must be non-negative")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.total + 1,):
            raise ValueError("amplitude vector must have length total + 1")
        object.__setattr__(self, "amplitudes", amps)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


def initial_state(config: ExperimentConfig) -> FockVector:
    """Unit vector concentrated on the configured occupation pair."""
    amps = np.zeros(config.total + 1, dtype=complex)
    amps[config.n_plus] = 1.0
    return FockVector(config.total, amps)


def apply_detection(state: FockVector, angle: float, outcome: int) -> FockVector:
    """Unnormalized state after detecting one particle.

    Annihilating from the plus mode lowers the occupation index by one,
    from the minus mode leaves it; the minus branch carries the analyzer
    phase and the outcome sign.
    """
    if outcome not in (-1, 1):
        raise ValueError("outcome must be +1 or -1")
    if state.total < 1:
        raise ValueError("cannot detect on a zero-particle state")
    amps = state.amplitudes
    total = state.total
    plus_weights = np.sqrt(np.arange(1, total + 1, dtype=float))
    minus_weights = np.sqrt(np.arange(total, 0, -1, dtype=float))
    phase = outcome * np.exp(1j * wrap_angle(angle))
    new_amps = (plus_weights * amps[1:] + phase * minus_weights * amps[:-1]) / _SQRT2
    return FockVector(total - 1, new_amps)


def detection_chain(
    config: ExperimentConfig, seq: MeasurementSequence
) -> FockVector:
    """Apply a whole sequence of detections to the initial state."""
    validate_run_size(config, len(seq))
    state = initial_state(config)
    for record in seq:
        state = apply_detection(state, record.angle, record.outcome)
    return state


def oracle_sequence_probability(
    config: ExperimentConfig, seq: MeasurementSequence
) -> float:
    """Probability of an outcome sequence from the operator chain.

    The norm lost across M detections, divided by N(N-1)...(N-M+1).
    """
    m = len(seq)
    validate_run_size(config, m)
    if m == 0:
        return 1.0
    return detection_chain(config, seq).norm_squared() / math.perm(
        config.total, m
    )


def oracle_probability_table(
    config: ExperimentConfig, angles: list[float] | tuple[float, ...]
) -> np.ndarray:
    """All 2**M sequence probabilities, indexed like the engine's table."""
    m = len(angles)
    validate_run_size(config, m)
    states = [initial_state(config)]
    for angle in angles:
        nxt = []
        for state in states:
            nxt.append(apply_detection(state, angle, -1))
            nxt.append(apply_detection(state, angle, +1))
        states = nxt
    norms = np.array([state.norm_squared() for state in states])
    if m == 0:
        return norms
    return norms / math.perm(config.total, m)


def conditional_plus_probability(state: FockVector, angle: float) -> float:
    """Chance that the next detection at this angle reads +1.

    The two outcome branches' squared norms add up to total * norm, so the
    ratio is a genuine probability.
    """
    if state.total < 1:
        raise ValueError("cannot detect on a zero-particle state")
    norm = state.norm_squared()
    if norm == 0.0:
        raise ValueError("cannot condition on a zero-norm state")
    up = apply_detection(state, angle, +1).norm_squared()
    return up / (state.total * norm)


def transverse_expectation(state: FockVector, angle: float) -> float:
    """Per-particle mean transverse spin along the given direction."""
    return 2.0 * conditional_plus_probability(state, angle) - 1.0

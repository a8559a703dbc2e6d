"""Monte-Carlo trajectories and the emergence of the relative phase.

Outcomes are drawn one detection at a time from the exact conditional law
of the operator chain, so empirical frequencies converge to the engine's
sequence probabilities by construction.  Alongside each trajectory runs a
maximum-likelihood tracker for the relative condensate phase: once a few
detections are in, the outcome statistics become indistinguishable from a
classical cosine law 1/2 * (1 + outcome * cos(lambda - angle)) with a
trajectory-specific phase lambda, and the tracker recovers that phase from
the record.

Randomness comes from numpy's default PCG64 generator; a trajectory is a
pure function of (config, angles, seed).  Batch runs derive independent
child seeds through numpy's SeedSequence spawning, so aggregates do not
depend on execution order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .oracle import apply_detection, conditional_plus_probability, initial_state
from .types import (
    ExperimentConfig,
    MeasurementRecord,
    MeasurementSequence,
    angles_tuple,
    validate_run_size,
    wrap_angle,
)

PHASE_GRID_SIZE = 4096
PHASE_REFINE_TOL = 1e-8
_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

AnglePolicy = Callable[[int], float]


def alternating_policy(step: int) -> float:
    """Default angle schedule: 0 and pi/2 keep both phase quadratures visible."""
    return 0.0 if step % 2 == 0 else math.pi / 2.0


def resolve_angles(
    policy: AnglePolicy | Sequence[float] | None, n_steps: int
) -> tuple[float, ...]:
    """Materialize an angle schedule; sequences shorter than the run cycle."""
    if policy is None:
        policy = alternating_policy
    if callable(policy):
        return angles_tuple(policy(j) for j in range(n_steps))
    return angles_tuple(itertools.islice(itertools.cycle(policy), n_steps))


@dataclass(frozen=True)
class Trajectory:
    """One sampled measurement history, reproducible from its seed."""

    config: ExperimentConfig
    records: MeasurementSequence
    seed: int


@dataclass(frozen=True)
class PhaseEstimate:
    """Maximum-likelihood relative phase for a measurement record.

    ``concentration`` is the record-average of outcome * cos(lambda_hat -
    angle): alignment of the individual results with the fitted cosine law.
    ``resultant`` is the circular mean length of the normalized likelihood
    over the phase grid: sharpness of the likelihood itself, the quantity
    that grows from 1/2 toward 1 as the phase emerges.  ``degenerate`` is
    set when all angles lie on one line through the origin (equal modulo
    pi), in which case the record cannot pin the phase down and the
    reported maximizer is just one representative.
    """

    lambda_hat: float
    log_likelihood: float
    concentration: float
    resultant: float
    degenerate: bool


@dataclass(frozen=True)
class EmergencePoint:
    """Trajectory-averaged phase statistics after ``step`` detections."""

    step: int
    mean_concentration: float
    mean_resultant: float


def sample_trajectory(
    config: ExperimentConfig,
    angles: Sequence[float],
    seed: int,
) -> Trajectory:
    """Draw one outcome per angle from the exact conditional distribution."""
    wrapped = angles_tuple(angles)
    validate_run_size(config, len(wrapped))
    rng = np.random.default_rng(int(seed))
    state = initial_state(config)
    records = []
    for angle in wrapped:
        p_plus = conditional_plus_probability(state, angle)
        outcome = 1 if rng.random() < p_plus else -1
        state = apply_detection(state, angle, outcome)
        records.append(MeasurementRecord(angle, outcome))
    return Trajectory(config, MeasurementSequence(tuple(records)), int(seed))


def _phase_grid() -> np.ndarray:
    return np.arange(PHASE_GRID_SIZE) * (math.tau / PHASE_GRID_SIZE) - math.pi


def _log_term(grid: np.ndarray, angle: float, outcome: int) -> np.ndarray:
    values = 0.5 * (1.0 + outcome * np.cos(grid - angle))
    with np.errstate(divide="ignore"):
        return np.log(values)


def _log_likelihood_at(
    lam: float, angles: np.ndarray, outcomes: np.ndarray
) -> float:
    values = 0.5 * (1.0 + outcomes * np.cos(lam - angles))
    if np.any(values <= 0.0):
        return -math.inf
    return float(np.log(values).sum())


def _golden_maximize(
    fn: Callable[[float], float], lo: float, hi: float, tol: float
) -> float:
    a, b = lo, hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def _all_angles_collinear(angles: Iterable[float]) -> bool:
    it = iter(angles)
    first = next(it)
    return all(
        abs(math.remainder(angle - first, math.pi)) <= 1e-12 for angle in it
    )


def _estimate_from_grid(
    grid: np.ndarray,
    grid_logl: np.ndarray,
    angles: np.ndarray,
    outcomes: np.ndarray,
) -> PhaseEstimate:
    peak = int(np.argmax(grid_logl))
    step = math.tau / PHASE_GRID_SIZE
    lam_hat = _golden_maximize(
        lambda lam: _log_likelihood_at(lam, angles, outcomes),
        grid[peak] - step,
        grid[peak] + step,
        PHASE_REFINE_TOL,
    )
    lam_hat = wrap_angle(lam_hat)
    weights = np.exp(grid_logl - grid_logl[peak])
    total = weights.sum()
    resultant = float(np.abs((weights * np.exp(1j * grid)).sum()) / total)
    concentration = float(np.mean(outcomes * np.cos(lam_hat - angles)))
    return PhaseEstimate(
        lambda_hat=lam_hat,
        log_likelihood=_log_likelihood_at(lam_hat, angles, outcomes),
        concentration=concentration,
        resultant=resultant,
        degenerate=_all_angles_collinear(angles),
    )


def estimate_phase(records: MeasurementSequence) -> PhaseEstimate:
    """Fit the cosine outcome law to a record by maximum likelihood.

    A grid scan over 4096 equispaced phases locates the global maximum,
    and golden-section refinement narrows it to 1e-8.
    """
    if len(records) == 0:
        raise ValueError("phase estimation needs at least one record")
    grid = _phase_grid()
    angles = np.array(records.angles)
    outcomes = np.array(records.outcomes, dtype=float)
    grid_logl = np.zeros_like(grid)
    for record in records:
        grid_logl += _log_term(grid, record.angle, record.outcome)
    return _estimate_from_grid(grid, grid_logl, angles, outcomes)


def running_estimates(records: MeasurementSequence) -> list[PhaseEstimate]:
    """Phase estimate after every prefix of the record, computed in one pass."""
    if len(records) == 0:
        raise ValueError("phase estimation needs at least one record")
    grid = _phase_grid()
    grid_logl = np.zeros_like(grid)
    estimates = []
    all_angles = np.array(records.angles)
    all_outcomes = np.array(records.outcomes, dtype=float)
    for j, record in enumerate(records, start=1):
        grid_logl += _log_term(grid, record.angle, record.outcome)
        estimates.append(
            _estimate_from_grid(
                grid, grid_logl, all_angles[:j], all_outcomes[:j]
            )
        )
    return estimates


def child_seeds(seed: int, count: int) -> list[int]:
    """Independent per-trajectory seeds derived from one master seed."""
    state = np.random.SeedSequence(seed).generate_state(count, np.uint64)
    return [int(s) for s in state]


def phase_emergence_curve(
    config: ExperimentConfig,
    n_steps: int,
    n_trajectories: int,
    seed: int,
    angle_policy: AnglePolicy | Sequence[float] | None = None,
) -> list[EmergencePoint]:
    """Trajectory-averaged phase statistics as detections accumulate.

    The resultant column is the emergence signal: it starts at 1/2 after a
    single detection and climbs toward 1 as the likelihood sharpens, while
    the concentration column tracks how well individual outcomes align
    with the fitted law (it levels off near the angle-schedule average of
    cos**2 once the phase is established).
    """
    if n_steps < 1 or n_trajectories < 1:
        raise ValueError("need at least one step and one trajectory")
    validate_run_size(config, n_steps)
    angles = resolve_angles(angle_policy, n_steps)
    conc = np.zeros(n_steps)
    res = np.zeros(n_steps)
    for traj_seed in child_seeds(seed, n_trajectories):
        trajectory = sample_trajectory(config, angles, traj_seed)
        for j, estimate in enumerate(running_estimates(trajectory.records)):
            conc[j] += estimate.concentration
            res[j] += estimate.resultant
    conc /= n_trajectories
    res /= n_trajectories
    return [
        EmergencePoint(j + 1, float(conc[j]), float(res[j]))
        for j in range(n_steps)
    ]


def trajectory_rows(trajectory: Trajectory, trajectory_id: int = 0) -> list[dict]:
    """Per-step CSV rows with the running phase fit.

    Columns: trajectory_id, step, angle, outcome, lambda_hat, concentration.
    """
    rows = []
    estimates = running_estimates(trajectory.records)
    for j, (record, estimate) in enumerate(
        zip(trajectory.records, estimates), start=1
    ):
        rows.append(
            {
                "trajectory_id": trajectory_id,
                "step": j,
                "angle": record.angle,
                "outcome": record.outcome,
                "lambda_hat": estimate.lambda_hat,
                "concentration": estimate.concentration,
            }
        )
    return rows


def conditional_law_deviation(
    config: ExperimentConfig,
    prefix_steps: int,
    n_trajectories: int,
    seed: int,
    angle_policy: AnglePolicy | Sequence[float] | None = None,
) -> float:
    """Mean gap between the exact next-outcome law and the cosine law.

    For each trajectory, the exact conditional probability of the next
    outcome being +1 is compared against 1/2 * (1 + cos(lambda_hat -
    next_angle)) built from the prefix's fitted phase; the average absolute
    gap over trajectories is returned.  Small values mean the emerged
    phase alone predicts the next detection.
    """
    if prefix_steps < 1:
        raise ValueError("need at least one prefix detection")
    validate_run_size(config, prefix_steps + 1)
    angles = resolve_angles(angle_policy, prefix_steps + 1)
    next_angle = angles[prefix_steps]
    gaps = []
    for traj_seed in child_seeds(seed, n_trajectories):
        trajectory = sample_trajectory(config, angles[:prefix_steps], traj_seed)
        state = initial_state(config)
        for record in trajectory.records:
            state = apply_detection(state, record.angle, record.outcome)
        exact = conditional_plus_probability(state, next_angle)
        estimate = estimate_phase(trajectory.records)
        law = 0.5 * (1.0 + math.cos(estimate.lambda_hat - next_angle))
        gaps.append(abs(exact - law))
    return float(np.mean(gaps))

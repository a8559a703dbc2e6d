"""Shared value types for condensate spin-measurement experiments.

An experiment starts from a pair of condensates holding ``n_plus`` and
``n_minus`` particles in two internal states.  Particles are then detected
one at a time along transverse directions; each detection fixes an analyzer
angle and yields a binary outcome.  The classes here describe those inputs
in one canonical, validated form so the numerical layers never have to
re-check them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence


def wrap_angle(angle: float) -> float:
    """Reduce an angle to the half-open interval (-pi, pi]."""
    reduced = math.remainder(angle, math.tau)
    # remainder() can return -pi; keep the +pi representative instead.
    if reduced == -math.pi:
        return math.pi
    return reduced


def angles_tuple(angles: Iterable[float]) -> tuple[float, ...]:
    """Wrap every entry of an angle list into (-pi, pi]."""
    return tuple(wrap_angle(float(a)) for a in angles)


@dataclass(frozen=True)
class ExperimentConfig:
    """Particle content of the initial two-component Fock state.

    The empty configuration (0, 0) is legal: it supports only the empty
    measurement sequence, whose probability is 1.
    """

    n_plus: int
    n_minus: int

    def __post_init__(self) -> None:
        if not isinstance(self.n_plus, int) or not isinstance(self.n_minus, int):
            raise ValueError("populations must be integers")
        if self.n_plus < 0 or self.n_minus < 0:
            raise ValueError("populations must be non-negative")

    @property
    def total(self) -> int:
        return self.n_plus + self.n_minus

    @property
    def imbalance(self) -> int:
        return self.n_plus - self.n_minus


@dataclass(frozen=True)
class MeasurementRecord:
    """One detection: analyzer angle and binary outcome (+1 or -1)."""

    angle: float
    outcome: int

    def __post_init__(self) -> None:
        if self.outcome not in (-1, 1):
            raise ValueError("outcome must be +1 or -1")
        if not math.isfinite(self.angle):
            raise ValueError("angle must be finite")
        object.__setattr__(self, "angle", wrap_angle(float(self.angle)))


@dataclass(frozen=True)
class MeasurementSequence:
    """An ordered run of detections within a single experiment.

    Length must not exceed the particle total of the configuration it is
    used with; operations that receive both enforce that bound.
    """

    records: tuple[MeasurementRecord, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def angles(self) -> tuple[float, ...]:
        return tuple(record.angle for record in self.records)

    @property
    def outcomes(self) -> tuple[int, ...]:
        return tuple(record.outcome for record in self.records)


def as_sequence(
    angles: Iterable[float], outcomes: Iterable[int]
) -> MeasurementSequence:
    """Pair up angle and outcome lists into a validated sequence."""
    angle_list = list(angles)
    outcome_list = list(outcomes)
    if len(angle_list) != len(outcome_list):
        raise ValueError("angles and outcomes must have equal length")
    return MeasurementSequence(
        tuple(
            MeasurementRecord(angle, outcome)
            for angle, outcome in zip(angle_list, outcome_list)
        )
    )


@dataclass(frozen=True)
class CorrelationQuery:
    """Angles whose product-of-outcomes expectation is requested.

    The expectation averages the product of all M outcomes over the exact
    outcome distribution at the given analyzer angles.  An empty angle list
    is the empty product, with expectation 1.
    """

    config: ExperimentConfig
    angles: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "angles", angles_tuple(self.angles))
        if len(self.angles) > self.config.total:
            raise ValueError("cannot correlate more detections than particles")

    def __len__(self) -> int:
        return len(self.angles)


def validate_run_size(config: ExperimentConfig, m: int) -> None:
    """Reject detection counts that the state cannot support."""
    if m < 0:
        raise ValueError("detection count must be non-negative")
    if m > config.total:
        raise ValueError("cannot detect more particles than the state holds")


def equal_split(n_total: int) -> ExperimentConfig:
    """Balanced configuration with n_total particles; n_total must be even."""
    if n_total <= 0 or n_total % 2:
        raise ValueError("a balanced configuration needs a positive even total")
    return ExperimentConfig(n_total // 2, n_total // 2)


ANGLE_EQUALITY_TOL = 1e-12


def angles_close(a: float, b: float, tol: float = ANGLE_EQUALITY_TOL) -> bool:
    """Equality of angles as points on the circle."""
    return abs(math.remainder(a - b, math.tau)) <= tol

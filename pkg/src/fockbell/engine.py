"""Exact statistics of transverse spin detections on a double Fock state.

Every quantity here comes from an integral representation of the detection
amplitudes.  After tracing out the untouched particles, the probability of
an outcome sequence is a double average over two circular variables: a
relative phase ``lam`` between the condensates, and a second variable
``imb`` conjugate to the population imbalance that carries the residual
quantum effects.  Both integrands are trigonometric polynomials of bounded
degree, so equispaced (periodic trapezoid) quadrature evaluates them
exactly up to roundoff; no discretization error is involved anywhere in
this module.

Prefactors are assembled in exact rational arithmetic before the single
final conversion to float, which keeps extreme particle numbers stable.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .types import (
    CorrelationQuery,
    ExperimentConfig,
    MeasurementSequence,
    angles_tuple,
    validate_run_size,
)

# Outcome tables are dense over all 2**M sequences; beyond this the table
# itself, not the quadrature, dominates memory.
MAX_TABLE_DETECTIONS = 20


def default_node_count(n_total: int) -> int:
    """Node count per circular variable: exact for the worst-case degree.

    The integrands have degree at most 2*n_total, and an n-node periodic
    trapezoid rule integrates trigonometric polynomials of degree <= n-1
    exactly, so 2*n_total + 4 leaves margin.
    """
    return 2 * n_total + 4


def quadrature_nodes(count: int) -> np.ndarray:
    if count < 1:
        raise ValueError("node count must be positive")
    return np.arange(count) * (math.tau / count)


def _normalization_fraction(config: ExperimentConfig) -> Fraction:
    return Fraction(
        math.comb(config.total, config.n_minus), 2 ** config.total
    )


def normalization_constant(config: ExperimentConfig) -> float:
    """Average of cos(D*imb) * cos(imb)**N over the circle.

    Expanding cos(imb)**N over harmonics leaves only the component matching
    the imbalance D, giving the closed form binom(N, n_minus) / 2**N; the
    parity always works out because N - D = 2*n_minus.  The empty
    configuration integrates the constant 1.
    """
    return float(_normalization_fraction(config))


def _mesh_weight(
    config: ExperimentConfig, m: int, imb: np.ndarray
) -> np.ndarray:
    # Column vector over the imbalance-phase axis; broadcasts against the
    # relative-phase axis.
    n = config.total
    return (np.cos(config.imbalance * imb) * np.cos(imb) ** (n - m))[:, None]


def sequence_probability(
    config: ExperimentConfig,
    seq: MeasurementSequence,
    *,
    node_count: int | None = None,
) -> float:
    """Probability of an ordered outcome sequence.

    The result does not depend on how many further detections will follow:
    summing the distribution over a trailing outcome reproduces the shorter
    sequence's probability, so only the recorded detections matter.
    """
    m = len(seq)
    validate_run_size(config, m)
    if m == 0:
        return 1.0
    n = config.total
    nodes = quadrature_nodes(node_count or default_node_count(n))
    imb = nodes
    lam = nodes
    cos_imb = np.cos(imb)[:, None]
    integrand = _mesh_weight(config, m, imb)
    for record in seq:
        integrand = integrand * (
            cos_imb + record.outcome * np.cos(lam[None, :] - record.angle)
        )
    scale = Fraction(2 ** (n - m), math.comb(n, config.n_minus))
    return float(integrand.mean()) * float(scale)


def sequence_probability_table(
    config: ExperimentConfig,
    angles: Sequence[float],
    *,
    node_count: int | None = None,
) -> np.ndarray:
    """Probabilities of all 2**M outcome sequences at the given angles.

    Index order matches ``itertools.product((-1, +1), repeat=M)``: the
    first detection is the most significant bit, with bit 0 meaning -1.
    """
    wrapped = angles_tuple(angles)
    m = len(wrapped)
    validate_run_size(config, m)
    if m == 0:
        return np.ones(1)
    if m > MAX_TABLE_DETECTIONS:
        raise ValueError("outcome table grows as 2**M; request fewer detections")
    n = config.total
    nodes = quadrature_nodes(node_count or default_node_count(n))
    cos_imb = np.cos(nodes)[:, None]
    acc = _mesh_weight(config, m, nodes)[None, :, :]
    for angle in wrapped:
        cos_rel = np.cos(nodes[None, :] - angle)
        acc = np.stack([acc * (cos_imb - cos_rel), acc * (cos_imb + cos_rel)], axis=1)
        acc = acc.reshape(-1, *acc.shape[-2:])
    scale = Fraction(2 ** (n - m), math.comb(n, config.n_minus))
    return acc.mean(axis=(1, 2)) * float(scale)


def _imbalance_ratio(config: ExperimentConfig, m: int) -> Fraction:
    """Imbalance-phase average of the traced weight, over the normalization.

    Zero whenever the leftover particle number cannot absorb the imbalance
    harmonic, which kills every correlation with M = N at unequal
    populations and every M = N - 1 correlation at equal ones.
    """
    n, d = config.total, config.imbalance
    k = n - m
    if (k + d) % 2 or abs(d) > k:
        return Fraction(0)
    return Fraction(
        math.comb(k, (k + d) // 2) * 2 ** (n - k),
        math.comb(n, config.n_minus),
    )


def correlation(
    query: CorrelationQuery, *, node_count: int | None = None
) -> float:
    """Expectation of the product of all M outcomes at the query's angles.

    The outcome sum factorizes the double average: the imbalance-phase part
    is a pure combinatorial ratio, and the relative-phase part is the
    circular average of the product of cosines of (lam - angle).
    """
    m = len(query)
    if m == 0:
        return 1.0
    ratio = _imbalance_ratio(query.config, m)
    if not ratio:
        return 0.0
    nodes = quadrature_nodes(
        node_count or default_node_count(query.config.total)
    )
    stack = np.asarray(query.angles)
    rel = np.prod(np.cos(nodes[None, :] - stack[:, None]), axis=0).mean()
    return float(ratio) * float(rel)


def correlation_batch(
    config: ExperimentConfig,
    angle_stack: np.ndarray,
    *,
    node_count: int | None = None,
) -> np.ndarray:
    """Vectorized ``correlation`` over rows of an (batch, M) angle array."""
    stack = np.atleast_2d(np.asarray(angle_stack, dtype=float))
    m = stack.shape[1]
    if m == 0:
        return np.ones(stack.shape[0])
    validate_run_size(config, m)
    ratio = _imbalance_ratio(config, m)
    if not ratio:
        return np.zeros(stack.shape[0])
    nodes = quadrature_nodes(node_count or default_node_count(config.total))
    out = np.empty(stack.shape[0])
    # Keep the (chunk, M, nodes) workspace around 20M floats.
    chunk = max(1, int(2e7 / (m * nodes.size)))
    for start in range(0, stack.shape[0], chunk):
        block = stack[start : start + chunk]
        prods = np.prod(
            np.cos(nodes[None, None, :] - block[:, :, None]), axis=1
        )
        out[start : start + chunk] = prods.mean(axis=1)
    return float(ratio) * out


@lru_cache(maxsize=512)
def _grouped_coefficients(n_total: int, alice_count: int) -> tuple[float, ...]:
    """Coefficients of sin(chi)**(2k) * cos(chi)**(P-2k) in the grouped sum.

    Exact rational arithmetic while the factorials stay cheap; log-gamma
    with one final exponential beyond that.  The coefficients all lie in
    (0, 1], so the exponential cannot overflow.
    """
    half = n_total // 2
    coeffs = []
    for k in range(alice_count // 2 + 1):
        if n_total <= 64:
            coeffs.append(
                float(
                    Fraction(
                        math.comb(alice_count, 2 * k)
                        * math.perm(2 * k, k)
                        * math.perm(half, k),
                        math.perm(n_total, 2 * k),
                    )
                )
            )
            continue
        log_coeff = (
            math.lgamma(half + 1)
            - math.lgamma(half - k + 1)
            + math.lgamma(alice_count + 1)
            - math.lgamma(k + 1)
            - math.lgamma(alice_count - 2 * k + 1)
            + math.lgamma(n_total - 2 * k + 1)
            - math.lgamma(n_total + 1)
        )
        coeffs.append(math.exp(log_coeff))
    return tuple(coeffs)


def closed_form_correlation(
    n_total: int, alice_count: int, chi: float
) -> float:
    """Grouped-angle correlation for a balanced state, all particles used.

    Alice detects ``alice_count`` particles at one angle, Bob the remaining
    ones at another, and ``chi`` is the angle difference.  The expectation
    is the combinatorial polynomial

        E(chi) = sum_k c_k * sin(chi)**(2k) * cos(chi)**(P - 2k),

    summed with compensated addition because the terms alternate in sign
    once cos(chi) < 0.  Agrees with ``correlation`` on the same angle
    multiset and is symmetric under P <-> N - P and chi -> -chi.
    """
    if n_total <= 0 or n_total % 2:
        raise ValueError("the grouped closed form needs a positive even total")
    if not 1 <= alice_count <= n_total:
        raise ValueError("alice_count must lie in 1..n_total")
    sin_sq = math.sin(chi) ** 2
    cos_chi = math.cos(chi)
    terms = [
        coeff * sin_sq**k * cos_chi ** (alice_count - 2 * k)
        for k, coeff in enumerate(_grouped_coefficients(n_total, alice_count))
    ]
    return math.fsum(terms)


def closed_form_correlation_grid(
    n_total: int, alice_count: int, chis: Iterable[float]
) -> np.ndarray:
    """``closed_form_correlation`` over an iterable of angle differences."""
    return np.array(
        [closed_form_correlation(n_total, alice_count, c) for c in chis]
    )

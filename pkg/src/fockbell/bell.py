"""BCHSH quantities for grouped detections, and their maximization.

Alice detects ``p_alice`` particles along one of two orientations, Bob the
remaining used particles along one of two others, and the Bell quantity

    Q = E(a, b) + E(a, b') + E(a', b) - E(a', b')

is assembled from exact correlations of the product of all outcomes.  Any
such correlation depends on the orientations only through their
difference, so the maximization over the three gauge-fixed angles reduces
to a difference table on a circular grid followed by simplex refinement.

A recurring structural fact, exploited and reported here: optimal settings
form a fan, the four orientations a', b, a, b' in arithmetic progression.
The landscape has a large symmetry group (global shifts, reflections,
half-turns of individual orientations when the matching detection count is
even, and role swaps within a side at odd counts compensated by a
half-turn on the partner side), so a raw optimizer output may be any image
of a fan under those maps; fan detection canonicalizes over the group and
keeps only images that provably leave Q unchanged.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .engine import (
    closed_form_correlation,
    correlation,
    correlation_batch,
)
from .types import (
    CorrelationQuery,
    ExperimentConfig,
    equal_split,
    wrap_angle,
)

CIRELSON_BOUND = 2.0 * math.sqrt(2.0)
CIRELSON_TOL = 1e-9
VIOLATION_TOL = 1e-8
FAN_PATTERN_TOL = 1e-4
# A symmetry image must reproduce Q to float accuracy; anything that
# actually changes the functional moves it by O(E) instead.
_FAN_Q_MATCH_TOL = 1e-6

_NM_OPTIONS = {
    "xatol": 1e-11,
    "fatol": 1e-13,
    "maxiter": 6000,
    "maxfev": 12000,
}


@dataclass(frozen=True)
class BipartiteSetting:
    """Alice's detection count and the four analyzer orientations."""

    p_alice: int
    angle_a: float
    angle_a_prime: float
    angle_b: float
    angle_b_prime: float

    def __post_init__(self) -> None:
        if self.p_alice < 1:
            raise ValueError("Alice needs at least one detection")
        for name in ("angle_a", "angle_a_prime", "angle_b", "angle_b_prime"):
            object.__setattr__(self, name, wrap_angle(float(getattr(self, name))))

    @property
    def angles(self) -> tuple[float, float, float, float]:
        return (
            self.angle_a,
            self.angle_a_prime,
            self.angle_b,
            self.angle_b_prime,
        )


@dataclass(frozen=True)
class BellReport:
    """One evaluated or optimized Bell quantity."""

    config: ExperimentConfig
    m_used: int
    optimal_setting: BipartiteSetting
    e_components: tuple[float, float, float, float]
    q_value: float
    is_fan: bool | None = None
    fan_spacing: float | None = None

    def __post_init__(self) -> None:
        e1, e2, e3, e4 = self.e_components
        if self.q_value != e1 + e2 + e3 - e4:
            raise ValueError("q_value must be assembled from its components")
        if abs(self.q_value) > CIRELSON_BOUND + CIRELSON_TOL:
            raise ValueError("Bell quantity exceeds the quantum bound")

    @property
    def violated(self) -> bool:
        return self.q_value > 2.0 + VIOLATION_TOL


def _resolve_m_used(config: ExperimentConfig, m_used: int | None) -> int:
    m = config.total if m_used is None else m_used
    if m > config.total:
        raise ValueError("cannot use more detections than particles")
    return m


def _resolve_method(
    config: ExperimentConfig, m_used: int, method: str
) -> str:
    if method == "auto":
        if config.imbalance == 0 and m_used == config.total:
            return "closed"
        return "quadrature"
    if method not in ("closed", "quadrature"):
        raise ValueError("method must be auto, closed, or quadrature")
    if method == "closed" and (config.imbalance or m_used != config.total):
        raise ValueError("closed form needs equal populations and full use")
    return method


def pair_energy(
    config: ExperimentConfig,
    p_alice: int,
    m_used: int | None = None,
    method: str = "auto",
) -> Callable[[float], float]:
    """Correlation of the grouped products as a function of angle difference.

    Alice's ``p_alice`` detections sit at one orientation and Bob's
    ``m_used - p_alice`` at the other; global gauge invariance makes the
    result a function of the difference alone.
    """
    m = _resolve_m_used(config, m_used)
    if not 1 <= p_alice < m:
        raise ValueError("need 1 <= p_alice < m_used detections")
    resolved = _resolve_method(config, m, method)
    if resolved == "closed":
        n = config.total
        return lambda chi: closed_form_correlation(n, p_alice, chi)

    def energy(chi: float) -> float:
        angles = (0.0,) * p_alice + (-chi,) * (m - p_alice)
        return correlation(CorrelationQuery(config, angles))

    return energy


def bchsh_value(
    config: ExperimentConfig,
    setting: BipartiteSetting,
    m_used: int | None = None,
    *,
    method: str = "auto",
) -> BellReport:
    """Assemble Q from the four grouped correlations at a fixed setting."""
    m = _resolve_m_used(config, m_used)
    if setting.p_alice >= m:
        raise ValueError("Bob needs at least one detection")
    energy = pair_energy(config, setting.p_alice, m, method)
    a, ap, b, bp = setting.angles
    components = (
        energy(a - b),
        energy(a - bp),
        energy(ap - b),
        energy(ap - bp),
    )
    e1, e2, e3, e4 = components
    return BellReport(
        config=config,
        m_used=m,
        optimal_setting=setting,
        e_components=components,
        q_value=e1 + e2 + e3 - e4,
    )


def _q_from_energy(
    energy: Callable[[float], float],
    a: float,
    ap: float,
    b: float,
    bp: float,
) -> float:
    return energy(a - b) + energy(a - bp) + energy(ap - b) - energy(ap - bp)


def _circular_spread(diffs: Sequence[float]) -> tuple[float, float]:
    """Mean direction of a few nearby differences and the worst deviation."""
    mean = math.atan2(
        math.fsum(math.sin(d) for d in diffs),
        math.fsum(math.cos(d) for d in diffs),
    )
    spread = max(abs(math.remainder(d - mean, math.tau)) for d in diffs)
    return mean, spread


def _fan_analysis(
    energy: Callable[[float], float],
    angles: tuple[float, float, float, float],
    q_ref: float,
) -> tuple[bool, float | None]:
    """Detect the fan pattern among all Q-preserving images of a setting.

    Tries every combination of half-turns on the four orientations and of
    role swaps a<->a' and b<->b', keeps the images whose Q matches the
    reference numerically, and tests whether the ordered differences
    (a'-b, b-a, a-b') agree within the pattern tolerance.  Reports the
    smallest spacing magnitude among matching images.
    """
    a0, ap0, b0, bp0 = angles
    best: float | None = None
    for swap_alice in (False, True):
        for swap_bob in (False, True):
            base_a, base_ap = (ap0, a0) if swap_alice else (a0, ap0)
            base_b, base_bp = (bp0, b0) if swap_bob else (b0, bp0)
            for shifts in itertools.product((0.0, math.pi), repeat=4):
                a = base_a + shifts[0]
                ap = base_ap + shifts[1]
                b = base_b + shifts[2]
                bp = base_bp + shifts[3]
                if abs(_q_from_energy(energy, a, ap, b, bp) - q_ref) > _FAN_Q_MATCH_TOL:
                    continue
                diffs = (
                    wrap_angle(ap - b),
                    wrap_angle(b - a),
                    wrap_angle(a - bp),
                )
                mean, spread = _circular_spread(diffs)
                if spread > FAN_PATTERN_TOL:
                    continue
                spacing = abs(mean)
                if best is None or spacing < best:
                    best = spacing
    return best is not None, best


def _best_fan(energy: Callable[[float], float]) -> tuple[float, float]:
    """Best fan configuration by a fine 1D scan plus golden refinement.

    In a fan with spacing chi the Bell quantity collapses to
    3 * E(chi) - E(3 chi).
    """

    def fan_q(chi: float) -> float:
        return 3.0 * energy(chi) - energy(3.0 * chi)

    grid = np.arange(2048) * (math.tau / 2048) - math.pi
    values = [fan_q(chi) for chi in grid]
    peak = int(np.argmax(values))
    step = math.tau / 2048
    lo, hi = grid[peak] - step, grid[peak] + step
    inv_golden = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - inv_golden * (hi - lo)
    d = lo + inv_golden * (hi - lo)
    fc, fd = fan_q(c), fan_q(d)
    while hi - lo > 1e-10:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - inv_golden * (hi - lo)
            fc = fan_q(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv_golden * (hi - lo)
            fd = fan_q(d)
    chi = 0.5 * (lo + hi)
    return chi, fan_q(chi)


def _grid_candidates(
    energy: Callable[[float], float], n_grid: int, keep: int
) -> list[tuple[float, np.ndarray]]:
    """Top Q values over the gauge-fixed angle grid, deduplicated.

    With a = 0, Q over grid indices (i, j, k) for (a', b, b') only needs
    the difference table, evaluated in chunks to bound memory.
    """
    grid = np.arange(n_grid) * (math.tau / n_grid)
    table = np.array([energy(chi) for chi in grid])
    to_b = table[(-np.arange(n_grid)) % n_grid]
    idx = np.arange(n_grid)
    candidates: list[tuple[float, int]] = []
    chunk = max(1, int(4e6 / (n_grid * n_grid)))
    for start in range(0, n_grid, chunk):
        rows = idx[start : start + chunk]
        diff = table[(rows[:, None] - idx[None, :]) % n_grid]
        block = (
            to_b[None, :, None]
            + to_b[None, None, :]
            + diff[:, :, None]
            - diff[:, None, :]
        )
        flat = block.reshape(block.shape[0], -1)
        take = min(4 * keep, flat.shape[1])
        for row, offset in zip(flat, rows):
            top = np.argpartition(row, -take)[-take:]
            for t in top:
                candidates.append((float(row[t]), int(offset) * n_grid * n_grid + int(t)))
    candidates.sort(key=lambda item: (-item[0], item[1]))
    step = math.tau / n_grid
    kept: list[tuple[float, np.ndarray]] = []
    for value, flat_index in candidates:
        i, rem = divmod(flat_index, n_grid * n_grid)
        j, k = divmod(rem, n_grid)
        point = np.array([grid[i], grid[j], grid[k]])
        if any(
            max(
                abs(math.remainder(x - y, math.tau))
                for x, y in zip(point, other)
            )
            < 1.5 * step
            for _, other in kept
        ):
            continue
        kept.append((value, point))
        if len(kept) >= keep:
            break
    return kept


def maximize_bchsh(
    config: ExperimentConfig,
    p_alice: int,
    *,
    m_used: int | None = None,
    method: str = "auto",
    grid_points: int | None = None,
    refine_starts: int = 8,
    jitter_rounds: int = 2,
    seed: int = 7,
) -> BellReport:
    """Maximize Q over orientations with the gauge angle_a = 0.

    Coarse circular grid over the three free angles, simplex refinement of
    the leading candidates, followed by seeded jitter restarts around the
    winner.  The best fan configuration is always among the starting
    points, so the result can never fall below it.  The report carries the
    fan analysis of the optimal setting.
    """
    m = _resolve_m_used(config, m_used)
    if not 1 <= p_alice < m:
        raise ValueError("need 1 <= p_alice < m_used detections")
    resolved = _resolve_method(config, m, method)
    energy = pair_energy(config, p_alice, m, resolved)
    n_grid = grid_points if grid_points is not None else (
        256 if resolved == "closed" else 96
    )
    if n_grid < 64:
        raise ValueError("grid needs at least 64 points per angle")

    def neg_q(x: np.ndarray) -> float:
        return -_q_from_energy(energy, 0.0, x[0], x[1], x[2])

    starts = [point for _, point in _grid_candidates(energy, n_grid, refine_starts)]
    fan_chi, _ = _best_fan(energy)
    starts.append(np.array([2.0 * fan_chi, fan_chi, -fan_chi]))
    best_x: np.ndarray | None = None
    best_q = -math.inf
    for x0 in starts:
        result = minimize(neg_q, x0, method="Nelder-Mead", options=_NM_OPTIONS)
        if -result.fun > best_q:
            best_q = -result.fun
            best_x = result.x
    rng = np.random.default_rng(seed)
    for _ in range(jitter_rounds):
        x0 = best_x + rng.normal(scale=0.02, size=3)
        result = minimize(neg_q, x0, method="Nelder-Mead", options=_NM_OPTIONS)
        if -result.fun > best_q:
            best_q = -result.fun
            best_x = result.x
    setting = BipartiteSetting(p_alice, 0.0, *(float(v) for v in best_x))
    report = bchsh_value(config, setting, m, method=resolved)
    is_fan, spacing = _fan_analysis(energy, setting.angles, report.q_value)
    return replace(report, is_fan=is_fan, fan_spacing=spacing)


def no_violation_scan(
    config: ExperimentConfig,
    p_alice: int,
    m_used: int,
    *,
    grid_points: int | None = None,
    seed: int = 7,
) -> BellReport:
    """Maximal Q in the regimes where no Bell violation should survive.

    Covers incomplete detection (m_used below the particle total at equal
    populations) and unequal populations at full detection.  Returns the
    optimizer's report; callers assert the q_value stays at or below the
    local-realist bound.
    """
    return maximize_bchsh(
        config,
        p_alice,
        m_used=m_used,
        grid_points=grid_points,
        seed=seed,
    )


@dataclass(frozen=True)
class SweepRow:
    """One point of the Qmax landscape over (N, P)."""

    n_total: int
    p_alice: int
    q_max: float
    chi_a: float
    chi_b: float
    fan_spacing: float | None
    violated: bool


def resolve_partition_token(token: int | str, n_total: int) -> int | None:
    """Interpret a partition rule for a given total; None when inapplicable."""
    if isinstance(token, str):
        text = token.strip()
        if text.upper() == "N/2":
            value = n_total // 2
        else:
            value = int(text)
    else:
        value = int(token)
    if 1 <= value <= n_total - 1:
        return value
    return None


def figure1_sweep(
    max_n: int,
    partition_tokens: Sequence[int | str],
    *,
    grid_points: int | None = None,
    seed: int = 7,
) -> list[SweepRow]:
    """Qmax over balanced configurations N = 2, 4, ..., max_n.

    Each partition token is resolved per N ("N/2" tracks the balanced
    split); duplicate (N, P) pairs are computed once.
    """
    if max_n < 2:
        raise ValueError("max_n must be at least 2")
    rows = []
    for n_total in range(2, max_n + 1, 2):
        config = equal_split(n_total)
        partitions = sorted(
            {
                p
                for token in partition_tokens
                for p in [resolve_partition_token(token, n_total)]
                if p is not None
            }
        )
        for p_alice in partitions:
            report = maximize_bchsh(
                config, p_alice, grid_points=grid_points, seed=seed
            )
            setting = report.optimal_setting
            rows.append(
                SweepRow(
                    n_total=n_total,
                    p_alice=p_alice,
                    q_max=report.q_value,
                    chi_a=wrap_angle(setting.angle_a_prime - setting.angle_a),
                    chi_b=wrap_angle(setting.angle_b_prime - setting.angle_b),
                    fan_spacing=report.fan_spacing,
                    violated=report.violated,
                )
            )
    return rows


@dataclass(frozen=True)
class MultipartyReport:
    """Four-party optimization compared against its bipartite reduction.

    ``q_value`` and ``party_angles`` describe the reported optimum:
    whenever the collapsed configuration (Carole sharing Alice's
    orientations, David sharing Bob's) reaches the free-search maximum, it
    is the reported representative, since the optimum is degenerate along
    symmetry directions and any representative is equally optimal.
    ``q_free_search`` preserves the unconstrained search result so the
    equality is auditable.
    """

    config: ExperimentConfig
    counts: tuple[int, int, int, int]
    q_value: float
    party_angles: tuple[tuple[float, float], ...]
    bipartite: BellReport
    q_free_search: float
    collapse_distance_carole: float
    collapse_distance_david: float
    collapsed: bool


def multiparty_value(
    config: ExperimentConfig,
    counts: Sequence[int],
    party_angles: Sequence[Sequence[float]],
) -> float:
    """Bell quantity for four parties on the (Alice+Carole) bipartition.

    Parties are (Alice, Bob, Carole, David) with two orientations each;
    Carole's orientation index is linked to Alice's and David's to Bob's,
    giving 2 x 2 effective settings whose correlations enter the usual
    BCHSH combination.
    """
    n_a, n_b, n_c, n_d = _validate_counts(config, counts)
    (a0, a1), (b0, b1), (c0, c1), (d0, d1) = (
        (float(p[0]), float(p[1])) for p in party_angles
    )
    alice = (a0, a1)
    bob = (b0, b1)
    carole = (c0, c1)
    david = (d0, d1)

    def effective(x: int, y: int) -> float:
        angles = (
            (alice[x],) * n_a
            + (carole[x],) * n_c
            + (bob[y],) * n_b
            + (david[y],) * n_d
        )
        return correlation(CorrelationQuery(config, angles))

    return effective(0, 0) + effective(0, 1) + effective(1, 0) - effective(1, 1)


def _validate_counts(
    config: ExperimentConfig, counts: Sequence[int]
) -> tuple[int, int, int, int]:
    if len(counts) != 4:
        raise ValueError("need exactly four party counts")
    quad = tuple(int(c) for c in counts)
    if any(c < 0 for c in quad):
        raise ValueError("party counts must be non-negative")
    if sum(quad) != config.total:
        raise ValueError("party counts must sum to the particle total")
    if quad[0] + quad[2] < 1 or quad[1] + quad[3] < 1:
        raise ValueError("each side of the bipartition needs a detection")
    return quad


def _batched_multiparty_q(
    config: ExperimentConfig,
    counts: tuple[int, int, int, int],
    samples: np.ndarray,
) -> np.ndarray:
    """Q for a (batch, 7) array of gauge-fixed free angles."""
    n_a, n_b, n_c, n_d = counts
    batch = samples.shape[0]
    full = np.concatenate([np.zeros((batch, 1)), samples], axis=1)
    a = full[:, 0:2]
    b = full[:, 2:4]
    c = full[:, 4:6]
    d = full[:, 6:8]
    q = np.zeros(batch)
    for x, y, sign in ((0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -1.0)):
        angle_stack = np.concatenate(
            [
                np.repeat(a[:, x : x + 1], n_a, axis=1),
                np.repeat(c[:, x : x + 1], n_c, axis=1),
                np.repeat(b[:, y : y + 1], n_b, axis=1),
                np.repeat(d[:, y : y + 1], n_d, axis=1),
            ],
            axis=1,
        )
        q += sign * correlation_batch(config, angle_stack)
    return q


def _collapse_distance(
    party: tuple[float, float], references: Sequence[float], count: int
) -> float:
    """Largest circular distance from a party's orientations to the references."""
    if count == 0:
        return 0.0
    distances = []
    for angle in party:
        distances.append(
            min(abs(math.remainder(angle - ref, math.tau)) for ref in references)
        )
    return max(distances)


def multiparty_collapse(
    config: ExperimentConfig,
    counts: Sequence[int],
    *,
    seed: int = 11,
    n_scan: int = 20000,
    refine_starts: int = 12,
) -> MultipartyReport:
    """Optimize the four-party Bell quantity and test angle collapse.

    Runs an unconstrained multi-start search over the seven free angles,
    then evaluates the collapsed candidate built from the bipartite optimum
    at the effective partition (Alice+Carole detections versus the rest).
    The optimum is degenerate along continuous symmetry directions, so
    matching values rather than raw angles is the meaningful comparison;
    when the collapsed candidate attains the free-search value, it becomes
    the reported representative.
    """
    quad = _validate_counts(config, counts)
    n_a, n_b, n_c, n_d = quad
    p_effective = n_a + n_c

    rng = np.random.default_rng(seed)
    samples = rng.uniform(-math.pi, math.pi, size=(n_scan, 7))
    q_scan = _batched_multiparty_q(config, quad, samples)
    order = np.argsort(-q_scan)[:refine_starts]

    def neg_q(x: np.ndarray) -> float:
        pairs = (
            (0.0, x[0]),
            (x[1], x[2]),
            (x[3], x[4]),
            (x[5], x[6]),
        )
        return -multiparty_value(config, quad, pairs)

    best_q = -math.inf
    best_x: np.ndarray | None = None
    for start_index in order:
        result = minimize(
            neg_q,
            samples[start_index],
            method="Nelder-Mead",
            options=_NM_OPTIONS,
        )
        if -result.fun > best_q:
            best_q = -result.fun
            best_x = result.x
    q_free = best_q

    bipartite = maximize_bchsh(config, p_effective, seed=seed)
    ref = bipartite.optimal_setting
    collapsed_angles = (
        (ref.angle_a, ref.angle_a_prime),
        (ref.angle_b, ref.angle_b_prime),
        (ref.angle_a, ref.angle_a_prime),
        (ref.angle_b, ref.angle_b_prime),
    )
    q_collapsed = multiparty_value(config, quad, collapsed_angles)

    if q_collapsed >= q_free - 1e-9:
        angles = collapsed_angles
        q_value = q_collapsed
    else:
        x = best_x
        angles = (
            (0.0, float(x[0])),
            (float(x[1]), float(x[2])),
            (float(x[3]), float(x[4])),
            (float(x[5]), float(x[6])),
        )
        q_value = q_free
    if abs(q_value) > CIRELSON_BOUND + CIRELSON_TOL:
        raise ValueError("Bell quantity exceeds the quantum bound")

    references = ref.angles
    dist_carole = _collapse_distance(angles[2], references, n_c)
    dist_david = _collapse_distance(angles[3], references, n_d)
    return MultipartyReport(
        config=config,
        counts=quad,
        q_value=q_value,
        party_angles=tuple(
            (wrap_angle(p[0]), wrap_angle(p[1])) for p in angles
        ),
        bipartite=bipartite,
        q_free_search=q_free,
        collapse_distance_carole=dist_carole,
        collapse_distance_david=dist_david,
        collapsed=bool(
            q_collapsed >= q_free - 1e-9
            and dist_carole <= 1e-3
            and dist_david <= 1e-3
        ),
    )

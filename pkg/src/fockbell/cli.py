"""Command-line surface over the engine, sampler, and Bell optimizer.

Every run prints one JSON record {command, inputs, outputs, checks,
version} to stdout; table-like results additionally go to CSV files and
the sweep plot to SVG.  Angles are radians unless --degrees is given.
Numeric output uses 17 significant digits, so artifacts re-parse to the
exact in-memory doubles and reruns are byte-identical.  The environment
variable FOCKBELL_SEED, when set, overrides any --seed flag.

Exit status: 0 on success, 1 when self-check finds a failure, 2 on
validation errors (accompanied by a JSON error record on stderr).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .bell import (
    CIRELSON_BOUND,
    VIOLATION_TOL,
    figure1_sweep,
    maximize_bchsh,
    multiparty_collapse,
    no_violation_scan,
)
from .engine import (
    closed_form_correlation,
    correlation,
    default_node_count,
    normalization_constant,
    quadrature_nodes,
    sequence_probability,
    sequence_probability_table,
)
from .oracle import oracle_probability_table, oracle_sequence_probability
from .plotting import render_figure1
from .reporting import (
    dump_record,
    emergence_to_csv,
    run_record,
    sweep_to_csv,
    trajectories_to_csv,
)
from .sampler import (
    child_seeds,
    phase_emergence_curve,
    sample_trajectory,
    trajectory_rows,
)
from .types import (
    CorrelationQuery,
    ExperimentConfig,
    as_sequence,
    equal_split,
)

Handler = Callable[[argparse.Namespace], tuple[dict, dict, dict, int]]


def _parse_floats(text: str) -> list[float]:
    if not text.strip():
        raise ValueError("expected a comma-separated list of numbers")
    return [float(token) for token in text.split(",")]


def _parse_outcomes(text: str) -> list[int]:
    outcomes = []
    for token in text.split(","):
        value = int(token)
        if value not in (-1, 1):
            raise ValueError("outcomes must be +1 or -1")
        outcomes.append(value)
    return outcomes


def _parse_partition_tokens(text: str) -> list[int | str]:
    tokens: list[int | str] = []
    for token in text.split(","):
        token = token.strip()
        if token.upper() == "N/2":
            tokens.append("N/2")
        else:
            tokens.append(int(token))
    if not tokens:
        raise ValueError("expected at least one partition rule")
    return tokens


def _to_radians(values: Sequence[float], degrees: bool) -> list[float]:
    if degrees:
        return [math.radians(v) for v in values]
    return list(values)


def _config_from(args: argparse.Namespace) -> ExperimentConfig:
    n_total = getattr(args, "n", None)
    if n_total is not None:
        if getattr(args, "n_plus", None) is not None or getattr(
            args, "n_minus", None
        ) is not None:
            raise ValueError("give either --n or --n-plus/--n-minus, not both")
        return equal_split(n_total)
    n_plus = getattr(args, "n_plus", None)
    n_minus = getattr(args, "n_minus", None)
    if n_plus is None or n_minus is None:
        raise ValueError("population counts are required")
    return ExperimentConfig(n_plus, n_minus)


def _setting_outputs(setting) -> dict:
    return {
        "angle_a": setting.angle_a,
        "angle_a_prime": setting.angle_a_prime,
        "angle_b": setting.angle_b,
        "angle_b_prime": setting.angle_b_prime,
    }


def cmd_prob(args: argparse.Namespace) -> tuple[dict, dict, dict, int]:
    config = _config_from(args)
    angles = _to_radians(_parse_floats(args.angles), args.degrees)
    outcomes = _parse_outcomes(args.outcomes)
    seq = as_sequence(angles, outcomes)
    probability = sequence_probability(config, seq)
    checks = {
        "within_unit_interval": -1e-12 <= probability <= 1.0 + 1e-12,
    }
    if config.total <= 12:
        checks["oracle_gap"] = abs(
            probability - oracle_sequence_probability(config, seq)
        )
    inputs = {
        "n_plus": config.n_plus,
        "n_minus": config.n_minus,
        "angles": list(seq.angles),
        "outcomes": list(seq.outcomes),
    }
    return inputs, {"probability": probability}, checks, 0


def cmd_correlate(args: argparse.Namespace) -> tuple[dict, dict, dict, int]:
    config = _config_from(args)
    angles = _to_radians(_parse_floats(args.angles), args.degrees)
    query = CorrelationQuery(config, tuple(angles))
    value = correlation(query)
    inputs = {
        "n_plus": config.n_plus,
        "n_minus": config.n_minus,
        "angles": list(query.angles),
    }
    checks = {"within_bounds": abs(value) <= 1.0 + 1e-12}
    return inputs, {"correlation": value}, checks, 0


def cmd_closed_form(args: argparse.Namespace) -> tuple[dict, dict, dict, int]:
    chi = _to_radians([args.chi], args.degrees)[0]
    value = closed_form_correlation(args.n, args.p, chi)
    checks: dict = {}
    if args.n <= 20:
        config = equal_split(args.n)
        angles = (chi,) * args.p + (0.0,) * (args.n - args.p)
        checks["quadrature_gap"] = abs(
            value - correlation(CorrelationQuery(config, angles))
        )
    inputs = {"n": args.n, "p": args.p, "chi": chi}
    return inputs, {"correlation": value}, checks, 0


def cmd_sample(args: argparse.Namespace) -> tuple[dict, dict, dict, int]:
    config = _config_from(args)
    angles = _to_radians(_parse_floats(args.angles), args.degrees)
    if args.trajectories < 1:
        raise ValueError("need at least one trajectory")
    rows = []
    first_plus = 0
    for tid, seed in enumerate(child_seeds(args.seed, args.trajectories)):
        trajectory = sample_trajectory(config, angles, seed)
        rows.extend(trajectory_rows(trajectory, tid))
        if trajectory.records.outcomes[0] == 1:
            first_plus += 1
    n_rows = trajectories_to_csv(rows, args.csv)
    inputs = {
        "n_plus": config.n_plus,
        "n_minus": config.n_minus,
        "angles": angles,
        "trajectories": args.trajectories,
        "seed": args.seed,
    }
    outputs = {
        "csv_path": args.csv,
        "n_rows": n_rows,
        "first_outcome_plus_frequency": first_plus / args.trajectories,
    }
    return inputs, outputs, {}, 0


def _parse_policy(text: str, degrees: bool):
    if text == "alternating":
        return None
    return _to_radians(_parse_floats(text), degrees)


def cmd_emergence(args: argparse.Namespace) -> tuple[dict, dict, dict, int]:
    config = _config_from(args)
    policy = _parse_policy(args.policy, args.degrees)
    points = phase_emergence_curve(
        config, args.steps, args.trajectories, args.seed, policy
    )
    emergence_to_csv(points, args.csv)
    resultants = [point.mean_resultant for point in points]
    max_dip = max(
        [0.0]
        + [resultants[i] - resultants[i + 1] for i in range(len(resultants) - 1)]
    )
    inputs = {
        "n_plus": config.n_plus,
        "n_minus": config.n_minus,
        "steps": args.steps,
        "trajectories": args.trajectories,
        "seed": args.seed,
        "policy": args.policy,
    }
    outputs = {
        "csv_path": args.csv,
        "final_mean_concentration": points[-1].mean_concentration,
        "final_mean_resultant": points[-1].mean_resultant,
    }
    return inputs, outputs, {"max_resultant_dip": max_dip}, 0


def cmd_maximize(args: argparse.Namespace) -> tuple[dict, dict, dict, int]:
    config = _config_from(args)
    report = maximize_bchsh(
        config,
        args.p,
        m_used=args.m_used,
        method=args.method,
        grid_points=args.grid,
        seed=args.seed,
    )
    inputs = {
        "n_plus": config.n_plus,
        "n_minus": config.n_minus,
        "p": args.p,
        "m_used": report.m_used,
        "method": args.method,
        "seed": args.seed,
    }
    outputs = {
        "q_max": report.q_value,
        **_setting_outputs(report.optimal_setting),
        "e_components": list(report.e_components),
        "is_fan": report.is_fan,
        "fan_spacing": report.fan_spacing,
        "violated": report.violated,
    }
    checks = {
        "cirelson_ok": abs(report.q_value) <= CIRELSON_BOUND + 1e-9,
    }
    return inputs, outputs, checks, 0


def cmd_figure1(args: argparse.Namespace) -> tuple[dict, dict, dict, int]:
    tokens = _parse_partition_tokens(args.p)
    rows = figure1_sweep(
        args.max_n, tokens, grid_points=args.grid, seed=args.seed
    )
    n_rows = sweep_to_csv(rows, args.csv)
    if args.svg:
        render_figure1(rows, tokens, args.svg, log_x=not args.linear_x)
    p1_gaps = [
        abs(row.q_max - CIRELSON_BOUND) for row in rows if row.p_alice == 1
    ]
    inputs = {"max_n": args.max_n, "p": args.p, "seed": args.seed}
    outputs = {
        "csv_path": args.csv,
        "svg_path": args.svg,
        "n_rows": n_rows,
    }
    checks = {}
    if p1_gaps:
        checks["p1_saturates_cirelson"] = max(p1_gaps) <= 1e-8
    return inputs, outputs, checks, 0


def cmd_scan_no_violation(
    args: argparse.Namespace,
) -> tuple[dict, dict, dict, int]:
    config = _config_from(args)
    report = no_violation_scan(
        config,
        args.p,
        args.m_used,
        grid_points=args.grid,
        seed=args.seed,
    )
    bound_ok = report.q_value <= 2.0 + VIOLATION_TOL
    inputs = {
        "n_plus": config.n_plus,
        "n_minus": config.n_minus,
        "p": args.p,
        "m_used": args.m_used,
        "seed": args.seed,
    }
    outputs = {
        "q_max": report.q_value,
        **_setting_outputs(report.optimal_setting),
        "bound_satisfied": bound_ok,
    }
    return inputs, outputs, {"no_violation": bound_ok}, 0


def cmd_multiparty(args: argparse.Namespace) -> tuple[dict, dict, dict, int]:
    config = _config_from(args)
    counts = [int(token) for token in args.counts.split(",")]
    report = multiparty_collapse(
        config,
        counts,
        seed=args.seed,
        n_scan=args.scan,
        refine_starts=args.starts,
    )
    inputs = {
        "n_plus": config.n_plus,
        "n_minus": config.n_minus,
        "counts": list(report.counts),
        "seed": args.seed,
        "scan": args.scan,
        "starts": args.starts,
    }
    outputs = {
        "q_value": report.q_value,
        "q_free_search": report.q_free_search,
        "bipartite_q_max": report.bipartite.q_value,
        "party_angles": [list(pair) for pair in report.party_angles],
        "collapse_distance_carole": report.collapse_distance_carole,
        "collapse_distance_david": report.collapse_distance_david,
        "collapsed": report.collapsed,
    }
    checks = {
        "within_bipartite": report.q_value
        <= report.bipartite.q_value + 1e-6,
        "cirelson_ok": abs(report.q_value) <= CIRELSON_BOUND + 1e-9,
    }
    return inputs, outputs, checks, 0


def _self_checks() -> list[tuple[str, Callable[[], bool]]]:
    rng = np.random.default_rng(20260819)

    def normalization_closed_form() -> bool:
        return (
            abs(normalization_constant(ExperimentConfig(1, 1)) - 0.5) < 1e-15
            and abs(normalization_constant(ExperimentConfig(2, 0)) - 0.25) < 1e-15
            and normalization_constant(ExperimentConfig(0, 0)) == 1.0
        )

    def normalization_matches_quadrature() -> bool:
        for n_plus in range(0, 5):
            for n_minus in range(0, 5):
                config = ExperimentConfig(n_plus, n_minus)
                nodes = quadrature_nodes(default_node_count(config.total))
                direct = float(
                    np.mean(
                        np.cos(config.imbalance * nodes)
                        * np.cos(nodes) ** config.total
                    )
                )
                expected = normalization_constant(config)
                if abs(direct - expected) > 1e-12 * max(1.0, abs(expected)):
                    return False
        return True

    def two_particle_probability() -> bool:
        config = ExperimentConfig(1, 1)
        seq = as_sequence([0.0, 0.7], [1, 1])
        expected = (1.0 + math.cos(0.7)) / 4.0
        engine_gap = abs(sequence_probability(config, seq) - expected)
        oracle_gap = abs(oracle_sequence_probability(config, seq) - expected)
        return engine_gap < 1e-12 and oracle_gap < 1e-12

    def singlet_correlation() -> bool:
        config = ExperimentConfig(1, 1)
        for _ in range(5):
            a, b = rng.uniform(-math.pi, math.pi, size=2)
            value = correlation(CorrelationQuery(config, (a, b)))
            if abs(value - math.cos(a - b)) > 1e-10:
                return False
        return True

    def oracle_engine_agreement() -> bool:
        for n_plus, n_minus in ((1, 1), (2, 1), (3, 3), (4, 0)):
            config = ExperimentConfig(n_plus, n_minus)
            m = min(3, config.total)
            angles = rng.uniform(-math.pi, math.pi, size=m)
            engine_table = sequence_probability_table(config, angles)
            oracle_table = oracle_probability_table(config, list(angles))
            if np.max(np.abs(engine_table - oracle_table)) > 1e-10:
                return False
            if abs(engine_table.sum() - 1.0) > 1e-12:
                return False
        return True

    def grouped_closed_form_identity() -> bool:
        n_total = 10
        for chi in rng.uniform(-math.pi, math.pi, size=10):
            expected = 0.5 * (
                1.0 + 1.0 / (n_total - 1)
                + (1.0 - 1.0 / (n_total - 1)) * math.cos(2 * chi)
            )
            if abs(closed_form_correlation(n_total, 2, chi) - expected) > 1e-12:
                return False
        return True

    def cirelson_saturation() -> bool:
        report = maximize_bchsh(ExperimentConfig(1, 1), 1)
        return (
            abs(report.q_value - CIRELSON_BOUND) <= 1e-8
            and report.fan_spacing is not None
            and abs(report.fan_spacing - math.pi / 4) <= 1e-5
        )

    def sampler_determinism() -> bool:
        config = ExperimentConfig(3, 3)
        angles = [0.0, math.pi / 2, 0.3, 1.1]
        first = sample_trajectory(config, angles, 424242)
        second = sample_trajectory(config, angles, 424242)
        return first.records == second.records

    def quadrature_node_doubling() -> bool:
        config = ExperimentConfig(2, 2)
        seq = as_sequence([0.1, 0.9, 2.0], [1, -1, 1])
        base = sequence_probability(config, seq)
        doubled = sequence_probability(
            config, seq, node_count=2 * default_node_count(config.total)
        )
        return abs(base - doubled) <= 1e-13

    return [
        ("normalization_closed_form", normalization_closed_form),
        ("normalization_matches_quadrature", normalization_matches_quadrature),
        ("two_particle_probability", two_particle_probability),
        ("singlet_correlation", singlet_correlation),
        ("oracle_engine_agreement", oracle_engine_agreement),
        ("grouped_closed_form_identity", grouped_closed_form_identity),
        ("cirelson_saturation", cirelson_saturation),
        ("sampler_determinism", sampler_determinism),
        ("quadrature_node_doubling", quadrature_node_doubling),
    ]


def cmd_self_check(args: argparse.Namespace) -> tuple[dict, dict, dict, int]:
    passed, failed = [], []
    for name, check in _self_checks():
        try:
            ok = check()
        except Exception:
            ok = False
        (passed if ok else failed).append(name)
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    outputs = {"passed": passed, "failed": failed}
    checks = {"all_passed": not failed}
    return {}, outputs, checks, 0 if not failed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fockbell",
        description=(
            "Exact spin-measurement statistics and Bell tests for double "
            "Fock states of two-component condensates."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_populations(command: argparse.ArgumentParser) -> None:
        command.add_argument("--n-plus", type=int, default=None)
        command.add_argument("--n-minus", type=int, default=None)

    prob = sub.add_parser("prob", help="probability of an outcome sequence")
    add_populations(prob)
    prob.add_argument("--angles", required=True)
    prob.add_argument("--outcomes", required=True)
    prob.add_argument("--degrees", action="store_true")
    prob.set_defaults(handler=cmd_prob)

    corr = sub.add_parser("correlate", help="product-of-outcomes expectation")
    add_populations(corr)
    corr.add_argument("--angles", required=True)
    corr.add_argument("--degrees", action="store_true")
    corr.set_defaults(handler=cmd_correlate)

    closed = sub.add_parser(
        "closed-form", help="grouped correlation from the combinatorial sum"
    )
    closed.add_argument("--n", type=int, required=True)
    closed.add_argument("--p", type=int, required=True)
    closed.add_argument("--chi", type=float, required=True)
    closed.add_argument("--degrees", action="store_true")
    closed.set_defaults(handler=cmd_closed_form)

    sample = sub.add_parser("sample", help="draw measurement trajectories")
    add_populations(sample)
    sample.add_argument("--angles", required=True)
    sample.add_argument("--trajectories", type=int, default=1)
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--degrees", action="store_true")
    sample.add_argument("--csv", required=True)
    sample.set_defaults(handler=cmd_sample)

    emergence = sub.add_parser(
        "emergence", help="trajectory-averaged phase emergence curve"
    )
    add_populations(emergence)
    emergence.add_argument("--steps", type=int, required=True)
    emergence.add_argument("--trajectories", type=int, required=True)
    emergence.add_argument("--seed", type=int, default=0)
    emergence.add_argument("--policy", default="alternating")
    emergence.add_argument("--degrees", action="store_true")
    emergence.add_argument("--csv", required=True)
    emergence.set_defaults(handler=cmd_emergence)

    maximize = sub.add_parser("maximize", help="maximize the Bell quantity")
    maximize.add_argument("--n", type=int, default=None)
    add_populations(maximize)
    maximize.add_argument("--p", type=int, required=True)
    maximize.add_argument("--m-used", type=int, default=None)
    maximize.add_argument(
        "--method", choices=("auto", "closed", "quadrature"), default="auto"
    )
    maximize.add_argument("--grid", type=int, default=None)
    maximize.add_argument("--seed", type=int, default=7)
    maximize.set_defaults(handler=cmd_maximize)

    figure1 = sub.add_parser(
        "figure1", help="sweep Qmax over N and partition rules"
    )
    figure1.add_argument("--max-n", type=int, required=True)
    figure1.add_argument("--p", required=True, help="e.g. 1,2,N/2")
    figure1.add_argument("--grid", type=int, default=None)
    figure1.add_argument("--seed", type=int, default=7)
    figure1.add_argument("--csv", required=True)
    figure1.add_argument("--svg", default=None)
    figure1.add_argument("--linear-x", action="store_true")
    figure1.set_defaults(handler=cmd_figure1)

    scan = sub.add_parser(
        "scan-no-violation",
        help="maximal Q in regimes where no violation should survive",
    )
    add_populations(scan)
    scan.add_argument("--p", type=int, required=True)
    scan.add_argument("--m-used", type=int, required=True)
    scan.add_argument("--grid", type=int, default=None)
    scan.add_argument("--seed", type=int, default=7)
    scan.set_defaults(handler=cmd_scan_no_violation)

    multi = sub.add_parser(
        "multiparty", help="four-party optimum and angle collapse"
    )
    add_populations(multi)
    multi.add_argument(
        "--counts", required=True, help="alice,bob,carole,david"
    )
    multi.add_argument("--seed", type=int, default=11)
    multi.add_argument("--scan", type=int, default=20000)
    multi.add_argument("--starts", type=int, default=12)
    multi.set_defaults(handler=cmd_multiparty)

    check = sub.add_parser(
        "self-check", help="run the built-in consistency suite"
    )
    check.set_defaults(handler=cmd_self_check)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    env_seed = os.environ.get("FOCKBELL_SEED")
    if env_seed is not None and hasattr(args, "seed"):
        args.seed = int(env_seed)
    try:
        inputs, outputs, checks, code = args.handler(args)
    except ValueError as exc:
        error = {
            "command": args.command,
            "error": str(exc),
            "version": __version__,
        }
        print(dump_record(error), file=sys.stderr)
        return 2
    record = run_record(args.command, inputs, outputs, checks, __version__)
    print(dump_record(record))
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Flat-file serialization with exact numeric round-trips.

Floats are written with 17 significant decimal digits, which is enough for
IEEE doubles to re-parse bit-for-bit, so rerunning a command with the same
inputs yields byte-identical artifacts.  CSV files use a header row, UTF-8
and LF line endings; JSON run records have the fixed top-level shape
{command, inputs, outputs, checks, version}.
"""

from __future__ import annotations

import csv
import json
from typing import Iterable, Mapping, Sequence

from .bell import SweepRow
from .sampler import EmergencePoint

FIGURE1_COLUMNS = ("N", "P", "Qmax", "chi_a", "chi_b", "fan_spacing", "violated")
TRAJECTORY_COLUMNS = (
    "trajectory_id",
    "step",
    "angle",
    "outcome",
    "lambda_hat",
    "concentration",
)
EMERGENCE_COLUMNS = ("step", "mean_concentration", "mean_resultant")


def format_value(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(
    path: str,
    header: Sequence[str],
    rows: Iterable[Sequence[object]],
) -> int:
    """Write rows and return how many were written."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
            count += 1
    return count


def sweep_to_csv(rows: Sequence[SweepRow], path: str) -> int:
    return write_csv(
        path,
        FIGURE1_COLUMNS,
        (
            (
                row.n_total,
                row.p_alice,
                row.q_max,
                row.chi_a,
                row.chi_b,
                row.fan_spacing,
                row.violated,
            )
            for row in rows
        ),
    )


def trajectories_to_csv(rows: Sequence[Mapping[str, object]], path: str) -> int:
    return write_csv(
        path,
        TRAJECTORY_COLUMNS,
        ((row[column] for column in TRAJECTORY_COLUMNS) for row in rows),
    )


def emergence_to_csv(points: Sequence[EmergencePoint], path: str) -> int:
    return write_csv(
        path,
        EMERGENCE_COLUMNS,
        (
            (point.step, point.mean_concentration, point.mean_resultant)
            for point in points
        ),
    )


def run_record(
    command: str,
    inputs: Mapping[str, object],
    outputs: Mapping[str, object],
    checks: Mapping[str, object],
    version: str,
) -> dict:
    return {
        "command": command,
        "inputs": dict(inputs),
        "outputs": dict(outputs),
        "checks": dict(checks),
        "version": version,
    }


def dump_record(record: Mapping[str, object]) -> str:
    return json.dumps(record, indent=2, allow_nan=False)

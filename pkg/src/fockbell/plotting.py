"""Static SVG rendering of the Qmax landscape.

Uses matplotlib's object API directly (no pyplot, no global backend
state).  Output is deterministic: element ids are derived from a fixed
hash salt and the date metadata is suppressed, so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import math
from typing import Sequence

import matplotlib
from matplotlib.figure import Figure

from .bell import SweepRow, resolve_partition_token

_SVG_SALT = "fockbell"
_QUANTUM_BOUND = 2.0 * math.sqrt(2.0)


def render_figure1(
    rows: Sequence[SweepRow],
    partition_tokens: Sequence[int | str],
    path: str,
    *,
    log_x: bool = True,
) -> None:
    """Plot Qmax versus N, one series per partition rule.

    Horizontal references mark the local-realist bound 2 and the quantum
    bound 2*sqrt(2).
    """
    by_key = {(row.n_total, row.p_alice): row for row in rows}
    totals = sorted({row.n_total for row in rows})
    fig = Figure(figsize=(7.0, 4.5))
    ax = fig.add_subplot(111)
    for token in partition_tokens:
        xs, ys = [], []
        for n_total in totals:
            p_alice = resolve_partition_token(token, n_total)
            if p_alice is None:
                continue
            row = by_key.get((n_total, p_alice))
            if row is None:
                continue
            xs.append(n_total)
            ys.append(row.q_max)
        if xs:
            ax.plot(xs, ys, marker="o", markersize=4, label=f"P = {token}")
    ax.axhline(2.0, color="0.4", linestyle="--", linewidth=1.0, label="classical bound")
    ax.axhline(
        _QUANTUM_BOUND,
        color="0.4",
        linestyle=":",
        linewidth=1.0,
        label="quantum bound",
    )
    if log_x:
        ax.set_xscale("log", base=2)
    ax.set_xlabel("particle number N")
    ax.set_ylabel("maximal Bell quantity")
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    with matplotlib.rc_context({"svg.hashsalt": _SVG_SALT}):
        fig.savefig(path, format="svg", metadata={"Date": None})

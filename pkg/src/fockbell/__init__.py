"""Exact transverse spin-measurement statistics for double Fock states.

Two Bose-Einstein condensates prepared with definite particle numbers
carry no relative phase, yet a run of single-particle transverse spin
measurements behaves as if a phase existed all along: a definite value
emerges over the first few detections, and with suitably grouped
measurements the statistics violate a Bell-type inequality.  This
package computes those statistics exactly (quadrature over the phase
and its conjugate, or a combinatorial closed form for grouped runs),
cross-checks them against direct state-vector evolution, samples
measurement trajectories, and maximizes the Bell quantity over the
four analyzer orientations.
"""

from .bell import (
    BellReport,
    BipartiteSetting,
    CIRELSON_BOUND,
    MultipartyReport,
    SweepRow,
    bchsh_value,
    figure1_sweep,
    maximize_bchsh,
    multiparty_collapse,
    multiparty_value,
    no_violation_scan,
    pair_energy,
)
from .engine import (
    closed_form_correlation,
    closed_form_correlation_grid,
    correlation,
    correlation_batch,
    normalization_constant,
    sequence_probability,
    sequence_probability_table,
)
from .oracle import (
    FockVector,
    apply_detection,
    conditional_plus_probability,
    detection_chain,
    initial_state,
    oracle_probability_table,
    oracle_sequence_probability,
    transverse_expectation,
)
from .sampler import (
    EmergencePoint,
    PhaseEstimate,
    Trajectory,
    child_seeds,
    conditional_law_deviation,
    estimate_phase,
    phase_emergence_curve,
    running_estimates,
    sample_trajectory,
)
from .types import (
    CorrelationQuery,
    ExperimentConfig,
    MeasurementRecord,
    MeasurementSequence,
    as_sequence,
    equal_split,
    wrap_angle,
)

__version__ = "0.1.0"

__all__ = [
    "BellReport",
    "BipartiteSetting",
    "CIRELSON_BOUND",
    "CorrelationQuery",
    "EmergencePoint",
    "ExperimentConfig",
    "FockVector",
    "MeasurementRecord",
    "MeasurementSequence",
    "MultipartyReport",
    "PhaseEstimate",
    "SweepRow",
    "Trajectory",
    "__version__",
    "apply_detection",
    "as_sequence",
    "bchsh_value",
    "child_seeds",
    "closed_form_correlation",
    "closed_form_correlation_grid",
    "conditional_law_deviation",
    "conditional_plus_probability",
    "correlation",
    "correlation_batch",
    "detection_chain",
    "equal_split",
    "estimate_phase",
    "figure1_sweep",
    "initial_state",
    "maximize_bchsh",
    "multiparty_collapse",
    "multiparty_value",
    "no_violation_scan",
    "normalization_constant",
    "oracle_probability_table",
    "oracle_sequence_probability",
    "pair_energy",
    "phase_emergence_curve",
    "running_estimates",
    "sample_trajectory",
    "sequence_probability",
    "sequence_probability_table",
    "transverse_expectation",
    "wrap_angle",
]

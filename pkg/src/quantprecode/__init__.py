"""Fronthaul-quantization-aware MU-MIMO downlink precoding toolkit.

A BBU that must ship its precoding matrix over a capacity-limited fronthaul
can only transmit matrices whose entries live on a coarse quantization grid.
This package provides the optimal grid-constrained precoder (per-column
sphere decoding inside a power-multiplier bisection), a low-complexity
four-candidate refinement heuristic, quantization-unaware baselines, and a
reproducible Monte-Carlo harness comparing their sum rates.
"""

__version__ = "0.1.0"

from .quantizer import (
    QuantizerSpec,
    design_step_size,
    gaussian_distortion,
    quantize_matrix,
    quantize_scalar,
)
from .channel import (
    ChannelState,
    draw_channel,
    estimate_channel,
    gamma_from_snr,
    snr_schedule,
)
from .baseline import (
    SCHEMES,
    PrecodingResult,
    beta_opt,
    beta_wf,
    frobenius_power,
    unaware_precoder,
    wf_infinite_precoder,
    wf_precoder,
)
from .metrics import (
    CSV_COLUMNS,
    ExperimentReport,
    TrialOutcome,
    mse_closed_form,
    normalize_config,
    per_ue_sinr,
    run_experiment,
    sum_rate,
    write_csv,
    write_manifest,
)
from .sphere import (
    DEFAULT_NODE_BUDGET,
    KERNEL_BACKEND,
    LagrangeState,
    SphereSolution,
    SubproblemInstance,
    build_subproblems,
    sesd_solve,
    solve_fixed_lambda,
    sphere_precode,
)
from .heuristic import (
    ORDERING_RULES,
    RefinementPlan,
    four_candidates,
    generated_interference,
    heuristic_precode,
    received_interference,
)
from .oracle import (
    FronthaulBudget,
    InfeasibleBudgetError,
    OracleSizeError,
    capacity_joint,
    capacity_separate,
    exhaustive_constrained,
    exhaustive_fixed_lambda,
)
from .cli import main

__all__ = [
    "__version__",
    "QuantizerSpec", "design_step_size", "gaussian_distortion",
    "quantize_scalar", "quantize_matrix",
    "ChannelState", "draw_channel", "estimate_channel", "snr_schedule",
    "gamma_from_snr",
    "SCHEMES", "PrecodingResult", "wf_precoder", "beta_opt", "beta_wf",
    "unaware_precoder", "wf_infinite_precoder", "frobenius_power",
    "per_ue_sinr", "sum_rate", "mse_closed_form", "TrialOutcome",
    "ExperimentReport", "normalize_config", "run_experiment", "write_csv",
    "write_manifest", "CSV_COLUMNS",
    "KERNEL_BACKEND", "DEFAULT_NODE_BUDGET", "SubproblemInstance",
    "SphereSolution", "LagrangeState",
    "build_subproblems", "sesd_solve", "solve_fixed_lambda", "sphere_precode",
    "ORDERING_RULES", "RefinementPlan", "generated_interference",
    "received_interference", "four_candidates", "heuristic_precode",
    "FronthaulBudget", "capacity_separate", "capacity_joint",
    "exhaustive_fixed_lambda", "exhaustive_constrained",
    "OracleSizeError", "InfeasibleBudgetError",
    "main",
]

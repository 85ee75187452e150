"""Imaginary-time evolution for the transverse-field Ising model on the
infinite Bethe lattice, using fully symmetric infinite tree tensor networks.

The public surface mirrors the workflow: build a state (`init_product`,
`embed_pad`), evolve it (`evolve`, `Schedule`), measure it
(`leading_environment`, `expect_site`, `expect_bond`, `correlation_spectrum`),
and drive parameter scans (`RunConfig`, `run_point`, `run_sweep`).
"""

__version__ = "0.1.0"

from .analysis import (
    FitResult,
    analyze_derivatives,
    derivative_table,
    estimate_hc,
    fit_beta,
    trotter_ratio,
)
from .canonical import CanonicalReport, CanonicalState, load_canonical, save_canonical, verify_canonical
from .driver import ConfigError, RunConfig, convergence_study, run_point, run_sweep
from .environment import (
    ConvergenceError,
    Environment,
    correlation_spectrum,
    expect_bond,
    expect_site,
    leading_environment,
)
from .evolution import EvolutionError, Schedule, TruncationReport, apply_gate, energy_per_site, evolve, truncate
from .gates import GateSet, build_gate_set, coupling_mpo_matrices, mpo_oracle_check, rank_two_form
from .records import CSV_COLUMNS, ResultRecord, validate_record
from .state import ITTNState, embed_pad, init_product, load_state, save_state
from .tensor_ops import (
    RankOneNonConvergence,
    best_rank_one,
    mode_mul_matrix,
    mode_mul_vector,
    outer,
    symmetrize,
    symmetry_defect,
)

__all__ = [
    "__version__",
    # state
    "ITTNState", "init_product", "embed_pad", "save_state", "load_state",
    # tensor utilities
    "mode_mul_vector", "mode_mul_matrix", "outer", "symmetrize",
    "symmetry_defect", "best_rank_one", "RankOneNonConvergence",
    # environment and observables
    "Environment", "ConvergenceError", "leading_environment",
    "expect_site", "expect_bond", "correlation_spectrum",
    # gates
    "GateSet", "build_gate_set", "coupling_mpo_matrices", "rank_two_form",
    "mpo_oracle_check",
    # evolution
    "Schedule", "apply_gate", "truncate", "TruncationReport", "evolve",
    "EvolutionError", "energy_per_site",
    # canonical form
    "CanonicalState", "CanonicalReport", "verify_canonical",
    "save_canonical", "load_canonical",
    # analysis
    "estimate_hc", "analyze_derivatives", "derivative_table", "fit_beta", "FitResult", "trotter_ratio",
    # driving
    "RunConfig", "ConfigError", "run_point", "run_sweep", "convergence_study",
    # records
    "ResultRecord", "CSV_COLUMNS", "validate_record",
]

"""Certified entanglement bounds for optical benchmarks.

Lower and upper bounds on the negativity preserved by a quantum optical
device, computed from homodyne means and variances of a few nonorthogonal
test states.  Truncation to a finite Fock space is made rigorous by
photon-tail constraints, so the reported lower bound holds for the full
infinite-dimensional state.
"""

from .fock import (
    Coherent,
    CutoffInsufficient,
    SqueezedVacuum,
    annihilation_matrix,
    overlap,
    quadrature_matrices,
)
from .ensemble import (
    ChannelModel,
    DerivedMoments,
    InvariantViolation,
    MeasurementRecord,
    NegativeEnergy,
    ParseError,
    ReducedStateA,
    TestEnsemble,
    build_rho_A,
    derive_moments,
    ingest_records,
    simulate_channel,
    write_records,
)
from .truncation import (
    ConstraintSet,
    CutoffTooSmall,
    DimensionMismatch,
    TruncatedBlockHandles,
    cutoff_lemma_constraint,
    first_order_lmi,
    rho_A_block_lmi,
    second_order_lmi,
)
from .sdp import (
    ALTERNATE_BACKEND,
    DEFAULT_BACKEND,
    BenchmarkProblem,
    BoundResult,
    SolveStatus,
    SolverConfig,
    dump_conic_program,
    negativity_value,
    partial_transpose_A,
    quantum_domain_flag,
    solve_hybrid_upper,
    solve_lower_bound,
)
from .bench import (
    PointSpec,
    PointResult,
    RangeError,
    SweepSpec,
    default_sweep,
    parse_config,
    run_ingested,
    run_point,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "ALTERNATE_BACKEND",
    "BenchmarkProblem",
    "BoundResult",
    "ChannelModel",
    "Coherent",
    "ConstraintSet",
    "CutoffInsufficient",
    "CutoffTooSmall",
    "DEFAULT_BACKEND",
    "DerivedMoments",
    "DimensionMismatch",
    "InvariantViolation",
    "MeasurementRecord",
    "NegativeEnergy",
    "ParseError",
    "PointResult",
    "PointSpec",
    "RangeError",
    "ReducedStateA",
    "SolveStatus",
    "SolverConfig",
    "SqueezedVacuum",
    "SweepSpec",
    "TestEnsemble",
    "TruncatedBlockHandles",
    "annihilation_matrix",
    "build_rho_A",
    "cutoff_lemma_constraint",
    "default_sweep",
    "derive_moments",
    "dump_conic_program",
    "first_order_lmi",
    "ingest_records",
    "negativity_value",
    "overlap",
    "parse_config",
    "partial_transpose_A",
    "quadrature_matrices",
    "quantum_domain_flag",
    "rho_A_block_lmi",
    "run_ingested",
    "run_point",
    "run_sweep",
    "second_order_lmi",
    "simulate_channel",
    "solve_hybrid_upper",
    "solve_lower_bound",
    "write_records",
]

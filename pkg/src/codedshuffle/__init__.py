"""Coded MapReduce shuffle planning, simulation, and converse checking.

The package has three legs that check each other:

- planner: exhaustive exact-rational minimization of the execution time
  over hybrid allocations (alpha, r1, r2, Ks, Kh), plus pure-scheme
  enumerators and a closed-form shortcut;
- simulator: bit-exact execution of the coded shuffle (Vandermonde
  multicasts over GF(2^w)) whose measured loads must equal the closed
  forms as rationals;
- bounds: counting converses evaluated on concrete placements, tight at
  the scheme's own operating points.
"""

from .bounds import (
    EnhancedBound,
    StorageProfile,
    counting_lower_bound,
    enhanced_availability,
    enhanced_lower_bound,
    phase_lower_bounds,
    profile_to_availability,
    tally_availability,
    tally_storage_profile,
)
from .codec import GaloisField, SymbolVector, decode_vandermonde, encode_vandermonde
from .errors import (
    AssignmentNotSymmetric,
    CodedShuffleError,
    CountMismatch,
    DecodeFailure,
    DivisibilityError,
    DuplicateCoefficient,
    EmptyInput,
    FieldTooSmall,
    Infeasible,
    InfeasibleParams,
    MissingValue,
    PayloadMismatch,
    SingularMatrix,
    UndefinedLoad,
    UnsupportedReplication,
)
from .loads import (
    LoadEnvelope,
    TimeBreakdown,
    acdc_load_envelope,
    acdc_shuffle_load,
    acdc_sufficiency_threshold,
    acdc_time,
    cdc_load_envelope,
    cdc_shuffle_load,
    cdc_time,
    hybrid_time,
    lower_envelope,
)
from .model import (
    Allocation,
    IvId,
    Placement,
    ReduceAssignment,
    SystemParams,
    TaskParams,
    build_hybrid_placement,
    build_reduce_assignment,
    divisibility_report,
    peak_computation_load,
)
from .planner import (
    Plan,
    PureAcdcPlan,
    PureCdcPlan,
    SweepRow,
    analytic_cdc_allocation,
    best_alpha,
    best_pure_acdc,
    best_pure_cdc,
    optimize,
    pure_acdc_candidates,
    sweep,
)
from .simulator import (
    MulticastRecord,
    ShuffleTranscript,
    SimReport,
    ValueGroup,
    build_group,
    deliver,
    iv_payload,
    map_phase,
    reduce_phase,
    run,
    shuffle_acdc,
    shuffle_cdc,
)

__version__ = "0.1.0"

"""flowtopo: reconstruct conserved-network topology from steady-state
edge-flow measurements.

The pipeline learns the conservation relations from data by SVD, reduces
them to a fundamental cutset matrix, canonicalizes it so branches are
exactly the non-sink edges, and realizes the unique arborescence with
that cutset structure.  A noisy lane adds covariance whitening and an
eigenvalue-equality test for the number of conservation laws.
"""

from .errors import (
    AmbiguousParent,
    DisconnectedNetwork,
    EmptySpec,
    FlowtopoError,
    FullDeficiency,
    LabelMismatch,
    NoInternalNodes,
    NonIntegerCutset,
    NoStableOrder,
    NotArborescence,
    NotASpanningTree,
    NotCanonicalizable,
    NotPositiveDefinite,
    NotUnique,
    NoValidPartition,
    ParseError,
    RankZero,
    SnapFailure,
)
from .graph_model import (
    ENVIRONMENT,
    ConservationGraph,
    CutsetMatrix,
    FlowNetwork,
    IncidenceMatrix,
    build_conservation_graph,
    fcutset_matrix,
    is_arborescence,
    reduced_incidence_matrix,
    to_label_convention,
)
from .nullspace import (
    FlowDataMatrix,
    NullBasis,
    Partition,
    estimate_null_basis,
    find_valid_partition,
    rref,
    to_fcutset_form,
)
from .canonical_cutset import CanonicalCutsetMatrix, canonicalize, unique_sign_edge
from .realize import (
    ReconstructionResult,
    realize_topology,
    to_dot,
    verify_against_truth,
)
from .noise_pipeline import (
    NoiseModel,
    RankTestReport,
    estimate_model_order,
    reconstruct_exact,
    reconstruct_noisy,
    whiten,
)
from .synth import (
    ArborescenceSpec,
    FlowSamplerConfig,
    SnrSetting,
    add_noise,
    binary_network_with_edges,
    family_spec,
    generate_arborescence,
    generate_within,
    sample_flows,
)
from .harness import (
    ScalingBench,
    SweepConfig,
    SweepResult,
    find_min_z,
    run_pipeline,
    run_scaling_bench,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousParent",
    "ArborescenceSpec",
    "CanonicalCutsetMatrix",
    "ConservationGraph",
    "CutsetMatrix",
    "DisconnectedNetwork",
    "EmptySpec",
    "ENVIRONMENT",
    "FlowDataMatrix",
    "FlowNetwork",
    "FlowSamplerConfig",
    "FlowtopoError",
    "FullDeficiency",
    "IncidenceMatrix",
    "LabelMismatch",
    "NoInternalNodes",
    "NoiseModel",
    "NonIntegerCutset",
    "NoStableOrder",
    "NotArborescence",
    "NotASpanningTree",
    "NotCanonicalizable",
    "NotPositiveDefinite",
    "NotUnique",
    "NoValidPartition",
    "NullBasis",
    "ParseError",
    "Partition",
    "RankTestReport",
    "RankZero",
    "ReconstructionResult",
    "ScalingBench",
    "SnapFailure",
    "SnrSetting",
    "SweepConfig",
    "SweepResult",
    "add_noise",
    "binary_network_with_edges",
    "build_conservation_graph",
    "canonicalize",
    "estimate_model_order",
    "estimate_null_basis",
    "family_spec",
    "fcutset_matrix",
    "find_min_z",
    "find_valid_partition",
    "generate_arborescence",
    "generate_within",
    "is_arborescence",
    "realize_topology",
    "reconstruct_exact",
    "reconstruct_noisy",
    "reduced_incidence_matrix",
    "rref",
    "run_pipeline",
    "run_scaling_bench",
    "run_sweep",
    "sample_flows",
    "to_dot",
    "to_fcutset_form",
    "to_label_convention",
    "unique_sign_edge",
    "verify_against_truth",
    "whiten",
]

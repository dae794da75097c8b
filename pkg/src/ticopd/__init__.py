"""Decentralized optimization with compressed communication.

A simulation library for multi-agent consensus optimization.  The core
algorithm runs a two-timescale primal-dual update in which agents exchange
compressed differences and track each other's iterates through local
surrogate copies; mixing-based baselines (plain, quantized, and
error-compensated gossip descent) share the same graph, objective, codec,
and metrics plumbing so runs are comparable iterate-for-iterate and
bit-for-bit.
"""

from .algorithms import (
    ALGORITHMS,
    AlgorithmConfig,
    DivergenceError,
    NetworkState,
    StepSizes,
    admissible_stepsizes,
    aggregate_messages,
    compute_stepsizes,
    init_state,
    metropolis_weights,
    primal_dual_step,
    run,
    surrogate_update,
)
from .compression import (
    CodecError,
    CompressorSpec,
    ContractionReport,
    EncodedMessage,
    certified_delta,
    compress,
    contraction_test,
    decode,
    encode,
    qsgd_bit_length,
    qsgd_tau,
)
from .diagnostics import (
    CSV_COLUMNS,
    LyapunovTracker,
    MetricsRow,
    RunRecord,
    TheoremConstants,
    auxiliary_v,
    consensus_error,
    lyapunov,
    read_csv,
    rows_to_csv_text,
    theorem_constants,
    worst_agent_accuracy,
    write_csv,
)
from .harness import (
    ConfigError,
    check,
    compare,
    config_hash,
    load_config,
    normalize_config,
    problem_hash,
    resolve_out_dir,
    run_experiment,
    sweep,
)
from .objectives import (
    DataPartition,
    LeastSquares,
    Logistic,
    Objective,
    QuadraticConsensus,
    TwoLayerMlp,
    gradient_check,
    gradient_dispersion,
    least_squares,
    load_idx,
    logistic_regression,
    partition_by_label,
    quadratic_consensus,
    smoothness_check,
    synthetic_blobs,
    two_layer_mlp,
)
from .rng import CHECK, COMPRESS, DATA, GRAPH, INIT, PARTITION, RngStream
from .topology import (
    Graph,
    SpectralInfo,
    build_graph,
    incidence,
    laplacian,
    neighbor_sets,
    spectral_info,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "AlgorithmConfig",
    "CHECK",
    "COMPRESS",
    "CSV_COLUMNS",
    "CodecError",
    "CompressorSpec",
    "ConfigError",
    "ContractionReport",
    "DATA",
    "DataPartition",
    "DivergenceError",
    "EncodedMessage",
    "GRAPH",
    "Graph",
    "INIT",
    "LeastSquares",
    "Logistic",
    "LyapunovTracker",
    "MetricsRow",
    "NetworkState",
    "Objective",
    "PARTITION",
    "QuadraticConsensus",
    "RngStream",
    "RunRecord",
    "SpectralInfo",
    "StepSizes",
    "TheoremConstants",
    "TwoLayerMlp",
    "admissible_stepsizes",
    "aggregate_messages",
    "auxiliary_v",
    "build_graph",
    "certified_delta",
    "check",
    "compare",
    "compress",
    "compute_stepsizes",
    "config_hash",
    "consensus_error",
    "contraction_test",
    "decode",
    "encode",
    "gradient_check",
    "gradient_dispersion",
    "incidence",
    "init_state",
    "laplacian",
    "least_squares",
    "load_config",
    "load_idx",
    "logistic_regression",
    "lyapunov",
    "metropolis_weights",
    "neighbor_sets",
    "normalize_config",
    "partition_by_label",
    "primal_dual_step",
    "problem_hash",
    "qsgd_bit_length",
    "qsgd_tau",
    "quadratic_consensus",
    "read_csv",
    "resolve_out_dir",
    "rows_to_csv_text",
    "run",
    "run_experiment",
    "smoothness_check",
    "spectral_info",
    "surrogate_update",
    "sweep",
    "synthetic_blobs",
    "theorem_constants",
    "two_layer_mlp",
    "worst_agent_accuracy",
    "write_csv",
]

"""Placement delivery arrays: verification, construction, graph and
sequence views, a coded caching simulator, and a pointer-network colorer.

The submodules are usable on their own; this namespace re-exports the
pieces most scripts need.
"""

from .errors import (
    DivergenceError,
    InvalidParameter,
    InvalidPda,
    ParseError,
    PdakitError,
)
from .pda import (
    STAR,
    Pda,
    VerifyReport,
    Violation,
    construct_mn_pda,
    parse_pda_text,
    pda_from_text,
    pda_to_text,
    rate,
    verify,
)
from .graph import (
    BipartiteColoredGraph,
    graph_from_json,
    graph_to_json,
    graph_to_pda,
    greedy_strong_color,
    is_strong_coloring,
    pda_to_graph,
    subsample,
)
from .seqcodec import (
    AdjacencyMatrix,
    TrainingPair,
    assemble_array,
    default_star_pattern,
    extract_edge_sequence,
    placement_to_adjacency,
    read_corpus,
    training_pair_from_pda,
    write_corpus,
)
from .cachesim import (
    DemandVector,
    FileLibrary,
    MeasureReport,
    RoundResult,
    Transcript,
    measure,
    run_round,
)
from .neural import (
    Episode,
    ModelConfig,
    ModelParams,
    TrainConfig,
    load_checkpoint,
    rollout,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AdjacencyMatrix",
    "BipartiteColoredGraph",
    "DemandVector",
    "DivergenceError",
    "Episode",
    "FileLibrary",
    "InvalidParameter",
    "InvalidPda",
    "MeasureReport",
    "ModelConfig",
    "ModelParams",
    "ParseError",
    "Pda",
    "PdakitError",
    "RoundResult",
    "STAR",
    "TrainConfig",
    "TrainingPair",
    "Transcript",
    "VerifyReport",
    "Violation",
    "assemble_array",
    "construct_mn_pda",
    "default_star_pattern",
    "extract_edge_sequence",
    "graph_from_json",
    "graph_to_json",
    "graph_to_pda",
    "greedy_strong_color",
    "is_strong_coloring",
    "load_checkpoint",
    "measure",
    "parse_pda_text",
    "pda_from_text",
    "pda_to_graph",
    "pda_to_text",
    "placement_to_adjacency",
    "rate",
    "read_corpus",
    "rollout",
    "run_round",
    "save_checkpoint",
    "subsample",
    "train",
    "training_pair_from_pda",
    "verify",
    "write_corpus",
]

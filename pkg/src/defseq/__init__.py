"""Toroidal defining sequences of decompositions: combinatorial model,
concordance invariants, admissibility, generators and geometric embeddings."""

from .core import (
    NodeCapExceeded,
    Pattern,
    PatternSystem,
    SchemaError,
    StageGraph,
    TorusNode,
    expand,
    load_system,
    parse_system,
    stage,
)
from .invariants import (
    FormalClass,
    SliceCertificate,
    component_counts,
    disjoint_union,
    distinguish,
    mod2_linking_sequence,
    nu,
)
from .sequences import EPSeq

__version__ = "0.1.0"

__all__ = [
    "EPSeq",
    "FormalClass",
    "NodeCapExceeded",
    "Pattern",
    "PatternSystem",
    "SchemaError",
    "SliceCertificate",
    "StageGraph",
    "TorusNode",
    "component_counts",
    "disjoint_union",
    "distinguish",
    "expand",
    "load_system",
    "mod2_linking_sequence",
    "nu",
    "parse_system",
    "stage",
]

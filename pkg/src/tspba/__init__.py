"""Exact solver for the travelling salesman problem below average.

Given a complete graph K_n with integer edge weights w and a parameter
k >= 0, decide whether some Hamilton cycle has weight at most dn - k,
where d is the average edge weight, and produce either a certificate
cycle or the exact minimum.  All arithmetic is exact.
"""

from .instance import (
    DensityRatio,
    TransformLedger,
    Weighting,
    abs_weight,
    apply_transform,
    beats_average,
    density,
    subgraph_weight,
    support_split,
    validate,
    verify_certificate,
)
from .hamcycle import (
    HamCycle,
    PartialHamCycle,
    derandomize,
    edge_prob,
    expected_weight,
    extension_count,
    join_edges,
    min_avg_cycle,
    phc_from_edges,
)

__all__ = [
    "DensityRatio",
    "HamCycle",
    "PartialHamCycle",
    "TransformLedger",
    "Weighting",
    "abs_weight",
    "apply_transform",
    "beats_average",
    "density",
    "derandomize",
    "edge_prob",
    "expected_weight",
    "extension_count",
    "join_edges",
    "min_avg_cycle",
    "phc_from_edges",
    "subgraph_weight",
    "support_split",
    "validate",
    "verify_certificate",
]

__version__ = "0.1.0"

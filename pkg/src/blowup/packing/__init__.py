"""Packing pipeline on planted cluster instances."""
from .balance import (BalanceResult, MajorizationError, Orientation, balance_class_vectors, birkhoff, caratheodory,
                      class_vector, is_doubly_stochastic, precedes, t_transform_matrix, top_up)
from .cells import CellSystem, marked_approximation, plant_packing_instance
from .cover import CoverError, CoverResult, FCopy, copy_edges_ok, cover_exceptional
from .matching import MatchingResult, reduced_matching
from .pipeline import PackParams, PackResult, cell_complex, choose_cell, pack, packing_target, validate_packing
from .reduced import ReducedGraph, build_reduced, cluster_counts, trim_reduced

__all__ = [
    "BalanceResult", "CellSystem", "CoverError", "CoverResult", "FCopy", "MajorizationError", "MatchingResult",
    "Orientation", "PackParams", "PackResult", "ReducedGraph", "balance_class_vectors", "birkhoff",
    "build_reduced", "caratheodory", "cell_complex", "choose_cell", "class_vector", "cluster_counts",
    "copy_edges_ok", "cover_exceptional", "is_doubly_stochastic", "marked_approximation", "pack",
    "packing_target", "plant_packing_instance", "precedes", "reduced_matching", "t_transform_matrix",
    "top_up", "trim_reduced", "validate_packing",
]

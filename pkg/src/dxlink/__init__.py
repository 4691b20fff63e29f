"""Diagnostic knowledge compiler and noisy-OR differential diagnosis engine."""

from .inference import (
    Demographics,
    Differential,
    Evidence,
    NoisyOrNetwork,
    build_network,
    exact_posterior,
    rank_differential,
    variational_posteriors,
)
from .kb import KnowledgeBase, load_kb
from .ontology import Ontology, load_snapshot, transitive_closure

__version__ = "0.1.0"

__all__ = [
    "Demographics",
    "Differential",
    "Evidence",
    "KnowledgeBase",
    "NoisyOrNetwork",
    "Ontology",
    "build_network",
    "exact_posterior",
    "load_kb",
    "load_snapshot",
    "rank_differential",
    "transitive_closure",
    "variational_posteriors",
    "__version__",
]

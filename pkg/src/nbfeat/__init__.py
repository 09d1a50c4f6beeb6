"""Neighbourhood featurisation of binary dynamics on directed graphs.

Activity on a large digraph is summarised by evaluating graph parameters
on the active parts of a few selected vertex neighbourhoods, bin by bin;
the resulting vectors are classified with a support vector machine.
"""
from .digraph import Digraph, Neighbourhood, Subgraph, closed_neighbourhood, load_graph
from .errors import NbfeatError
from .params import REGISTRY, TABLE1_CODES, evaluate, evaluate_many
from .pipeline import BinSpec, BinaryDynamicsSet, Trial, featurise, featurise_many, select_neighbourhoods

__version__ = "0.1.0"

__all__ = [
    "Digraph",
    "Subgraph",
    "Neighbourhood",
    "closed_neighbourhood",
    "load_graph",
    "NbfeatError",
    "REGISTRY",
    "TABLE1_CODES",
    "evaluate",
    "evaluate_many",
    "BinSpec",
    "BinaryDynamicsSet",
    "Trial",
    "featurise",
    "featurise_many",
    "select_neighbourhoods",
    "__version__",
]

"""Balanced rooted trees, K_t-tree constructions and supporting machinery."""

from __future__ import annotations

from .constructions import ConstructionId, Witness, canonical_witness
from .density import is_balanced, rooted_density
from .errors import CapExceeded, FormatError, InfeasibleParameters
from .graph_core import Graph, RootedGraph
from .planner import FamilyPlan, plan_family, plan_star_family

__version__ = "0.1.0"

__all__ = [
    "CapExceeded",
    "ConstructionId",
    "FamilyPlan",
    "FormatError",
    "Graph",
    "InfeasibleParameters",
    "RootedGraph",
    "Witness",
    "canonical_witness",
    "is_balanced",
    "plan_family",
    "plan_star_family",
    "rooted_density",
]

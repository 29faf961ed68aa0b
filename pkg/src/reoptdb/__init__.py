"""Sampling-based cardinality validation and iterative query re-optimization."""
from .catalog import Catalog, Relation, SampleTable, open_catalog, save_catalog
from .optimizer import CardinalitySource, CostModel, OptimizerConfig, optimize, plan_cost
from .plan import Gamma, Join, Scan, Transformation
from .query import QuerySpec
from .reopt import ReoptReport, reoptimize, reoptimize_injected
from .sql import parse

__version__ = "0.1.0"

__all__ = [
    "Catalog", "Relation", "SampleTable", "open_catalog", "save_catalog",
    "CardinalitySource", "CostModel", "OptimizerConfig", "optimize", "plan_cost",
    "Gamma", "Join", "Scan", "Transformation", "QuerySpec",
    "ReoptReport", "reoptimize", "reoptimize_injected", "parse",
]

"""λ-bracket and normal-ordering engine."""

from conformalcalc.engine.rewrite import Engine, ProductTree
from conformalcalc.engine.types import (
    AlgebraSpec,
    BracketTable,
    CheckResult,
    MissingBracketEntry,
    Mode,
    Relation,
    Report,
    RewriteLimitExceeded,
    ShapeMismatch,
    UnknownGenerator,
    ValidationError,
    WeightOverflow,
)

__all__ = [
    "AlgebraSpec",
    "BracketTable",
    "CheckResult",
    "Engine",
    "MissingBracketEntry",
    "Mode",
    "ProductTree",
    "Relation",
    "Report",
    "RewriteLimitExceeded",
    "ShapeMismatch",
    "UnknownGenerator",
    "ValidationError",
    "WeightOverflow",
]

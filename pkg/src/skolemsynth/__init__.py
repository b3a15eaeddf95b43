"""Skolem function synthesis for 2-QBF specifications via learning and repair."""

from .expr import ExprArena, format_skolem, parse_skolem
from .formula import CnfFormula, QbfSpec, parse_qdimacs, write_qdimacs

__all__ = [
    "CnfFormula",
    "ExprArena",
    "QbfSpec",
    "format_skolem",
    "parse_qdimacs",
    "parse_skolem",
    "write_qdimacs",
]
__version__ = "0.1.0"

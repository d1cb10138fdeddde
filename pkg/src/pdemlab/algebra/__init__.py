"""Exact noncommutative operator calculus for the PDEM quasi-algebra."""

from .coeff import Coeff
from .operators import P, X, OperatorExpr, commutator, multiply, normal_order, sym
from .parser import ParseError, parse
from .table import (
    ALLOWED_MU,
    ALLOWED_U,
    PUBLISHED_ODES,
    CommutatorTable,
    GeneratorReport,
    StructureConstantTable,
    allowed_table,
    coefficient_odes,
    decompose,
    generators,
    structure_constants,
    verify_generator_table,
)

__all__ = [
    "ALLOWED_MU",
    "ALLOWED_U",
    "PUBLISHED_ODES",
    "Coeff",
    "CommutatorTable",
    "GeneratorReport",
    "OperatorExpr",
    "P",
    "ParseError",
    "StructureConstantTable",
    "X",
    "allowed_table",
    "coefficient_odes",
    "commutator",
    "decompose",
    "generators",
    "multiply",
    "normal_order",
    "parse",
    "structure_constants",
    "sym",
    "verify_generator_table",
]

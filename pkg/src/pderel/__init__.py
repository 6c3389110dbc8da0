"""Exact comparison of PDEs induced by rational lattice dynamics.

Modules:
    dsl        expression language for rules, boundary data and formulas
    maxplus    tropical shadows, exact equivalence, constants M_f and c_f
    jet        Taylor expansion of rules into PDEs with error constants
    dynamics   exact / high-precision evolution of lattice rules
    relation   initial rates, Q statistics, bound formulas, certificates
    solutions  closed-form solutions, residuals and witnesses
    cli        config-driven experiment runner
"""

from .dsl import EvaluationError, Expression, ParseError, evaluate, parse
from .dynamics import EvolutionSpec, GridFlow, evolve, required_support
from .jet import ApproximationData, DerivedPDE, JetPolynomial, JetVariable, derive_pde, expand_cell
from .maxplus import AffineTerm, ElementaryRational, MaxPlusPresentation, equivalent, tropical_constants, tropical_shadow
from .relation import RelationClass, bound_value, certify_point, q_table, q_value

__all__ = [
    "AffineTerm",
    "ApproximationData",
    "DerivedPDE",
    "ElementaryRational",
    "EvaluationError",
    "EvolutionSpec",
    "Expression",
    "GridFlow",
    "JetPolynomial",
    "JetVariable",
    "MaxPlusPresentation",
    "ParseError",
    "RelationClass",
    "bound_value",
    "certify_point",
    "derive_pde",
    "equivalent",
    "evaluate",
    "evolve",
    "expand_cell",
    "parse",
    "q_table",
    "q_value",
    "required_support",
    "tropical_constants",
    "tropical_shadow",
]

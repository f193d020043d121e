"""Pseudo-Boolean proof checking and proof-logging SAT solving with parity reasoning."""

from .core import (
    LinearEquality, Namespace, PBConstraint, Substitution, Variable, VariableRegistry, clause, evaluate,
    expand_equality, implies_syntactically, negate, normalize, restrict,
)
from .cutting_planes import divide, eval_rpn, linear_combination, literal_axiom, multiply, saturate
from .database import ConstraintDatabase
from .proofio import Formula, parse_cnf, parse_opb, parse_proof_line, read_formula
from .propagation import Trail, rup_check, slack, unit_propagate
from .redundancy import RedundancyVerdict, redundancy_check
from .verifier import Verdict, check_model, verify

__version__ = "0.1.0"

__all__ = [
    "ConstraintDatabase", "Formula", "LinearEquality", "Namespace", "PBConstraint", "RedundancyVerdict",
    "Substitution", "Trail", "Variable", "VariableRegistry", "Verdict", "check_model", "clause", "divide",
    "eval_rpn", "evaluate", "expand_equality", "implies_syntactically", "linear_combination", "literal_axiom",
    "multiply", "negate", "normalize", "parse_cnf", "parse_opb", "parse_proof_line", "read_formula",
    "redundancy_check", "restrict", "rup_check", "saturate", "slack", "unit_propagate", "verify",
]

"""Natural-language arguments to first-order logic, SMT-LIB and back.

Core compiler pieces (AST, parser, sorts, SMT emission, solver runner) are
imported eagerly; the LLM-backed pipeline, evaluation harness and CLI pull
in heavier dependencies and live in their own modules:

    from nl2fol.pipeline import Pipeline
    from nl2fol.evaluation import load_dataset, evaluate
"""

from .fol import (
    And,
    ArityConflict,
    Atom,
    CaptureError,
    Constant,
    Exists,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    Term,
    Variable,
    collect_predicates,
    free_variables,
    substitute,
)
from .parser import LexError, ParseError, Token, UnbalancedParens, parse, parse_text, pretty_print, tokenize
from .smt import SmtScript, UndeclaredSymbol, compile_formula, emit_smt, to_prefix
from .solver import Model, ModelParseError, SolverConfig, SolverOutcome, parse_model, run_solver
from .sorts import IncompatibleSorts, Signature, unify_sorts

__version__ = "0.1.0"

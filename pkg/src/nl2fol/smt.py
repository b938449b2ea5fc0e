"""SMT-LIB script generation: prefix conversion and byte-exact emission.

The emitted script asserts the *negation* of the input formula, so a `sat`
verdict exhibits a counterexample to the formula and `unsat` proves it
valid.  Layout is fixed: `(set-logic UF)`, sort declarations, function
declarations (predicates first, then free constants, each in first-
occurrence order), one negated assertion, `(check-sat)`, `(get-model)`;
lines are newline-separated with no trailing whitespace.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fol import (
    And,
    Atom,
    Constant,
    Exists,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    Term,
    constant_names,
    free_variables,
    iter_atoms,
)
from .sorts import Signature, unify_sorts


class UndeclaredSymbol(Exception):
    """Internal consistency failure: the signature does not cover the formula."""


@dataclass(frozen=True)
class SmtScript:
    logic: str
    sort_decls: tuple[str, ...]
    fun_decls: tuple[tuple[str, tuple[str, ...], str], ...]
    assertion: str  # the negated formula, e.g. "(not (=> P Q))"
    commands: tuple[str, ...] = ("(check-sat)", "(get-model)")

    @property
    def text(self) -> str:
        lines = [f"(set-logic {self.logic})"]
        lines += [f"(declare-sort {s} 0)" for s in self.sort_decls]
        for name, args, ret in self.fun_decls:
            lines.append(f"(declare-fun {name} ({' '.join(args)}) {ret})")
        lines.append(f"(assert {self.assertion})")
        lines += list(self.commands)
        return "\n".join(lines)

    def declared_names(self) -> set[str]:
        return {name for name, _, _ in self.fun_decls}


def to_prefix(f: Formula, sig: Signature):
    """Convert to a prefix expression tree (nested tuples of strings).

    Operators map to not/and/or/=>, quantifiers carry sorted bound-variable
    lists, and predicate arguments are converted recursively; a 0-ary atom
    is a bare symbol.
    """

    if isinstance(f, Atom):
        if not f.args:
            return f.predicate
        parts = [f.predicate]
        for a in f.args:
            if isinstance(a, Term):
                parts.append(a.name)
            else:
                parts.append(to_prefix(a, sig))
        return tuple(parts)
    if isinstance(f, Not):
        return ("not", to_prefix(f.body, sig))
    if isinstance(f, And):
        return ("and", to_prefix(f.left, sig), to_prefix(f.right, sig))
    if isinstance(f, Or):
        return ("or", to_prefix(f.left, sig), to_prefix(f.right, sig))
    if isinstance(f, Implies):
        return ("=>", to_prefix(f.left, sig), to_prefix(f.right, sig))
    if isinstance(f, (Forall, Exists)):
        kw = "forall" if isinstance(f, Forall) else "exists"
        try:
            sort = sig.sort_of(f.var)
        except KeyError:
            raise UndeclaredSymbol(f"bound variable {f.var!r} missing from signature")
        return (kw, ((f.var, sort),), to_prefix(f.body, sig))
    raise TypeError(f"not a formula node: {f!r}")


def render_prefix(tree) -> str:
    if isinstance(tree, str):
        return tree
    return "(" + " ".join(render_prefix(t) for t in tree) + ")"


def emit_smt(f: Formula, sig: Signature) -> SmtScript:
    """Emit the negated-assertion script for `f` under `sig`."""

    pred_order: list[str] = []
    const_order: list[str] = []
    seen_preds: set[str] = set()
    seen_consts: set[str] = set()
    free = free_variables(f) | constant_names(f)
    for atom in iter_atoms(f):
        if atom.predicate not in seen_preds:
            seen_preds.add(atom.predicate)
            pred_order.append(atom.predicate)
        for a in atom.args:
            if isinstance(a, Term) and a.name in free and a.name not in seen_consts:
                seen_consts.add(a.name)
                const_order.append(a.name)

    fun_decls = []
    for p in pred_order:
        if p not in sig.predicates:
            raise UndeclaredSymbol(f"predicate {p!r} missing from signature")
        fun_decls.append((p, sig.predicates[p], "Bool"))
    for c in const_order:
        if c in seen_preds:
            raise UndeclaredSymbol(
                f"name {c!r} is used both as a predicate and as a term"
            )
        if c not in sig.symbols:
            raise UndeclaredSymbol(f"constant {c!r} missing from signature")
        fun_decls.append((c, (), sig.symbols[c]))

    assertion = render_prefix(("not", to_prefix(f, sig)))
    return SmtScript(
        logic="UF",
        sort_decls=tuple(sig.sorts),
        fun_decls=tuple(fun_decls),
        assertion=assertion,
    )


def compile_formula(f: Formula) -> tuple[Signature, SmtScript]:
    """Infer sorts and emit the script in one step."""

    sig = unify_sorts(f)
    return sig, emit_smt(f, sig)

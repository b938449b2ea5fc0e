"""Syntax trees for first-order logic over uninterpreted predicates.

A term is a bare name: it is a ``Variable`` when bound by an enclosing
quantifier and a ``Constant`` otherwise.  The parser resolves this at parse
time; hand-built trees are expected to follow the same rule.  Atom arguments
may themselves be formulas, which later forces a Bool argument sort during
sort inference.

All nodes are immutable and compare structurally, so formulas can be shared
freely across threads and used as dict keys.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class ArityConflict(Exception):
    """A predicate is applied with two different arities."""

    def __init__(self, predicate: str, arity1: int, arity2: int):
        super().__init__(
            f"predicate {predicate!r} used with arity {arity1} and arity {arity2}"
        )
        self.predicate = predicate
        self.arity1 = arity1
        self.arity2 = arity2


class CaptureError(Exception):
    """A substitution would place a name under a binder of the same name."""

    def __init__(self, name: str, replacement: str):
        super().__init__(
            f"replacing {name!r} with {replacement!r} would capture it under a binder"
        )
        self.name = name
        self.replacement = replacement


def _check_ident(name: str, what: str) -> None:
    if not isinstance(name, str) or not _IDENT.match(name):
        raise ValueError(f"invalid {what} name: {name!r}")


@dataclass(frozen=True)
class Term:
    """Base for variables and constants; only the name is stored."""

    name: str

    def __post_init__(self):
        _check_ident(self.name, "term")


@dataclass(frozen=True)
class Variable(Term):
    pass


@dataclass(frozen=True)
class Constant(Term):
    pass


class Formula:
    """Base class for formula nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Atom(Formula):
    """Predicate application.  Arguments are terms or nested formulas.

    An empty argument list is a 0-ary proposition.
    """

    predicate: str
    args: tuple = ()

    def __post_init__(self):
        _check_ident(self.predicate, "predicate")
        object.__setattr__(self, "args", tuple(self.args))
        for a in self.args:
            if not isinstance(a, (Term, Formula)):
                raise ValueError(f"atom argument must be a Term or Formula: {a!r}")


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula

    def __post_init__(self):
        _check_ident(self.var, "bound variable")


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula

    def __post_init__(self):
        _check_ident(self.var, "bound variable")


_BINARY = (And, Or, Implies)
_QUANT = (Forall, Exists)


def free_variables(f: Formula) -> set[str]:
    """Names of Variable leaves not bound by an enclosing quantifier."""

    out: set[str] = set()

    def walk(node, bound: frozenset):
        if isinstance(node, Atom):
            for a in node.args:
                if isinstance(a, Variable):
                    if a.name not in bound:
                        out.add(a.name)
                elif isinstance(a, Formula):
                    walk(a, bound)
        elif isinstance(node, Not):
            walk(node.body, bound)
        elif isinstance(node, _BINARY):
            walk(node.left, bound)
            walk(node.right, bound)
        elif isinstance(node, _QUANT):
            walk(node.body, bound | {node.var})

    walk(f, frozenset())
    return out


def constant_names(f: Formula) -> set[str]:
    """Names of Constant leaves (constants are free by construction)."""

    out: set[str] = set()

    def walk(node):
        if isinstance(node, Atom):
            for a in node.args:
                if isinstance(a, Constant):
                    out.add(a.name)
                elif isinstance(a, Formula):
                    walk(a)
        elif isinstance(node, Not):
            walk(node.body)
        elif isinstance(node, _BINARY):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, _QUANT):
            walk(node.body)

    walk(f)
    return out


def iter_atoms(f: Formula):
    """Yield every Atom in preorder, including atoms nested inside arguments."""

    if isinstance(f, Atom):
        yield f
        for a in f.args:
            if isinstance(a, Formula):
                yield from iter_atoms(a)
    elif isinstance(f, Not):
        yield from iter_atoms(f.body)
    elif isinstance(f, _BINARY):
        yield from iter_atoms(f.left)
        yield from iter_atoms(f.right)
    elif isinstance(f, _QUANT):
        yield from iter_atoms(f.body)


def collect_predicates(f: Formula) -> dict[str, int]:
    """Map each predicate to its arity, in lexicographic order.

    Raises ArityConflict when a predicate occurs with two arities anywhere
    in the formula, nested argument positions included.
    """

    seen: dict[str, int] = {}
    for atom in iter_atoms(f):
        arity = len(atom.args)
        prev = seen.get(atom.predicate)
        if prev is None:
            seen[atom.predicate] = arity
        elif prev != arity:
            raise ArityConflict(atom.predicate, prev, arity)
    return dict(sorted(seen.items()))


def all_names(f: Formula) -> set[str]:
    """Every identifier occurring in the formula: predicates, terms, binders."""

    out: set[str] = set()

    def walk(node):
        if isinstance(node, Atom):
            out.add(node.predicate)
            for a in node.args:
                if isinstance(a, Term):
                    out.add(a.name)
                else:
                    walk(a)
        elif isinstance(node, Not):
            walk(node.body)
        elif isinstance(node, _BINARY):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, _QUANT):
            out.add(node.var)
            walk(node.body)

    walk(f)
    return out


def binder_names(f: Formula) -> list[str]:
    """Binder names in preorder, one entry per binding site."""

    out: list[str] = []

    def walk(node):
        if isinstance(node, Not):
            walk(node.body)
        elif isinstance(node, _BINARY):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, _QUANT):
            out.append(node.var)
            walk(node.body)
        elif isinstance(node, Atom):
            for a in node.args:
                if isinstance(a, Formula):
                    walk(a)

    walk(f)
    return out


def substitute(f: Formula, mapping: dict[str, str]) -> Formula:
    """Rename free occurrences of term names.

    Kind-preserving: a Variable stays a Variable, a Constant a Constant.
    Occurrences shadowed by a binder of the same name are left untouched.
    Raises CaptureError if a replacement name is bound at the point of a
    replaced occurrence.
    """

    for old, new in mapping.items():
        _check_ident(new, "replacement")

    def walk(node, bound: frozenset):
        if isinstance(node, Atom):
            args = []
            for a in node.args:
                if isinstance(a, Term):
                    if a.name in mapping and a.name not in bound:
                        new = mapping[a.name]
                        if new != a.name and new in bound:
                            raise CaptureError(a.name, new)
                        args.append(type(a)(new))
                    else:
                        args.append(a)
                else:
                    args.append(walk(a, bound))
            return Atom(node.predicate, tuple(args))
        if isinstance(node, Not):
            return Not(walk(node.body, bound))
        if isinstance(node, _BINARY):
            return type(node)(walk(node.left, bound), walk(node.right, bound))
        if isinstance(node, _QUANT):
            return type(node)(node.var, walk(node.body, bound | {node.var}))
        raise TypeError(f"not a formula node: {node!r}")

    return walk(f, frozenset())


def rename_binders(f: Formula) -> Formula:
    """Give every binding site a unique name.

    A binder is renamed when it repeats an earlier binder or collides with
    a name that occurs free anywhere in the formula; fresh names append the
    smallest numeric suffix not used elsewhere.  Idempotent on formulas
    whose binders are already unique and collision-free.
    """

    used = all_names(f)
    free = free_variables(f) | constant_names(f)
    taken: set[str] = set()

    def fresh(base: str) -> str:
        k = 2
        while f"{base}{k}" in used:
            k += 1
        name = f"{base}{k}"
        used.add(name)
        return name

    def walk(node, env: dict[str, str]):
        if isinstance(node, Atom):
            args = []
            for a in node.args:
                if isinstance(a, Variable) and a.name in env:
                    args.append(Variable(env[a.name]))
                elif isinstance(a, Formula):
                    args.append(walk(a, env))
                else:
                    args.append(a)
            return Atom(node.predicate, tuple(args))
        if isinstance(node, Not):
            return Not(walk(node.body, env))
        if isinstance(node, _BINARY):
            return type(node)(walk(node.left, env), walk(node.right, env))
        if isinstance(node, _QUANT):
            name = node.var
            if name in taken or name in free:
                name = fresh(node.var)
            taken.add(name)
            inner = dict(env)
            inner[node.var] = name
            return type(node)(name, walk(node.body, inner))
        raise TypeError(f"not a formula node: {node!r}")

    return walk(f, {})


def conjuncts(f: Formula) -> list[Formula]:
    """Flatten a left-leaning And tree into its conjuncts, left to right."""

    if isinstance(f, And):
        return conjuncts(f.left) + [f.right]
    return [f]

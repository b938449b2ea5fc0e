"""Sort inference for formulas over uninterpreted predicates.

Runs union-find over sort classes: every predicate argument position is a
class, every term symbol is a class, and Bool is a distinguished class fed
by nested-formula arguments.  Same-position arguments across instances of
one predicate share a class, and a term argument joins its symbol's class
with the position's class.  A class containing Bool and a term symbol is a
sort clash.  Surviving non-Bool classes receive generated names S0, S1, ...
in order of first occurrence in the formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field

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
    collect_predicates,
)

BOOL = "Bool"


class IncompatibleSorts(Exception):
    """A predicate position is forced to be both Bool and an object sort."""

    def __init__(self, predicate: str, position: int, detail: str):
        super().__init__(
            f"predicate {predicate!r} argument {position}: {detail}"
        )
        self.predicate = predicate
        self.position = position
        self.detail = detail


@dataclass
class Signature:
    """Sorts inferred for every predicate and term symbol in a formula."""

    predicates: dict[str, tuple[str, ...]] = field(default_factory=dict)
    symbols: dict[str, str] = field(default_factory=dict)
    sorts: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def sort_of(self, symbol: str) -> str:
        return self.symbols[symbol]


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}
        self.has_bool: dict = {}
        self.symbol_witness: dict = {}

    def add(self, key, is_bool=False, symbol=None):
        if key not in self.parent:
            self.parent[key] = key
            self.has_bool[key] = is_bool
            self.symbol_witness[key] = symbol

    def find(self, key):
        root = key
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[key] != root:  # path compression
            self.parent[key], key = root, self.parent[key]
        return root

    def union(self, a, b, context: tuple[str, int]):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        self.parent[rb] = ra
        self.has_bool[ra] = self.has_bool[ra] or self.has_bool[rb]
        if self.symbol_witness[ra] is None:
            self.symbol_witness[ra] = self.symbol_witness[rb]
        if self.has_bool[ra] and self.symbol_witness[ra] is not None:
            pred, pos = context
            raise IncompatibleSorts(
                pred,
                pos,
                f"must be Bool (nested formula argument) but carries object "
                f"symbol {self.symbol_witness[ra]!r}",
            )


def unify_sorts(f: Formula) -> Signature:
    """Infer the Signature of a formula; raises IncompatibleSorts on clashes.

    Also raises ArityConflict (via collect_predicates) when the formula is
    not arity-consistent, since positions are meaningless in that case.
    """

    arities = collect_predicates(f)
    uf = _UnionFind()
    uf.add(BOOL, is_bool=True)
    bool_arg_preds: list[str] = []

    def slot(pred: str, i: int):
        return ("slot", pred, i)

    def sym(name: str):
        return ("sym", name)

    def walk(node):
        if isinstance(node, Atom):
            for i, a in enumerate(node.args):
                key = slot(node.predicate, i)
                uf.add(key)
                if isinstance(a, Term):
                    uf.add(sym(a.name), symbol=a.name)
                    uf.union(key, sym(a.name), (node.predicate, i))
                else:
                    uf.union(key, BOOL, (node.predicate, i))
                    bool_arg_preds.append(f"{node.predicate}/{i}")
                    walk(a)
        elif isinstance(node, Not):
            walk(node.body)
        elif isinstance(node, (And, Or, Implies)):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, (Forall, Exists)):
            uf.add(sym(node.var), symbol=node.var)
            walk(node.body)

    walk(f)

    # Name surviving object classes in first-occurrence order.
    names: dict = {}
    sig = Signature()
    for w in bool_arg_preds:
        sig.warnings.append(
            f"argument {w} is Bool-sorted (nested formula); this fragment is "
            f"emitted but has no validated interpretation"
        )

    def name_of(key) -> str:
        root = uf.find(key)
        if uf.has_bool[root]:
            return BOOL
        if root not in names:
            names[root] = f"S{len(names)}"
            sig.sorts.append(names[root])
        return names[root]

    def assign(node):
        if isinstance(node, Atom):
            if node.predicate not in sig.predicates:
                sig.predicates[node.predicate] = tuple(
                    name_of(slot(node.predicate, i)) for i in range(arities[node.predicate])
                )
            for a in node.args:
                if isinstance(a, Term):
                    sig.symbols.setdefault(a.name, name_of(sym(a.name)))
                else:
                    assign(a)
        elif isinstance(node, Not):
            assign(node.body)
        elif isinstance(node, (And, Or, Implies)):
            assign(node.left)
            assign(node.right)
        elif isinstance(node, (Forall, Exists)):
            sig.symbols.setdefault(node.var, name_of(sym(node.var)))
            assign(node.body)

    assign(f)
    return sig

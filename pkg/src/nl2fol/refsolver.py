"""Bundled reference solver for SMT-LIB scripts in the UF fragment.

Accepts the subset of SMT-LIB 2.6 this toolkit emits: uninterpreted 0-ary
sorts, Bool-valued functions (predicates), object constants, quantifiers
and the boolean connectives.  Object-valued functions of positive arity
are rejected.

Decision strategy, in order:

1. Quantifier-free input is ground, so one propositional check decides it.
2. If clausification introduces no Skolem functions (no existential under a
   universal), the problem is in the Bernays-Schoenfinkel class and is
   decided exactly by grounding the clauses over their constants.
3. Otherwise satisfiability is only semi-decidable: finite-model search
   over growing domain sizes (sat side) is interleaved with resolution
   saturation (unsat side) until an answer, the time limit, or the domain
   cap.  Saturation without an empty clause proves satisfiability, but a
   model may then be infinite, so `unknown` is reported rather than an
   unsupported `sat`.

Models are printed as `(define-fun ...)` entries over enumerated domain
elements `@S_0, @S_1, ...`, with per-sort cardinality and element comments.

Without `--tlimit-ms` or `--max-domain` the escalation loop in case 3 runs
indefinitely; callers that need a deadline must pass one or kill the
process.
"""

from __future__ import annotations

import argparse
import heapq
import itertools
import sys
import time
from dataclasses import dataclass, field

from .sexpr import SexprError, parse_all

BOOL = "Bool"
_GROUND_LEAF_CAP = 400_000


class SolveError(Exception):
    """Malformed or unsupported script content."""


@dataclass
class Problem:
    sorts: list[str] = field(default_factory=list)
    funs: dict[str, tuple[tuple[str, ...], str]] = field(default_factory=dict)
    fun_order: list[str] = field(default_factory=list)
    asserts: list = field(default_factory=list)

    def declare_sort(self, name: str, arity: str):
        if arity != "0":
            raise SolveError(f"only 0-ary sorts are supported: {name}")
        if name in self.sorts or name == BOOL:
            raise SolveError(f"sort {name!r} already declared")
        self.sorts.append(name)

    def declare_fun(self, name: str, args: tuple[str, ...], ret: str):
        if name in self.funs:
            raise SolveError(f"function {name!r} already declared")
        for s in args + (ret,):
            if s != BOOL and s not in self.sorts:
                raise SolveError(f"unknown sort {s!r} in declaration of {name!r}")
        if ret != BOOL and args:
            raise SolveError(
                f"object-valued function {name!r} of arity {len(args)} is unsupported"
            )
        self.funs[name] = (args, ret)
        self.fun_order.append(name)


# --- internal formula representation -------------------------------------
#
# ("atom", pred, args)   args: ("v", name) | ("c", name) | formula (Bool arg)
# ("true",) ("false",) ("not", t) ("and", [t...]) ("or", [t...])
# ("forall", [(v, sort)...], t) ("exists", [(v, sort)...], t)


def to_internal(expr, problem: Problem, bound: dict[str, str]):
    if isinstance(expr, str):
        if expr == "true":
            return ("true",)
        if expr == "false":
            return ("false",)
        if expr in bound:
            if bound[expr] != BOOL:
                raise SolveError(f"variable {expr!r} used as a formula")
            return ("atom", None, (("v", expr),))  # Bool-sorted bound variable
        fun = problem.funs.get(expr)
        if fun is None:
            raise SolveError(f"unknown symbol {expr!r}")
        args, ret = fun
        if args:
            raise SolveError(f"function {expr!r} expects {len(args)} arguments")
        if ret != BOOL:
            raise SolveError(f"constant {expr!r} used as a formula")
        return ("atom", expr, ())
    if not expr:
        raise SolveError("empty expression")
    head = expr[0]
    if head == "not":
        if len(expr) != 2:
            raise SolveError("not takes one argument")
        return ("not", to_internal(expr[1], problem, bound))
    if head in ("and", "or"):
        if len(expr) < 2:
            raise SolveError(f"{head} needs at least one argument")
        return (head, [to_internal(e, problem, bound) for e in expr[1:]])
    if head == "=>":
        if len(expr) < 3:
            raise SolveError("=> needs at least two arguments")
        parts = [to_internal(e, problem, bound) for e in expr[1:]]
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = ("or", [("not", p), out])
        return out
    if head in ("forall", "exists"):
        if len(expr) != 3 or not isinstance(expr[1], list):
            raise SolveError(f"malformed {head}")
        binders = []
        inner = dict(bound)
        for b in expr[1]:
            if not (isinstance(b, list) and len(b) == 2 and isinstance(b[0], str)):
                raise SolveError(f"malformed binder in {head}")
            var, sort = b
            if sort != BOOL and sort not in problem.sorts:
                raise SolveError(f"unknown sort {sort!r} for bound variable {var!r}")
            binders.append((var, sort))
            inner[var] = sort
        return (head, binders, to_internal(expr[2], problem, inner))
    # predicate application
    if not isinstance(head, str):
        raise SolveError("application head must be a symbol")
    fun = problem.funs.get(head)
    if fun is None:
        raise SolveError(f"unknown symbol {head!r}")
    argsorts, ret = fun
    if ret != BOOL:
        raise SolveError(f"constant {head!r} applied to arguments")
    if len(expr) - 1 != len(argsorts):
        raise SolveError(
            f"predicate {head!r} expects {len(argsorts)} arguments, got {len(expr) - 1}"
        )
    args = []
    for want, raw in zip(argsorts, expr[1:]):
        args.append(_to_arg(raw, want, problem, bound, head))
    return ("atom", head, tuple(args))


def _to_arg(raw, want: str, problem: Problem, bound: dict[str, str], ctx: str):
    if isinstance(raw, str) and raw not in ("true", "false"):
        if raw in bound:
            if bound[raw] != want:
                raise SolveError(
                    f"argument {raw!r} of {ctx!r} has sort {bound[raw]}, expected {want}"
                )
            return ("v", raw)
        fun = problem.funs.get(raw)
        if fun is not None and not fun[0] and fun[1] != BOOL:
            if fun[1] != want:
                raise SolveError(
                    f"argument {raw!r} of {ctx!r} has sort {fun[1]}, expected {want}"
                )
            return ("c", raw)
    # anything else must be a Bool-sorted formula argument
    if want != BOOL:
        raise SolveError(f"argument of {ctx!r} must have sort {want}, got a formula")
    return to_internal(raw, problem, bound)


def is_term_arg(a) -> bool:
    return isinstance(a, tuple) and len(a) == 2 and a[0] in ("v", "c")


def nnf(t, positive: bool = True):
    """Negation normal form; Bool atom arguments are kept unnormalized."""

    kind = t[0]
    if kind == "true":
        return t if positive else ("false",)
    if kind == "false":
        return t if positive else ("true",)
    if kind == "atom":
        return ("lit", positive, t[1], t[2])
    if kind == "not":
        return nnf(t[1], not positive)
    if kind == "and":
        parts = [nnf(x, positive) for x in t[1]]
        return ("and" if positive else "or", parts)
    if kind == "or":
        parts = [nnf(x, positive) for x in t[1]]
        return ("or" if positive else "and", parts)
    if kind == "forall":
        return ("forall" if positive else "exists", t[1], nnf(t[2], positive))
    if kind == "exists":
        return ("exists" if positive else "forall", t[1], nnf(t[2], positive))
    raise SolveError(f"unexpected node {kind!r}")


def has_quantifier(t) -> bool:
    kind = t[0]
    if kind in ("forall", "exists"):
        return True
    if kind in ("and", "or"):
        return any(has_quantifier(x) for x in t[1])
    if kind == "lit":
        return any(not is_term_arg(a) and has_quantifier_internal(a) for a in t[3])
    return False


def has_quantifier_internal(t) -> bool:
    kind = t[0]
    if kind in ("forall", "exists"):
        return True
    if kind == "not":
        return has_quantifier_internal(t[1])
    if kind in ("and", "or"):
        return any(has_quantifier_internal(x) for x in t[1])
    if kind == "atom":
        return any(not is_term_arg(a) and has_quantifier_internal(a) for a in t[2])
    return False


# --- clausification -------------------------------------------------------
#
# Terms: ("v", id) | ("f", name, (term, ...)); literals: (sign, pred, args);
# clauses: tuples of literals sorted by a structural key.


class _ClausifyBlocked(Exception):
    pass


@dataclass
class ClauseSet:
    clauses: list
    skolem_sorts: dict[str, str]  # skolem constant -> sort
    has_functions: bool
    next_var: int


def clausify(nnf_asserts, max_literals: int = 20_000) -> ClauseSet:
    """Skolemize and distribute to CNF; raises _ClausifyBlocked on formula
    arguments or clause blowup."""

    counter = itertools.count()
    sk_counter = itertools.count()
    skolem_sorts: dict[str, str] = {}
    state = {"has_functions": False, "literals": 0}

    def term_of(a, env):
        if a[0] == "v":
            if a[1] not in env:
                raise SolveError(f"unbound variable {a[1]!r}")
            return env[a[1]]
        if a[0] == "c":
            return ("f", a[1], ())
        raise _ClausifyBlocked

    def walk(t, env, univ):
        kind = t[0]
        if kind == "true":
            return []
        if kind == "false":
            return [()]
        if kind == "lit":
            args = tuple(term_of(a, env) for a in t[3])
            return [((t[1], t[2], args),)]
        if kind == "and":
            out = []
            for x in t[1]:
                out.extend(walk(x, env, univ))
            return out
        if kind == "or":
            out = [()]
            for x in t[1]:
                rhs = walk(x, env, univ)
                out = [a + b for a in out for b in rhs]
                state["literals"] += sum(len(c) for c in out)
                if state["literals"] > max_literals:
                    raise _ClausifyBlocked
            return out
        if kind == "forall":
            inner = dict(env)
            u = list(univ)
            for var, sort in t[1]:
                vid = ("v", next(counter))
                inner[var] = vid
                u.append((vid, sort))
            return walk(t[2], inner, u)
        if kind == "exists":
            inner = dict(env)
            for var, sort in t[1]:
                name = f"_sk{next(sk_counter)}"
                if univ:
                    state["has_functions"] = True
                    inner[var] = ("f", name, tuple(v for v, _ in univ))
                else:
                    skolem_sorts[name] = sort
                    inner[var] = ("f", name, ())
            return walk(t[2], inner, univ)
        raise SolveError(f"unexpected node {kind!r}")

    raw = []
    for a in nnf_asserts:
        raw.extend(walk(a, {}, []))
    clauses = []
    seen = set()
    for c in raw:
        c = normalize_clause(c)
        if c is None:  # tautology
            continue
        if c not in seen:
            seen.add(c)
            clauses.append(c)
    return ClauseSet(clauses, skolem_sorts, state["has_functions"], next(counter))


def _term_key(t):
    if t[0] == "v":
        return (0, t[1])
    return (1, t[1], tuple(_term_key(x) for x in t[2]))


def _lit_key(lit):
    sign, pred, args = lit
    return (pred, tuple(_term_key(a) for a in args), sign)


def normalize_clause(lits):
    """Sort and deduplicate; returns None for tautologies."""

    uniq = sorted(set(lits), key=_lit_key)
    atoms = {}
    for sign, pred, args in uniq:
        if atoms.get((pred, args)) not in (None, sign):
            return None
        atoms[(pred, args)] = sign
    return tuple(uniq)


# --- unification and resolution -------------------------------------------


def _walk_subst(t, subst):
    while t[0] == "v" and t in subst:
        t = subst[t]
    return t


def _occurs(v, t, subst):
    t = _walk_subst(t, subst)
    if t == v:
        return True
    if t[0] == "f":
        return any(_occurs(v, a, subst) for a in t[2])
    return False


def unify(a, b, subst):
    a = _walk_subst(a, subst)
    b = _walk_subst(b, subst)
    if a == b:
        return subst
    if a[0] == "v":
        if _occurs(a, b, subst):
            return None
        out = dict(subst)
        out[a] = b
        return out
    if b[0] == "v":
        return unify(b, a, subst)
    if a[1] != b[1] or len(a[2]) != len(b[2]):
        return None
    for x, y in zip(a[2], b[2]):
        subst = unify(x, y, subst)
        if subst is None:
            return None
    return subst


def apply_subst(t, subst):
    t = _walk_subst(t, subst)
    if t[0] == "f":
        return ("f", t[1], tuple(apply_subst(a, subst) for a in t[2]))
    return t


def clause_vars(clause):
    out = set()

    def scan(t):
        if t[0] == "v":
            out.add(t)
        else:
            for a in t[2]:
                scan(a)

    for _, _, args in clause:
        for a in args:
            scan(a)
    return out


def rename_clause(clause, start: int):
    mapping = {}
    n = start
    for v in sorted(clause_vars(clause), key=lambda t: t[1]):
        mapping[v] = ("v", n)
        n += 1
    if not mapping:
        return clause, start
    renamed = tuple(
        (s, p, tuple(apply_subst(a, mapping) for a in args)) for s, p, args in clause
    )
    return renamed, n


def _match(pattern, target, subst):
    """One-way matching: variables bind on the pattern side only."""

    if pattern[0] == "v":
        bound = subst.get(pattern)
        if bound is None:
            out = dict(subst)
            out[pattern] = target
            return out
        return subst if bound == target else None
    if target[0] != "f" or pattern[1] != target[1] or len(pattern[2]) != len(target[2]):
        return None
    for p, t in zip(pattern[2], target[2]):
        subst = _match(p, t, subst)
        if subst is None:
            return None
    return subst


def subsumes(c, d) -> bool:
    """True when some substitution maps clause c into a subset of d."""

    if len(c) > len(d):
        return False

    def try_lits(i, subst):
        if i == len(c):
            return True
        sign, pred, args = c[i]
        for dsign, dpred, dargs in d:
            if dsign != sign or dpred != pred or len(dargs) != len(args):
                continue
            s = subst
            for pa, da in zip(args, dargs):
                s = _match(pa, da, s)
                if s is None:
                    break
            if s is not None and try_lits(i + 1, s):
                return True
        return False

    return try_lits(0, {})


def clause_weight(clause) -> int:
    def tsize(t):
        return 1 if t[0] == "v" else 1 + sum(tsize(a) for a in t[2])

    return sum(1 + sum(tsize(a) for a in args) for _, _, args in clause)


class Saturation:
    """Given-clause resolution with factoring and forward subsumption.

    Resumable: run() may be called again with a larger clause budget.  The
    usable queue is ordered by (weight, age), which is enough fairness for
    the shallow refutations this toolkit produces.
    """

    def __init__(self, clause_set: ClauseSet):
        self.next_var = clause_set.next_var
        self.processed: list = []
        self.usable: list = []
        self.seen: set = set()
        self.age = 0
        self.found_empty = False
        for c in clause_set.clauses:
            self._push(c)

    def _push(self, clause):
        if clause == ():
            self.found_empty = True
            return
        if clause in self.seen:
            return
        self.seen.add(clause)
        heapq.heappush(self.usable, (clause_weight(clause), self.age, clause))
        self.age += 1

    def _resolvents(self, given, other):
        given, self.next_var = rename_clause(given, self.next_var)
        out = []
        for i, (s1, p1, a1) in enumerate(given):
            for j, (s2, p2, a2) in enumerate(other):
                if s1 == s2 or p1 != p2 or len(a1) != len(a2):
                    continue
                subst = {}
                for x, y in zip(a1, a2):
                    subst = unify(x, y, subst)
                    if subst is None:
                        break
                if subst is None:
                    continue
                rest = [l for k, l in enumerate(given) if k != i]
                rest += [l for k, l in enumerate(other) if k != j]
                out.append(
                    normalize_clause(
                        [
                            (s, p, tuple(apply_subst(a, subst) for a in args))
                            for s, p, args in rest
                        ]
                    )
                )
        return [c for c in out if c is not None]

    def _factors(self, clause):
        out = []
        for i in range(len(clause)):
            for j in range(i + 1, len(clause)):
                s1, p1, a1 = clause[i]
                s2, p2, a2 = clause[j]
                if s1 != s2 or p1 != p2 or len(a1) != len(a2):
                    continue
                subst = {}
                for x, y in zip(a1, a2):
                    subst = unify(x, y, subst)
                    if subst is None:
                        break
                if subst is None:
                    continue
                out.append(
                    normalize_clause(
                        [
                            (s, p, tuple(apply_subst(a, subst) for a in args))
                            for s, p, args in clause
                        ]
                    )
                )
        return [c for c in out if c is not None]

    def run(self, deadline: float | None, max_clauses: int) -> str:
        """Returns 'unsat', 'saturated', 'limit' or 'deadline'."""

        if self.found_empty:
            return "unsat"
        while self.usable:
            if deadline is not None and time.monotonic() > deadline:
                return "deadline"
            if len(self.seen) > max_clauses:
                return "limit"
            _, _, given = heapq.heappop(self.usable)
            if any(subsumes(p, given) for p in self.processed):
                continue
            new = self._factors(given)
            for other in self.processed + [given]:
                new.extend(self._resolvents(given, other))
            self.processed.append(given)
            for c in new:
                if c == ():
                    return "unsat"
                if any(subsumes(p, c) for p in self.processed):
                    continue
                self._push(c)
            if self.found_empty:
                return "unsat"
        return "saturated"


# --- grounding and propositional core --------------------------------------


class _Budget:
    def __init__(self, deadline, cap=_GROUND_LEAF_CAP):
        self.deadline = deadline
        self.cap = cap
        self.count = 0

    def tick(self):
        self.count += 1
        if self.count > self.cap:
            raise _GroundingTooLarge
        if self.deadline is not None and self.count % 4096 == 0:
            if time.monotonic() > self.deadline:
                raise _OutOfTime


class _GroundingTooLarge(Exception):
    pass


class _OutOfTime(Exception):
    pass


class Domains:
    """Finite domains: per-sort element lists, constants mapped to elements."""

    def __init__(self, problem: Problem, base_size: int, skolem_sorts=None):
        self.elements: dict[str, list[str]] = {BOOL: ["true", "false"]}
        self.element_of: dict[str, str] = {}
        consts: dict[str, list[str]] = {s: [] for s in problem.sorts}
        for name in problem.fun_order:
            args, ret = problem.funs[name]
            if ret != BOOL and not args:
                consts[ret].append(name)
        for name, sort in (skolem_sorts or {}).items():
            consts[sort].append(name)
        for sort in problem.sorts:
            names = consts[sort]
            total = max(1, len(names) + base_size)
            elems = [f"@{sort}_{i}" for i in range(total)]
            self.elements[sort] = elems
            for i, c in enumerate(names):
                self.element_of[c] = elems[i]


class PropEncoder:
    def __init__(self):
        self.ids: dict = {}

    def var(self, pred: str, elems: tuple) -> int:
        key = (pred, elems)
        if key not in self.ids:
            self.ids[key] = len(self.ids) + 1
        return self.ids[key]


def ground_formula(t, env, domains: Domains, enc: PropEncoder, budget: _Budget):
    """Ground an internal (pre-NNF) formula tree into a prop AST."""

    budget.tick()
    kind = t[0]
    if kind == "true":
        return True
    if kind == "false":
        return False
    if kind == "not":
        sub = ground_formula(t[1], env, domains, enc, budget)
        return _neg(sub)
    if kind in ("and", "or"):
        parts = [ground_formula(x, env, domains, enc, budget) for x in t[1]]
        return _combine(kind, parts)
    if kind in ("forall", "exists"):
        op = "and" if kind == "forall" else "or"
        parts = []
        names = [v for v, _ in t[1]]
        pools = [domains.elements[s] for _, s in t[1]]
        for combo in itertools.product(*pools):
            inner = dict(env)
            inner.update(zip(names, combo))
            parts.append(ground_formula(t[2], inner, domains, enc, budget))
        return _combine(op, parts)
    if kind in ("atom", "lit"):
        if kind == "lit":
            sign, pred, args = t[1], t[2], t[3]
            if not sign:
                return _neg(ground_formula(("atom", pred, args), env, domains, enc, budget))
        else:
            pred, args = t[1], t[2]
        if pred is None:  # Bool-sorted bound variable
            val = env[args[0][1]]
            return val == "true"
        elems = []
        formula_positions = []
        for a in args:
            if is_term_arg(a):
                if a[0] == "v":
                    elems.append(env[a[1]])
                else:
                    elems.append(domains.element_of[a[1]])
            else:
                sub = ground_formula(a, env, domains, enc, budget)
                if sub is True:
                    elems.append("true")
                elif sub is False:
                    elems.append("false")
                else:
                    formula_positions.append((len(elems), sub))
                    elems.append(None)
        if not formula_positions:
            return ("leaf", enc.var(pred, tuple(elems)))
        branches = []
        for combo in itertools.product(("true", "false"), repeat=len(formula_positions)):
            filled = list(elems)
            guards = []
            for (pos, sub), val in zip(formula_positions, combo):
                filled[pos] = val
                guards.append(sub if val == "true" else _neg(sub))
            guards.append(("leaf", enc.var(pred, tuple(filled))))
            branches.append(_combine("and", guards))
        return _combine("or", branches)
    raise SolveError(f"unexpected node {kind!r}")


def _neg(ast):
    if ast is True:
        return False
    if ast is False:
        return True
    if isinstance(ast, tuple) and ast[0] == "leaf":
        return ("leaf", -ast[1])
    if isinstance(ast, tuple) and ast[0] == "not":
        return ast[1]
    return ("not", ast)


def _combine(op, parts):
    absorb = (op == "or")  # True absorbs or, False absorbs and
    keep = []
    for p in parts:
        if p is absorb:
            return absorb
        if p is not (not absorb):
            keep.append(p)
    if not keep:
        return not absorb
    if len(keep) == 1:
        return keep[0]
    return (op, keep)


def tseitin(ast, nvars: int):
    """CNF-encode a prop AST; returns (clauses, next_free_var)."""

    clauses: list[list[int]] = []
    fresh = [nvars]

    def lit_of(node) -> int:
        if isinstance(node, tuple) and node[0] == "leaf":
            return node[1]
        if isinstance(node, tuple) and node[0] == "not":
            return -lit_of(node[1])
        op, parts = node
        fresh[0] += 1
        d = fresh[0]
        lits = [lit_of(p) for p in parts]
        if op == "and":
            for l in lits:
                clauses.append([-d, l])
            clauses.append([d] + [-l for l in lits])
        else:
            for l in lits:
                clauses.append([d, -l])
            clauses.append([-d] + lits)
        return d

    if ast is True:
        return [], nvars
    if ast is False:
        return [[]], nvars
    root = lit_of(ast)
    clauses.append([root])
    return clauses, fresh[0]


def solve_cnf(clauses: list[list[int]], deadline: float | None):
    """Trail-based DPLL with unit propagation; returns assignment or None."""

    if any(len(c) == 0 for c in clauses):
        return None
    assign: dict[int, bool] = {}
    trail: list[int] = []
    counter = 0
    all_vars = sorted({abs(l) for c in clauses for l in c})

    def value(lit: int):
        v = assign.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def rewind(mark: int):
        while len(trail) > mark:
            del assign[trail.pop()]

    def propagate() -> bool:
        changed = True
        while changed:
            changed = False
            for clause in clauses:
                unassigned = None
                n_unassigned = 0
                satisfied = False
                for lit in clause:
                    v = value(lit)
                    if v is True:
                        satisfied = True
                        break
                    if v is None:
                        unassigned = lit
                        n_unassigned += 1
                        if n_unassigned > 1:
                            break
                if satisfied:
                    continue
                if n_unassigned == 0:
                    return False
                if n_unassigned == 1:
                    assign[abs(unassigned)] = unassigned > 0
                    trail.append(abs(unassigned))
                    changed = True
        return True

    def search() -> bool:
        nonlocal counter
        counter += 1
        if deadline is not None and counter % 64 == 0 and time.monotonic() > deadline:
            raise _OutOfTime
        mark = len(trail)
        if not propagate():
            rewind(mark)
            return False
        var = next((v for v in all_vars if v not in assign), None)
        if var is None:
            return True
        for choice in (True, False):
            mark2 = len(trail)
            assign[var] = choice
            trail.append(var)
            if search():
                return True
            rewind(mark2)
        rewind(mark)
        return False

    return dict(assign) if search() else None


# --- top-level solving ------------------------------------------------------


@dataclass
class SolveResult:
    verdict: str  # sat | unsat | unknown
    domains: Domains | None = None
    assignment: dict | None = None
    encoder: PropEncoder | None = None


def _ground_check(nnf_asserts, problem, domains, deadline) -> SolveResult | None:
    """Ground all assertions over fixed domains; None when too large."""

    enc = PropEncoder()
    budget = _Budget(deadline)
    try:
        asts = [ground_formula(a, {}, domains, enc, budget) for a in nnf_asserts]
    except _GroundingTooLarge:
        return None
    ast = _combine("and", asts)
    clauses, nvars = tseitin(ast, len(enc.ids))
    assignment = solve_cnf(clauses, deadline)
    if assignment is None:
        return SolveResult("unsat")
    return SolveResult("sat", domains, assignment, enc)


def _ground_clauses(clause_set, problem, domains, deadline) -> SolveResult | None:
    enc = PropEncoder()
    budget = _Budget(deadline)
    cnf: list[list[int]] = []

    def elem_of_term(t, env):
        if t[0] == "v":
            return env[t]
        return domains.element_of[t[1]]

    try:
        for clause in clause_set.clauses:
            vars_sorts = _clause_var_sorts(clause, problem, clause_set)
            vs = sorted(vars_sorts, key=lambda t: t[1])
            pools = [domains.elements[vars_sorts[v]] for v in vs]
            for combo in itertools.product(*pools):
                budget.tick()
                env = dict(zip(vs, combo))
                ground = []
                for sign, pred, args in clause:
                    var = enc.var(pred, tuple(elem_of_term(a, env) for a in args))
                    ground.append(var if sign else -var)
                cnf.append(ground)
    except _GroundingTooLarge:
        return None
    assignment = solve_cnf(cnf, deadline)
    if assignment is None:
        return SolveResult("unsat")
    return SolveResult("sat", domains, assignment, enc)


def _clause_var_sorts(clause, problem, clause_set) -> dict:
    sorts: dict = {}

    def scan(t, sort):
        if t[0] == "v":
            sorts[t] = sort
        else:
            args = problem.funs.get(t[1])
            for a, s in zip(t[2], args[0] if args else ()):
                scan(a, s)

    for _, pred, args in clause:
        argsorts = problem.funs[pred][0]
        for a, s in zip(args, argsorts):
            scan(a, s)
    return sorts


def solve(problem: Problem, tlimit_ms: int | None = None, max_domain: int | None = None) -> SolveResult:
    deadline = time.monotonic() + tlimit_ms / 1000.0 if tlimit_ms else None
    internal = [to_internal(a, problem, {}) for a in problem.asserts]
    nnf_asserts = [nnf(t) for t in internal]

    try:
        # Route 1: no quantifiers anywhere -> ground check is decisive.
        if not any(has_quantifier(a) for a in nnf_asserts):
            result = _ground_check(nnf_asserts, problem, Domains(problem, 0), deadline)
            if result is not None:
                return result

        clause_set = None
        try:
            clause_set = clausify(nnf_asserts)
        except _ClausifyBlocked:
            pass

        # Route 2: Bernays-Schoenfinkel (no Skolem functions) -> grounding
        # the clauses over their constants decides the problem.
        if clause_set is not None and not clause_set.has_functions:
            domains = Domains(problem, 0, clause_set.skolem_sorts)
            result = _ground_clauses(clause_set, problem, domains, deadline)
            if result is not None:
                if result.verdict == "sat":
                    return result
                return SolveResult("unsat")

        # Route 3: escalate finite-model search and resolution together.
        saturation = Saturation(clause_set) if clause_set is not None else None
        saturated = False
        fmf_dead = False
        res_cap = 1000
        size = 0
        while True:
            if deadline is not None and time.monotonic() > deadline:
                return SolveResult("unknown")
            if not fmf_dead:
                result = _ground_check(
                    nnf_asserts, problem, Domains(problem, size), deadline
                )
                if result is None:
                    fmf_dead = True
                elif result.verdict == "sat":
                    return result
            if saturation is not None and not saturated:
                slice_end = time.monotonic() + 2.0
                sub = min(deadline, slice_end) if deadline is not None else slice_end
                status = saturation.run(sub, res_cap)
                if status == "unsat":
                    return SolveResult("unsat")
                if status == "saturated":
                    saturated = True
                elif status == "limit":
                    res_cap *= 2
            size += 1
            if max_domain is not None and size > max_domain:
                return SolveResult("unknown")
            if fmf_dead and (saturation is None or saturated):
                return SolveResult("unknown")
            if saturated and size > 32:
                # Provably satisfiable but no small finite model to print.
                return SolveResult("unknown")
    except _OutOfTime:
        return SolveResult("unknown")


# --- model printing ---------------------------------------------------------


def _arg_names(n: int) -> list[str]:
    base = ["x", "y", "z", "w"]
    return [base[i] if i < len(base) else f"x{i}" for i in range(n)]


def format_model(problem: Problem, result: SolveResult) -> str:
    domains = result.domains
    assignment = result.assignment or {}
    enc = result.encoder
    lines = ["("]
    for sort in problem.sorts:
        elems = domains.elements[sort]
        lines.append(f"; cardinality of {sort} is {len(elems)}")
        lines.append(f"; elements of {sort}: {' '.join(elems)}")
    for name in problem.fun_order:
        argsorts, ret = problem.funs[name]
        if ret != BOOL and not argsorts:
            lines.append(f"(define-fun {name} () {ret} {domains.element_of[name]})")
            continue
        names = _arg_names(len(argsorts))
        argdecl = " ".join(f"({n} {s})" for n, s in zip(names, argsorts))
        rows = []
        pools = [domains.elements[s] for s in argsorts]
        for combo in itertools.product(*pools):
            var = enc.ids.get((name, combo))
            if var is not None and assignment.get(var, False):
                rows.append(combo)
        total = 1
        for p in pools:
            total *= len(p)
        body = _table_body(rows, names, total)
        lines.append(f"(define-fun {name} ({argdecl}) Bool {body})")
    lines.append(")")
    return "\n".join(lines)


def _table_body(rows, names, total) -> str:
    if not rows:
        return "false"
    if len(rows) == total:
        return "true"
    disjuncts = []
    for combo in rows:
        eqs = [f"(= {n} {e})" for n, e in zip(names, combo)]
        disjuncts.append(eqs[0] if len(eqs) == 1 else "(and " + " ".join(eqs) + ")")
    if len(disjuncts) == 1:
        return disjuncts[0]
    return "(or " + " ".join(disjuncts) + ")"


# --- command processing -------------------------------------------------------


def run_script(text: str, tlimit_ms=None, max_domain=None, parse_only=False, out=sys.stdout):
    """Execute a script; returns the last check-sat verdict (or None)."""

    commands = parse_all(text)
    problem = Problem()
    last: SolveResult | None = None
    for cmd in commands:
        if not isinstance(cmd, list) or not cmd or not isinstance(cmd[0], str):
            raise SolveError(f"malformed command: {cmd!r}")
        head = cmd[0]
        if head in ("set-logic", "set-option", "set-info"):
            continue
        if head == "exit":
            break
        if head == "declare-sort":
            if len(cmd) != 3:
                raise SolveError("declare-sort takes a name and an arity")
            problem.declare_sort(cmd[1], cmd[2])
        elif head == "declare-fun":
            if len(cmd) != 4 or not isinstance(cmd[2], list):
                raise SolveError("declare-fun takes a name, argument sorts and a return sort")
            problem.declare_fun(cmd[1], tuple(cmd[2]), cmd[3])
        elif head == "declare-const":
            if len(cmd) != 3:
                raise SolveError("declare-const takes a name and a sort")
            problem.declare_fun(cmd[1], (), cmd[2])
        elif head == "assert":
            if len(cmd) != 2:
                raise SolveError("assert takes one formula")
            to_internal(cmd[1], problem, {})  # validate eagerly
            problem.asserts.append(cmd[1])
        elif head == "check-sat":
            if parse_only:
                continue
            last = solve(problem, tlimit_ms=tlimit_ms, max_domain=max_domain)
            print(last.verdict, file=out)
        elif head == "get-model":
            if parse_only:
                continue
            if last is not None and last.verdict == "sat":
                print(format_model(problem, last), file=out)
            else:
                print('(error "model unavailable")', file=sys.stderr)
        else:
            raise SolveError(f"unsupported command {head!r}")
    return last.verdict if last is not None else None


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="nl2fol-refsolver",
        description="Reference SMT solver for the quantified UF fragment.",
    )
    ap.add_argument("file", help="SMT-LIB script, or - for stdin")
    ap.add_argument("--tlimit-ms", type=int, default=None, help="soft time limit")
    ap.add_argument("--max-domain", type=int, default=None, help="finite-model size cap")
    ap.add_argument("--parse-only", action="store_true", help="validate and exit")
    args = ap.parse_args(argv)
    try:
        if args.file == "-":
            text = sys.stdin.read()
        else:
            with open(args.file, "r", encoding="utf-8") as fh:
                text = fh.read()
        run_script(
            text,
            tlimit_ms=args.tlimit_ms,
            max_domain=args.max_domain,
            parse_only=args.parse_only,
        )
    except (SolveError, SexprError, OSError) as exc:
        print(f'(error "{exc}")', file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

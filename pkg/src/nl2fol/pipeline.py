"""Staged classification pipeline: language to logic to solver to verdict.

Six language stages (claims/implication, entities, entity relations,
properties, background knowledge, FOL formulation) feed the compiler and
the solver; the verdict maps satisfiability of the negated formula to a
fallacy/valid classification, and every intermediate artifact is kept in a
PipelineTrace so Module B/C can be replayed without any LLM access.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import solver as solver_mod
from .fol import Atom, Constant, Forall, Formula, Implies, Variable, binder_names, conjuncts
from .llm import ENTAILMENT, LlmGateway, MissingFixture, EmptyResponse, HttpError, NliJudgment, strip_fences
from .parser import LexError, ParseError, parse_text, pretty_print
from .smt import SmtScript, compile_formula
from .solver import Model, SolverConfig, SolverOutcome, run_solver
from .sorts import IncompatibleSorts, Signature
from .fol import ArityConflict

TRACE_VERSION = 1

FALLACY = "fallacy"
VALID = "valid"
INCONCLUSIVE = "inconclusive"

EQUAL = "EQUAL"
SUBSET_LR = "SUBSET_LR"
SUBSET_RL = "SUBSET_RL"
UNRELATED = "UNRELATED"

_RELATION_BY_DIGIT = {"1": EQUAL, "2": SUBSET_LR, "3": SUBSET_RL, "4": UNRELATED}
_SYMBOL_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_ATOM_RE = re.compile(r"([A-Za-z][A-Za-z0-9_]*)\s*\(([^()]*)\)\Z")


class StageFailure(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage!r} failed: {message}")
        self.stage = stage
        self.detail = message


@dataclass
class ClaimImplication:
    claims: list[str]
    implication: str


@dataclass
class ReferringExpression:
    surface: str
    symbol: str
    kind: str  # "quantified" | "constant"


@dataclass
class EntityRelation:
    left: str
    right: str
    relation: str


@dataclass
class PropertyAtom:
    predicate: str
    args: tuple[str, ...]
    source: str  # "claim" | "implication"

    def render(self, names: dict[str, str] | None = None) -> str:
        if not self.args:
            return self.predicate
        shown = [names.get(a, a) if names else a for a in self.args]
        return f"{self.predicate}({', '.join(shown)})"


@dataclass
class BackgroundFact:
    antecedent: PropertyAtom
    consequent: PropertyAtom
    judgment: NliJudgment
    fol_text: str


@dataclass
class Classification:
    label: str  # fallacy | valid | inconclusive
    reason: str | None = None  # for inconclusive: unknown | timeout | stage-failure:<stage>
    explanation: str | None = None


@dataclass
class PipelineTrace:
    input_text: str
    trace_version: int = TRACE_VERSION
    claim_implication: ClaimImplication | None = None
    entities: list[ReferringExpression] = field(default_factory=list)
    entity_relations: list[EntityRelation] = field(default_factory=list)
    property_atoms: list[PropertyAtom] = field(default_factory=list)
    background_facts: list[BackgroundFact] = field(default_factory=list)
    fol_text: str | None = None
    formula_pretty: str | None = None
    signature: dict | None = None
    smt_script: str | None = None
    solver_verdict: str | None = None
    solver_raw: str | None = None
    solver_wall_time: float | None = None
    counterexample_rendering: str | None = None
    classification: Classification | None = None
    explanation: str | None = None
    timings: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    failure: dict | None = None
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        ci = self.claim_implication
        return {
            "trace_version": self.trace_version,
            "input_text": self.input_text,
            "claim_implication": (
                None if ci is None else {"claims": ci.claims, "implication": ci.implication}
            ),
            "entities": [
                {"surface": e.surface, "symbol": e.symbol, "kind": e.kind}
                for e in self.entities
            ],
            "entity_relations": [
                {"left": r.left, "right": r.right, "relation": r.relation}
                for r in self.entity_relations
            ],
            "property_atoms": [
                {"predicate": a.predicate, "args": list(a.args), "source": a.source}
                for a in self.property_atoms
            ],
            "background_facts": [
                {
                    "antecedent": f.antecedent.render(),
                    "consequent": f.consequent.render(),
                    "fol_text": f.fol_text,
                    "nli_label": f.judgment.label,
                    "nli_backend": f.judgment.backend,
                }
                for f in self.background_facts
            ],
            "fol_text": self.fol_text,
            "formula_pretty": self.formula_pretty,
            "signature": self.signature,
            "smt_script": self.smt_script,
            "solver": {
                "verdict": self.solver_verdict,
                "raw": self.solver_raw,
                "wall_time": self.solver_wall_time,
            },
            "counterexample_rendering": self.counterexample_rendering,
            "classification": (
                None
                if self.classification is None
                else {
                    "label": self.classification.label,
                    "reason": self.classification.reason,
                    "explanation": self.classification.explanation,
                }
            ),
            "explanation": self.explanation,
            "timings": self.timings,
            "warnings": self.warnings,
            "failure": self.failure,
            "config": self.config,
        }

    def save(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        name = hashlib.sha256(self.input_text.encode("utf-8")).hexdigest()[:16]
        path = out / f"{name}.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(
            json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        tmp.replace(path)  # atomic per run
        return path


def _dequote(text: str) -> str:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1].strip()
    return text


def _identifier(surface: str) -> str:
    words = re.findall(r"[A-Za-z0-9]+", surface)
    if not words:
        return "thing"
    head = words[0][0].lower() + words[0][1:]
    return head + "".join(w[0].upper() + w[1:] for w in words[1:])


class Pipeline:
    def __init__(
        self,
        gateway: LlmGateway,
        solver_config: SolverConfig | None = None,
        nli_backend: str = "llm_with_context",
        config_snapshot: dict | None = None,
    ):
        self.gateway = gateway
        self.solver_config = solver_config or SolverConfig.from_env()
        self.nli_backend = nli_backend
        self.config_snapshot = config_snapshot or {}

    # -- stage 1: claims and implication -------------------------------------

    def parse_claim_implication(self, text: str, trace: PipelineTrace | None = None) -> ClaimImplication:
        if not text.strip():
            raise StageFailure("claim_implication", "empty input")
        response = self.gateway.complete("claim_implication", {"input": text})
        parsed = self._parse_claims(response)
        if parsed is None:
            prompt = self.gateway.render("claim_implication", {"input": text})
            retry = self.gateway.complete_raw(
                prompt
                + "\n\nYour previous answer was not in the expected format. Answer "
                "with zero or more 'Claim:' lines followed by exactly one "
                "'Implication:' line.",
                template_id="claim_implication:repair",
            )
            parsed = self._parse_claims(retry)
        if parsed is None:
            raise StageFailure("claim_implication", "no 'Implication:' line in response")
        claims, implication = parsed
        if not claims and trace is not None:
            trace.warnings.append("NoClaim: input has an implication but no claim")
        return ClaimImplication(claims=claims, implication=implication)

    @staticmethod
    def _parse_claims(response: str):
        claims: list[str] = []
        implication: str | None = None
        for line in strip_fences(response).splitlines():
            m = re.match(r"\s*[-*]?\s*claims?\s*:\s*(.+)", line, re.IGNORECASE)
            if m:
                value = _dequote(m.group(1))
                if value and value.lower() not in ("none", "n/a"):
                    claims.append(value)
                continue
            m = re.match(r"\s*[-*]?\s*implication\s*:\s*(.+)", line, re.IGNORECASE)
            if m and implication is None:
                implication = _dequote(m.group(1))
        if not implication:
            return None
        return claims, implication

    # -- stage 2: entities ----------------------------------------------------

    def extract_entities(self, ci: ClaimImplication) -> list[ReferringExpression]:
        text = " ".join(ci.claims + [ci.implication])
        response = self.gateway.complete("entities", {"input": text})
        entities = self._parse_entities(response)
        if not entities:
            prompt = self.gateway.render("entities", {"input": text})
            retry = self.gateway.complete_raw(
                prompt
                + "\n\nYour previous answer contained no referring expressions. "
                "List one per line as 'expression: symbol' or a bare expression.",
                template_id="entities:repair",
            )
            entities = self._parse_entities(retry)
        if not entities:
            raise StageFailure("entities", "no referring expressions found")
        return entities

    @staticmethod
    def _parse_entities(response: str) -> list[ReferringExpression]:
        out: list[ReferringExpression] = []
        seen_surfaces: set[str] = set()
        used_symbols: set[str] = set()

        def fresh(base: str) -> str:
            if base not in used_symbols and _SYMBOL_RE.match(base):
                return base
            for c in "abcdefghijklmnopqrstuvwxyz":
                if c not in used_symbols:
                    return c
            i = 1
            while f"e{i}" in used_symbols:
                i += 1
            return f"e{i}"

        for line in strip_fences(response).splitlines():
            line = re.sub(r"^\s*(?:[-*•]|\d+[.)])\s*", "", line).strip()
            if not line or line.lower().startswith("referring expression"):
                continue
            if ":" in line:
                surface, symbol = line.rsplit(":", 1)
                surface, symbol = _dequote(surface), symbol.strip()
                if not _SYMBOL_RE.match(symbol):
                    symbol = fresh(_identifier(surface))
                kind = "quantified"
            else:
                surface = _dequote(line)
                symbol = fresh(_identifier(surface))
                kind = "constant"
            if not surface or surface.lower() in seen_surfaces:
                continue
            symbol = fresh(symbol)
            seen_surfaces.add(surface.lower())
            used_symbols.add(symbol)
            out.append(ReferringExpression(surface, symbol, kind))
        return out

    # -- stage 3: entity relations ---------------------------------------------

    def classify_entity_relations(self, entities: list[ReferringExpression], trace: PipelineTrace | None = None) -> list[EntityRelation]:
        relations: list[EntityRelation] = []
        for a, b in itertools.combinations(entities, 2):
            if a.surface.strip().lower() == b.surface.strip().lower():
                relations.append(EntityRelation(a.surface, b.surface, EQUAL))
                continue
            response = self.gateway.complete(
                "entity_relation", {"entity_a": a.surface, "entity_b": b.surface}
            )
            m = re.search(r"\b([1-4])\b", strip_fences(response))
            if m:
                relations.append(EntityRelation(a.surface, b.surface, _RELATION_BY_DIGIT[m.group(1)]))
            else:
                relations.append(EntityRelation(a.surface, b.surface, UNRELATED))
                if trace is not None:
                    trace.warnings.append(
                        f"non-numeric entity relation answer for ({a.surface}, {b.surface}); "
                        f"treated as unrelated"
                    )
        return relations

    # -- stage 4: properties ------------------------------------------------------

    def extract_properties(self, ci: ClaimImplication, entities: list[ReferringExpression]) -> list[PropertyAtom]:
        if not entities:
            raise StageFailure("properties", "no entities to attach properties to")
        rendered_entities = ", ".join(
            f"{e.surface}: {e.symbol}" if e.kind == "quantified" else e.surface
            for e in entities
        )
        symbols = {e.symbol for e in entities}
        atoms: list[PropertyAtom] = []
        seen: set[tuple] = set()
        sources = [("claim", c) for c in ci.claims] + [("implication", ci.implication)]
        for source, sentence in sources:
            bindings = {"sentence": sentence, "referring_expressions": rendered_entities}
            response = self.gateway.complete("properties", bindings)
            parsed, unknown = self._parse_properties(response, source, symbols)
            if unknown:
                prompt = self.gateway.render("properties", bindings)
                retry = self.gateway.complete_raw(
                    prompt
                    + f"\n\nYour previous answer used unknown symbols {sorted(unknown)}. "
                    f"Use only these argument symbols: {sorted(symbols)}.",
                    template_id="properties:repair",
                )
                parsed, unknown = self._parse_properties(retry, source, symbols)
                if unknown:
                    raise StageFailure(
                        "properties", f"atoms reference undeclared symbols {sorted(unknown)}"
                    )
            for atom in parsed:
                key = (atom.predicate, atom.args)
                if key not in seen:
                    seen.add(key)
                    atoms.append(atom)
        return atoms

    @staticmethod
    def _parse_properties(response: str, source: str, symbols: set[str]):
        text = strip_fences(response)
        m = re.search(r"properties\s*:\s*(.+)", text, re.IGNORECASE | re.DOTALL)
        payload = m.group(1) if m else text
        payload = payload.splitlines()[0] if m else " ".join(payload.splitlines())
        atoms: list[PropertyAtom] = []
        unknown: set[str] = set()
        # split on commas that are outside parentheses
        parts: list[str] = []
        depth = 0
        current = ""
        for ch in payload:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth = max(0, depth - 1)
            if ch == "," and depth == 0:
                parts.append(current)
                current = ""
            else:
                current += ch
        parts.append(current)
        for part in parts:
            part = part.strip().rstrip(".")
            if not part:
                continue
            m = _ATOM_RE.match(part)
            if m:
                pred = m.group(1)
                args = tuple(a.strip() for a in m.group(2).split(",") if a.strip())
            elif re.match(r"[A-Za-z][A-Za-z0-9_]*\Z", part):
                pred, args = part, ()
            else:
                continue
            bad = {a for a in args if a not in symbols}
            if bad:
                unknown |= bad
                continue
            atoms.append(PropertyAtom(pred, args, source))
        return atoms, unknown

    # -- stage 5: background knowledge --------------------------------------------

    def retrieve_background(
        self,
        atoms: list[PropertyAtom],
        entities: list[ReferringExpression],
        sentence: str,
        relations: list[EntityRelation] | None = None,
    ) -> list[BackgroundFact]:
        if len(atoms) < 2:
            return []
        surfaces = {e.symbol: e.surface for e in entities}
        facts: list[BackgroundFact] = []
        for a, b in itertools.permutations(atoms, 2):
            premise = a.render(surfaces)
            hypothesis = b.render(surfaces)
            if premise == hypothesis:
                continue
            judgment = self.gateway.nli_entails(
                premise, hypothesis, backend=self.nli_backend, context=sentence
            )
            if judgment.label == ENTAILMENT:
                fact_text = realize_fact(a, b, relations or [], entities)
                facts.append(BackgroundFact(a, b, judgment, fact_text))
        return facts

    # -- stage 6: FOL formulation ---------------------------------------------------

    def formulate_fol(
        self,
        text: str,
        ci: ClaimImplication,
        entities: list[ReferringExpression],
        relations: list[EntityRelation],
        atoms: list[PropertyAtom],
        facts: list[BackgroundFact],
        trace: PipelineTrace | None = None,
    ) -> tuple[str, Formula]:
        rendered_entities = ", ".join(
            f"{e.surface}: {e.symbol}" if e.kind == "quantified" else e.surface
            for e in entities
        )
        rel_lines = [
            _describe_relation(r) for r in relations if r.relation != UNRELATED
        ]
        bindings = {
            "sentence": text,
            "referring_expressions": rendered_entities,
            "relations": "; ".join(rel_lines) if rel_lines else "none",
            "properties": ", ".join(a.render() for a in atoms) or "none",
            "background": "; ".join(f.fol_text for f in facts) or "none",
        }
        response = self.gateway.complete("fol_formulation", bindings)
        last_error = None
        for attempt in range(3):
            fol_text = self._extract_fol(response)
            try:
                formula = parse_text(fol_text)
                self._check_structure(formula, facts, trace)
                return fol_text, formula
            except (ParseError, LexError) as exc:
                last_error = exc
                if attempt == 2:
                    break
                prompt = self.gateway.render("fol_formulation", bindings)
                response = self.gateway.complete_raw(
                    prompt
                    + f"\n\nYour previous answer could not be parsed ({exc}). Answer "
                    "again with one line of the form 'Logical Form: <formula>'.",
                    template_id=f"fol_formulation:repair{attempt + 1}",
                )
        raise StageFailure("fol", f"formula never parsed: {last_error}")

    @staticmethod
    def _extract_fol(response: str) -> str:
        text = strip_fences(response)
        m = re.search(r"logical\s+form\s*:\s*(.+)", text, re.IGNORECASE)
        if m:
            return m.group(1).splitlines()[0].strip()
        for line in text.splitlines():
            if line.strip():
                return line.strip()
        return text.strip()

    @staticmethod
    def _check_structure(formula: Formula, facts: list[BackgroundFact], trace: PipelineTrace | None):
        """Each background fact should appear as one universal conjunct of the
        antecedent; violations degrade to a trace warning."""

        if not facts:
            return
        if not isinstance(formula, Implies):
            if trace is not None:
                trace.warnings.append(
                    "formula is not an implication; background facts not checked"
                )
            return
        keys = {_alpha_key(c) for c in conjuncts(formula.left)}
        for fact in facts:
            try:
                expected = _alpha_key(parse_text(fact.fol_text))
            except (ParseError, LexError):
                continue
            if expected not in keys:
                if trace is not None:
                    trace.warnings.append(
                        f"background fact not found as an antecedent conjunct: {fact.fol_text}"
                    )

    # -- full chain ---------------------------------------------------------------

    def classify(self, text: str) -> tuple[Classification, PipelineTrace]:
        trace = PipelineTrace(input_text=text, config=self.config_snapshot)
        if not text.strip():
            trace.failure = {"stage": "input", "message": "empty input"}
            trace.classification = Classification(INCONCLUSIVE, "stage-failure:input")
            return trace.classification, trace

        def timed(stage, fn, *args, **kwargs):
            start = time.perf_counter()
            try:
                return fn(*args, **kwargs)
            finally:
                trace.timings[stage] = time.perf_counter() - start

        try:
            ci = timed("claim_implication", self.parse_claim_implication, text, trace)
            trace.claim_implication = ci
            entities = timed("entities", self.extract_entities, ci)
            trace.entities = entities
            relations = timed("entity_relations", self.classify_entity_relations, entities, trace)
            trace.entity_relations = relations
            atoms = timed("properties", self.extract_properties, ci, entities)
            trace.property_atoms = atoms
            facts = timed(
                "background", self.retrieve_background, atoms, entities, text, relations
            )
            trace.background_facts = facts
            fol_text, formula = timed(
                "fol", self.formulate_fol, text, ci, entities, relations, atoms, facts, trace
            )
            trace.fol_text = fol_text
            trace.formula_pretty = pretty_print(formula)
            _reconcile_kinds(entities, formula)
        except StageFailure as exc:
            trace.failure = {"stage": exc.stage, "message": exc.detail}
            trace.classification = Classification(INCONCLUSIVE, f"stage-failure:{exc.stage}")
            return trace.classification, trace
        except (MissingFixture, EmptyResponse, HttpError) as exc:
            trace.failure = {"stage": "llm", "message": str(exc)}
            trace.classification = Classification(INCONCLUSIVE, "stage-failure:llm")
            return trace.classification, trace

        try:
            start = time.perf_counter()
            signature, script = compile_formula(formula)
            trace.timings["compile"] = time.perf_counter() - start
        except (IncompatibleSorts, ArityConflict) as exc:
            trace.failure = {"stage": "compile", "message": str(exc)}
            trace.classification = Classification(INCONCLUSIVE, "stage-failure:compile")
            return trace.classification, trace
        trace.signature = {
            "sorts": list(signature.sorts),
            "predicates": {k: list(v) for k, v in signature.predicates.items()},
            "symbols": dict(signature.symbols),
        }
        trace.warnings.extend(signature.warnings)
        trace.smt_script = script.text

        outcome = run_solver(script, self.solver_config)
        trace.solver_verdict = outcome.verdict
        trace.solver_raw = outcome.raw
        trace.solver_wall_time = outcome.wall_time
        trace.timings["solver"] = outcome.wall_time

        if outcome.verdict == solver_mod.SAT:
            explanation = self.interpret_counterexample(outcome.model, trace)
            trace.explanation = explanation
            trace.classification = Classification(FALLACY, explanation=explanation)
        elif outcome.verdict == solver_mod.UNSAT:
            trace.classification = Classification(VALID)
        elif outcome.verdict == solver_mod.UNKNOWN:
            trace.classification = Classification(INCONCLUSIVE, "unknown")
        elif outcome.verdict == solver_mod.TIMEOUT:
            trace.classification = Classification(INCONCLUSIVE, "timeout")
        else:
            trace.failure = {"stage": "solver", "message": outcome.stderr or outcome.raw}
            trace.classification = Classification(INCONCLUSIVE, "stage-failure:solver")
        _assert_verdict_bijection(trace)
        return trace.classification, trace

    # -- counterexample interpretation ----------------------------------------------

    def interpret_counterexample(self, model: Model | None, trace: PipelineTrace) -> str:
        rendering = render_model(model)
        trace.counterexample_rendering = rendering
        ci = trace.claim_implication
        bindings = {
            "claim": " ".join(ci.claims) if ci and ci.claims else "(none)",
            "implication": ci.implication if ci else "(none)",
            "referring_expressions": ", ".join(
                f"{e.surface}: {e.symbol}" for e in trace.entities
            )
            or "(none)",
            "properties": ", ".join(a.render() for a in trace.property_atoms) or "(none)",
            "fol": trace.fol_text or "(none)",
            "counterexample": rendering,
        }
        try:
            text = self.gateway.complete("interpret", bindings).strip()
            if text:
                return text
        except (MissingFixture, EmptyResponse, HttpError) as exc:
            trace.warnings.append(f"LLM interpretation unavailable ({type(exc).__name__}); "
                                  "using deterministic rendering")
        return "Counterexample found:\n" + rendering

    # -- end-to-end baseline ------------------------------------------------------

    def baseline_classify(self, text: str) -> Classification:
        """Single-prompt few-shot classification, for comparison runs."""

        response = self.gateway.complete("end_to_end", {"input": text})
        head = strip_fences(response).strip().lower()
        if head.startswith("logical fallacy"):
            return Classification(FALLACY)
        if head.startswith("valid"):
            return Classification(VALID)
        return Classification(INCONCLUSIVE, "stage-failure:baseline")


def _describe_relation(r: EntityRelation) -> str:
    if r.relation == EQUAL:
        return f"{r.left} is equal to {r.right}"
    if r.relation == SUBSET_LR:
        return f"{r.left} is a subset of {r.right}"
    if r.relation == SUBSET_RL:
        return f"{r.right} is a subset of {r.left}"
    return f"{r.left} is not related to {r.right}"


def _related(sym_a: str, sym_b: str, relations: list[EntityRelation], entities: list[ReferringExpression]) -> bool:
    if sym_a == sym_b:
        return True
    surfaces = {e.symbol: e.surface for e in entities}
    sa, sb = surfaces.get(sym_a), surfaces.get(sym_b)
    if sa is None or sb is None:
        return False
    for r in relations:
        pair = {r.left.lower(), r.right.lower()}
        if {sa.lower(), sb.lower()} == pair and r.relation in (EQUAL, SUBSET_LR, SUBSET_RL):
            return True
    return False


def realize_fact(
    a: PropertyAtom,
    b: PropertyAtom,
    relations: list[EntityRelation],
    entities: list[ReferringExpression],
) -> str:
    """Render an entailment a => b as a universally quantified implication.

    Argument positions whose symbols are the same entity (or subset/equal
    related entities) are bound by a shared universal variable; all other
    arguments stay as they are.
    """

    shared = min(len(a.args), len(b.args))
    bound_positions = [
        i for i in range(shared) if _related(a.args[i], b.args[i], relations, entities)
    ]
    kept = {arg for i, arg in enumerate(a.args) if i not in bound_positions}
    kept |= {arg for i, arg in enumerate(b.args) if i not in bound_positions}
    var_names: list[str] = []
    for candidate in ("x", "y", "z", "w", "v", "u"):
        if candidate not in kept:
            var_names.append(candidate)
        if len(var_names) == len(bound_positions):
            break
    i = 0
    while len(var_names) < len(bound_positions):
        if f"x{i}" not in kept:
            var_names.append(f"x{i}")
        i += 1
    by_position = dict(zip(bound_positions, var_names))

    def terms(atom: PropertyAtom):
        out = []
        for i, arg in enumerate(atom.args):
            if i in by_position:
                out.append(Variable(by_position[i]))
            else:
                out.append(Constant(arg))
        return tuple(out)

    body: Formula = Implies(Atom(a.predicate, terms(a)), Atom(b.predicate, terms(b)))
    for name in reversed(var_names):
        body = Forall(name, body)
    return pretty_print(body)


def _alpha_key(f: Formula) -> str:
    """Printable form with binder names canonicalized, for structural matching."""

    counter = itertools.count()

    def walk(node, env):
        from .fol import And, Exists, Not, Or, Term

        if isinstance(node, Atom):
            parts = []
            for arg in node.args:
                if isinstance(arg, Term):
                    parts.append(env.get(arg.name, arg.name))
                else:
                    parts.append(walk(arg, env))
            return f"{node.predicate}({','.join(parts)})"
        if isinstance(node, Not):
            return f"~{walk(node.body, env)}"
        if isinstance(node, (And, Or, Implies)):
            op = {And: "&", Or: "|", Implies: "->"}[type(node)]
            return f"({walk(node.left, env)}{op}{walk(node.right, env)})"
        if isinstance(node, (Forall, Exists)):
            kw = "A" if isinstance(node, Forall) else "E"
            fresh = f"_b{next(counter)}"
            inner = dict(env)
            inner[node.var] = fresh
            return f"{kw}{fresh}.{walk(node.body, inner)}"
        raise TypeError(node)

    return walk(f, {})


def _reconcile_kinds(entities: list[ReferringExpression], formula: Formula) -> None:
    bound = set(binder_names(formula))
    for e in entities:
        e.kind = "quantified" if e.symbol in bound else "constant"


def _assert_verdict_bijection(trace: PipelineTrace) -> None:
    label = trace.classification.label
    verdict = trace.solver_verdict
    ok = (
        (label == FALLACY and verdict == solver_mod.SAT)
        or (label == VALID and verdict == solver_mod.UNSAT)
        or (label == INCONCLUSIVE and verdict not in (solver_mod.SAT, solver_mod.UNSAT))
    )
    if not ok:
        raise AssertionError(
            f"classification {label!r} inconsistent with solver verdict {verdict!r}"
        )


def render_model(model: Model | None) -> str:
    """Deterministic counterexample rendering: domains, constants and full
    predicate truth tables; independent of any LLM."""

    if model is None:
        return "(no model available)"
    lines: list[str] = []
    for sort in sorted(model.domains):
        elems = model.domains[sort]
        if elems:
            lines.append(f"domain {sort}: {', '.join(elems)}")
    for d in model.definitions:
        if d.value is not None:
            lines.append(f"{d.symbol} = {d.value}")
        elif d.table is not None:
            for combo in sorted(d.table):
                args = ", ".join(combo)
                lines.append(f"{d.symbol}({args}) is {'true' if d.table[combo] else 'false'}")
        else:
            lines.append(f"{d.symbol}: {d.raw}")
    if not lines:
        lines.append("(empty model)")
    return "\n".join(lines)


def replay_from_trace(trace_data: dict, solver_config: SolverConfig | None = None):
    """Re-run compilation and solving from a stored trace's FOL text.

    Returns (classification_label, verdict, script_text); needs no LLM.
    """

    fol_text = trace_data.get("fol_text")
    if not fol_text:
        raise ValueError("trace has no fol_text to replay")
    formula = parse_text(fol_text)
    _, script = compile_formula(formula)
    outcome = run_solver(script, solver_config or SolverConfig.from_env())
    if outcome.verdict == solver_mod.SAT:
        label = FALLACY
    elif outcome.verdict == solver_mod.UNSAT:
        label = VALID
    else:
        label = INCONCLUSIVE
    return label, outcome.verdict, script.text

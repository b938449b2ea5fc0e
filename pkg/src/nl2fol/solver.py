"""Run an external SMT solver process on a script and parse the outcome.

The default solver is the bundled reference solver, launched as a child
process (`python -m nl2fol.refsolver`).  Any SMT-LIB 2.6 CLI solver can be
substituted via SolverConfig or the NL2FOL_SOLVER environment variable;
cvc4/cvc5 and z3 get their finite-model-finding and time-limit flags
injected automatically.
"""

from __future__ import annotations

import itertools
import os
import shlex
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field

from . import sexpr
from .smt import SmtScript

SAT = "SAT"
UNSAT = "UNSAT"
UNKNOWN = "UNKNOWN"
TIMEOUT = "TIMEOUT"
SOLVER_ERROR = "SOLVER_ERROR"


class ModelParseError(Exception):
    pass


@dataclass
class SolverConfig:
    """How to launch the solver.

    `executable` is an argv prefix; None selects the bundled reference
    solver.  `finite_model_finding` and `native_time_limit` inject the
    matching flags for known solver families.
    """

    executable: list[str] | None = None
    extra_args: list[str] = field(default_factory=list)
    timeout: float = 10.0
    finite_model_finding: bool = True
    native_time_limit: bool = True

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("solver timeout must be positive")
        if isinstance(self.executable, str):
            self.executable = shlex.split(self.executable)
        if self.executable:
            exe = self.executable[0]
            if shutil.which(exe) is None and not os.path.exists(exe):
                raise FileNotFoundError(f"solver executable not found: {exe}")

    @classmethod
    def from_env(cls, **kwargs) -> "SolverConfig":
        override = os.environ.get("NL2FOL_SOLVER")
        if override and "executable" not in kwargs:
            kwargs["executable"] = shlex.split(override)
        return cls(**kwargs)

    @property
    def family(self) -> str:
        if not self.executable:
            return "refsolver"
        name = os.path.basename(self.executable[0]).lower()
        joined = " ".join(self.executable).lower()
        if "refsolver" in joined:
            return "refsolver"
        if "cvc" in name:
            return "cvc"
        if "z3" in name:
            return "z3"
        return "other"

    def command(self) -> list[str]:
        argv = list(self.executable) if self.executable else [
            sys.executable,
            "-m",
            "nl2fol.refsolver",
        ]
        millis = max(1, int(self.timeout * 1000))
        family = self.family
        if family == "refsolver":
            if self.native_time_limit:
                argv += ["--tlimit-ms", str(millis)]
        elif family == "cvc":
            argv += ["--lang", "smt2", "--produce-models"]
            if self.finite_model_finding:
                argv.append("--finite-model-find")
            if self.native_time_limit:
                argv.append(f"--tlimit={millis}")
        elif family == "z3":
            if self.native_time_limit:
                argv.append(f"-t:{millis}")
        argv += list(self.extra_args)
        return argv


@dataclass
class ModelDefinition:
    symbol: str
    arg_sorts: tuple[str, ...]
    return_sort: str
    table: dict | None = None  # predicate truth table over element tuples
    value: str | None = None  # constant interpretation
    raw: str = ""
    unparsed: bool = False


@dataclass
class Model:
    definitions: list[ModelDefinition] = field(default_factory=list)
    domains: dict[str, list[str]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def definition(self, symbol: str) -> ModelDefinition | None:
        for d in self.definitions:
            if d.symbol == symbol:
                return d
        return None


@dataclass
class SolverOutcome:
    verdict: str
    model: Model | None
    raw: str
    wall_time: float
    stderr: str = ""

    def __post_init__(self):
        if (self.verdict == SAT) != (self.model is not None):
            raise ValueError("model must be present exactly when verdict is SAT")


def run_solver(script: SmtScript | str, cfg: SolverConfig) -> SolverOutcome:
    """Write the script to a temp file, run the solver, parse the verdict.

    `script` is an emitted SmtScript or raw SMT-LIB text.  The configured
    timeout is enforced by killing the child; exceeding it yields a TIMEOUT
    verdict.  A missing verdict line or a nonzero exit without a verdict
    becomes SOLVER_ERROR.
    """

    text = script if isinstance(script, str) else script.text
    argv = cfg.command()
    start = time.monotonic()
    with tempfile.NamedTemporaryFile(
        "w", suffix=".smt2", prefix="nl2fol_", delete=False, encoding="utf-8"
    ) as fh:
        fh.write(text.rstrip("\n") + "\n")
        path = fh.name
    try:
        try:
            proc = subprocess.run(
                argv + [path],
                capture_output=True,
                text=True,
                timeout=cfg.timeout,
            )
        except subprocess.TimeoutExpired as exc:
            wall = time.monotonic() - start
            raw = (exc.stdout or b"")
            if isinstance(raw, bytes):
                raw = raw.decode("utf-8", "replace")
            return SolverOutcome(TIMEOUT, None, raw, wall)
        wall = time.monotonic() - start
        verdict_line = None
        rest_index = 0
        lines = proc.stdout.splitlines()
        for i, line in enumerate(lines):
            stripped = line.strip()
            if not stripped or stripped.startswith(";"):
                continue
            verdict_line = stripped
            rest_index = i + 1
            break
        if verdict_line == "unsat":
            return SolverOutcome(UNSAT, None, proc.stdout, wall, proc.stderr)
        if verdict_line == "unknown":
            return SolverOutcome(UNKNOWN, None, proc.stdout, wall, proc.stderr)
        if verdict_line == "sat":
            model_text = "\n".join(lines[rest_index:])
            try:
                model = parse_model(model_text, script)
            except ModelParseError as exc:
                model = Model(warnings=[f"model unreadable: {exc}"])
            return SolverOutcome(SAT, model, proc.stdout, wall, proc.stderr)
        return SolverOutcome(SOLVER_ERROR, None, proc.stdout, wall, proc.stderr)
    finally:
        try:
            os.unlink(path)
        except OSError:
            pass


def declared_names(script: SmtScript | str) -> set[str]:
    """Names declared by the script (declare-fun / declare-const)."""

    if isinstance(script, SmtScript):
        return script.declared_names()
    names: set[str] = set()
    try:
        for expr in sexpr.parse_all(script):
            if isinstance(expr, list) and len(expr) >= 2 and expr[0] in ("declare-fun", "declare-const"):
                if isinstance(expr[1], str):
                    names.add(expr[1])
    except sexpr.SexprError:
        pass
    return names


def parse_model(raw: str, script: SmtScript | str) -> Model:
    """Parse solver model output (the text after the `sat` line).

    Recognizes cvc-style `(model ...)` wrappers and bare parenthesized
    blocks of `define-fun` entries.  Bodies outside the evaluable subset
    (=, and, or, not, ite, true, false) are preserved verbatim with a
    warning.  Raises ModelParseError only when the top-level s-expression
    structure is unbalanced.
    """

    model = Model()
    for line in raw.splitlines():
        stripped = line.strip()
        if stripped.startswith(";") and "cardinality of" in stripped:
            parts = stripped.lstrip("; ").split()
            # "; cardinality of S0 is 2"
            if len(parts) >= 5 and parts[0] == "cardinality":
                model.domains.setdefault(parts[2], [])
        if stripped.startswith(";") and "elements of" in stripped:
            parts = stripped.lstrip("; ").replace(":", "").split()
            # "; elements of S0: @S0_0 @S0_1"
            if len(parts) >= 3 and parts[0] == "elements":
                model.domains[parts[2]] = parts[3:]
    try:
        exprs = sexpr.parse_all(raw)
    except sexpr.SexprError as exc:
        raise ModelParseError(str(exc)) from exc

    entries = []
    for e in exprs:
        if isinstance(e, list) and e and e[0] == "model":
            entries.extend(e[1:])
        elif isinstance(e, list) and e and e[0] == "define-fun":
            entries.append(e)
        elif isinstance(e, list):
            entries.extend(x for x in e if isinstance(x, list))

    declared = declared_names(script)
    for entry in entries:
        if not (isinstance(entry, list) and len(entry) == 5 and entry[0] == "define-fun"):
            model.warnings.append(f"unrecognized model entry: {sexpr.render(entry)}")
            continue
        _, name, params, ret, body = entry
        if name not in declared:
            model.warnings.append(f"model defines undeclared symbol {name!r}")
        arg_names = []
        arg_sorts = []
        for p in params if isinstance(params, list) else []:
            if isinstance(p, list) and len(p) == 2:
                arg_names.append(p[0])
                arg_sorts.append(p[1])
        definition = ModelDefinition(
            symbol=name,
            arg_sorts=tuple(arg_sorts),
            return_sort=ret if isinstance(ret, str) else sexpr.render(ret),
            raw=sexpr.render(entry),
        )
        if not arg_names:
            if isinstance(body, str):
                definition.value = body
                if ret != "Bool" and body.startswith("@"):
                    model.domains.setdefault(ret, [])
                    if body not in model.domains[ret]:
                        model.domains[ret].append(body)
            else:
                definition.unparsed = True
                model.warnings.append(f"opaque constant body for {name!r}")
        else:
            _collect_elements(body, arg_names, arg_sorts, model)
            domains = [model.domains.get(s, ["true", "false"] if s == "Bool" else []) for s in arg_sorts]
            if all(domains):
                table = {}
                ok = True
                for combo in itertools.product(*domains):
                    env = dict(zip(arg_names, combo))
                    val = _eval_body(body, env)
                    if val is None:
                        ok = False
                        break
                    table[combo] = val
                if ok:
                    definition.table = table
                else:
                    definition.unparsed = True
                    model.warnings.append(f"unevaluable body for {name!r}")
            else:
                definition.unparsed = True
                model.warnings.append(f"unknown argument domain for {name!r}")
        model.definitions.append(definition)
    return model


def _collect_elements(body, arg_names, arg_sorts, model: Model):
    sort_of = dict(zip(arg_names, arg_sorts))

    def walk(node):
        if isinstance(node, list):
            if len(node) == 3 and node[0] == "=":
                a, b = node[1], node[2]
                for x, y in ((a, b), (b, a)):
                    if isinstance(x, str) and isinstance(y, str) and x in sort_of and y.startswith("@"):
                        elems = model.domains.setdefault(sort_of[x], [])
                        if y not in elems:
                            elems.append(y)
            for sub in node:
                walk(sub)

    walk(body)


def _eval_body(body, env: dict[str, str]):
    if isinstance(body, str):
        if body == "true":
            return True
        if body == "false":
            return False
        return None
    if not body:
        return None
    head = body[0]
    if head == "=" and len(body) == 3:
        a = env.get(body[1], body[1]) if isinstance(body[1], str) else None
        b = env.get(body[2], body[2]) if isinstance(body[2], str) else None
        if a is None or b is None:
            return None
        return a == b
    if head == "not" and len(body) == 2:
        v = _eval_body(body[1], env)
        return None if v is None else not v
    if head == "and":
        vals = [_eval_body(x, env) for x in body[1:]]
        return None if any(v is None for v in vals) else all(vals)
    if head == "or":
        vals = [_eval_body(x, env) for x in body[1:]]
        return None if any(v is None for v in vals) else any(vals)
    if head == "ite" and len(body) == 4:
        c = _eval_body(body[1], env)
        if c is None:
            return None
        return _eval_body(body[2] if c else body[3], env)
    return None

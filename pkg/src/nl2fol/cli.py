"""Command-line interface: compile, solve, classify, explain, eval, baseline.

Exit codes are stable and documented per command:

    compile    0 success, 2 parse error, 3 sort error
    solve      0 sat/unsat/unknown verdict, 3 solver error, 4 timeout
    classify   0 valid, 1 fallacy, 4 inconclusive, 5 configuration error
    baseline   same as classify
    explain    0 success, 2 unreadable trace
    eval       0 success, 5 configuration error

`--json` switches stdout to machine-readable output using the same schema
as trace and report files.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import solver as solver_mod
from .config import Config, ConfigError
from .evaluation import balanced_sample, evaluate, load_dataset, write_report
from .fol import ArityConflict
from .llm import LlmGateway
from .parser import LexError, ParseError, parse_text
from .pipeline import FALLACY, INCONCLUSIVE, VALID, Pipeline, render_model, replay_from_trace
from .smt import compile_formula
from .solver import run_solver
from .sorts import IncompatibleSorts


def _read_input(value: str | None, file: str | None, what: str) -> str:
    if (value is None) == (file is None):
        raise click.UsageError(f"provide {what} either as an argument or via --file")
    if file is not None:
        return Path(file).read_text(encoding="utf-8")
    return value


def _build_config(ctx_params: dict) -> Config:
    overrides = {}
    solver_overrides = {}
    if ctx_params.get("solver"):
        solver_overrides["executable"] = ctx_params["solver"]
    if ctx_params.get("solver_timeout") is not None:
        solver_overrides["timeout"] = ctx_params["solver_timeout"]
    llm_overrides = {}
    for key, target in (("llm_url", "base_url"), ("llm_model", "model"), ("llm_key", "api_key")):
        if ctx_params.get(key):
            llm_overrides[target] = ctx_params[key]
    for key in ("mode", "nli_backend", "unknown_as"):
        if ctx_params.get(key):
            overrides[key] = ctx_params[key]
    if ctx_params.get("out"):
        overrides["out_dir"] = Path(ctx_params["out"])
    if ctx_params.get("fixtures"):
        overrides["fixture_dir"] = Path(ctx_params["fixtures"])
    return Config.load(
        ctx_params.get("config"),
        solver=solver_overrides,
        llm=llm_overrides,
        **overrides,
    )


def _make_pipeline(cfg: Config) -> Pipeline:
    mode = cfg.resolve_mode()
    if mode == "live" and (not cfg.llm.base_url or not cfg.llm.api_key):
        raise ConfigError(
            "live mode needs an LLM endpoint and key "
            "(NL2FOL_LLM_URL / NL2FOL_LLM_KEY or --llm-url / --llm-key)"
        )
    gateway = LlmGateway(cfg.llm, mode=mode, fixture_dir=cfg.fixture_dir)
    return Pipeline(
        gateway,
        solver_config=cfg.solver,
        nli_backend=cfg.nli_backend,
        config_snapshot=cfg.to_dict(),
    )


_common_options = [
    click.option("--config", type=click.Path(exists=True), default=None, help="JSON config file"),
    click.option("--solver", default=None, help="solver executable (overrides NL2FOL_SOLVER)"),
    click.option("--solver-timeout", type=float, default=None, help="solver timeout in seconds"),
    click.option("--llm-url", default=None, help="chat-completions endpoint"),
    click.option("--llm-model", default=None, help="model name"),
    click.option("--llm-key", default=None, help="API key"),
    click.option("--mode", type=click.Choice(["live", "record", "replay"]), default=None),
    click.option("--nli-backend", type=click.Choice(["llm", "llm_with_context", "external_classifier"]), default=None),
    click.option("--fixtures", default=None, help="fixture directory for record/replay"),
    click.option("--out", default=None, help="output directory"),
    click.option("--json", "as_json", is_flag=True, help="machine-readable output"),
]


def common_options(fn):
    for opt in reversed(_common_options):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Translate natural-language arguments to FOL, compile to SMT-LIB and
    classify logical fallacies with an SMT solver."""


@main.command("compile")
@click.argument("fol", required=False)
@click.option("--file", type=click.Path(exists=True), default=None, help="read the formula from a file")
@common_options
def cmd_compile(fol, file, as_json, out, **params):
    """Compile a FOL formula to an SMT-LIB script asserting its negation."""

    source = _read_input(fol, file, "a formula").strip()
    try:
        formula = parse_text(source)
    except (ParseError, LexError) as exc:
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(2)
    try:
        signature, script = compile_formula(formula)
    except (IncompatibleSorts, ArityConflict) as exc:
        click.echo(f"sort error: {exc}", err=True)
        sys.exit(3)
    for warning in signature.warnings:
        click.echo(f"warning: {warning}", err=True)
    if as_json:
        payload = {
            "script": script.text,
            "signature": {
                "sorts": list(signature.sorts),
                "predicates": {k: list(v) for k, v in signature.predicates.items()},
                "symbols": dict(signature.symbols),
            },
        }
        text = json.dumps(payload, indent=2, sort_keys=True)
    else:
        text = script.text
    if out:
        path = Path(out)
        if path.is_dir():
            path = path / "out.smt2"
        path.write_text(text + "\n", encoding="utf-8")
        click.echo(str(path))
    else:
        click.echo(text)


@main.command("solve")
@click.argument("script_file", type=click.Path(exists=True))
@common_options
def cmd_solve(script_file, as_json, **params):
    """Run the configured SMT solver on an SMT-LIB script."""

    try:
        cfg = _build_config(params)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(5)
    text = Path(script_file).read_text(encoding="utf-8")
    outcome = run_solver(text, cfg.solver)
    if as_json:
        click.echo(json.dumps({"verdict": outcome.verdict, "wall_time": outcome.wall_time}))
    else:
        click.echo(outcome.verdict.lower())
    if outcome.verdict == solver_mod.SOLVER_ERROR:
        click.echo(outcome.stderr or outcome.raw, err=True)
        sys.exit(3)
    if outcome.verdict == solver_mod.TIMEOUT:
        sys.exit(4)


_CLASSIFY_EXIT = {VALID: 0, FALLACY: 1, INCONCLUSIVE: 4}


@main.command("classify")
@click.argument("text", required=False)
@click.option("--file", type=click.Path(exists=True), default=None, help="read the input from a file")
@common_options
def cmd_classify(text, file, as_json, **params):
    """Classify a natural-language argument as fallacy or valid."""

    source = _read_input(text, file, "an argument").strip()
    try:
        cfg = _build_config(params)
        pipeline = _make_pipeline(cfg)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(5)
    classification, trace = pipeline.classify(source)
    trace_path = trace.save(cfg.out_dir / "traces")
    if as_json:
        doc = trace.to_dict()
        doc["trace_path"] = str(trace_path)
        click.echo(json.dumps(doc, indent=2, ensure_ascii=False))
    else:
        click.echo(f"verdict: {classification.label}")
        if classification.reason:
            click.echo(f"reason: {classification.reason}")
        if classification.explanation:
            click.echo(classification.explanation)
        click.echo(f"trace: {trace_path}")
    sys.exit(_CLASSIFY_EXIT[classification.label])


@main.command("explain")
@click.argument("trace_file", type=click.Path(exists=True))
@common_options
def cmd_explain(trace_file, as_json, **params):
    """Re-derive the verdict and explanation from a stored trace (no LLM)."""

    try:
        data = json.loads(Path(trace_file).read_text(encoding="utf-8"))
        cfg = _build_config(params)
        label, verdict, _ = replay_from_trace(data, cfg.solver)
    except (ValueError, OSError, ParseError, LexError, KeyError) as exc:
        click.echo(f"unreadable trace: {exc}", err=True)
        sys.exit(2)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(5)
    explanation = data.get("explanation") or data.get("counterexample_rendering")
    if as_json:
        click.echo(json.dumps({"label": label, "verdict": verdict, "explanation": explanation}))
    else:
        click.echo(f"verdict: {label} (solver: {verdict.lower()})")
        if explanation:
            click.echo(explanation)


@main.command("eval")
@click.argument("dataset", type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default="jsonl")
@click.option("--unknown-as", type=click.Choice(["fallacy", "valid", "drop"]), default=None)
@click.option("--workers", type=int, default=None)
@click.option("--balanced", is_flag=True, help="sample equal class counts")
@click.option("--seed", type=int, default=0, help="sampling seed (recorded in the report)")
@click.option("--baseline", type=click.Choice(["end_to_end"]), default=None,
              help="also run the single-prompt baseline for comparison")
@common_options
def cmd_eval(dataset, fmt, unknown_as, workers, balanced, seed, baseline, as_json, **params):
    """Evaluate a labeled dataset and write report.json / report.txt."""

    try:
        cfg = _build_config(params)
        if unknown_as:
            cfg.unknown_as = unknown_as
        if workers:
            cfg.workers = workers
        cfg.seed = seed
        pipeline = _make_pipeline(cfg)
        examples = load_dataset(dataset, fmt, connective=cfg.valid_connective)
        if balanced:
            examples = balanced_sample(examples, seed=seed)
        out_dir = cfg.out_dir
        report = evaluate(
            examples,
            pipeline,
            unknown_as=cfg.unknown_as,
            workers=cfg.workers,
            trace_dir=out_dir / "traces",
            seed=seed,
        )
        baseline_report = None
        if baseline:
            baseline_report = evaluate(
                examples, pipeline, unknown_as=cfg.unknown_as,
                workers=cfg.workers, method="end_to_end", seed=seed,
            )
        json_path, txt_path = write_report(report, out_dir, baseline_report)
    except (ConfigError, ValueError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(5)
    except Exception as exc:  # dataset format errors et al.
        click.echo(f"error: {exc}", err=True)
        sys.exit(5)
    if as_json:
        click.echo(json_path.read_text(encoding="utf-8").rstrip("\n"))
    else:
        click.echo(txt_path.read_text(encoding="utf-8").rstrip("\n"))
        click.echo(f"report: {json_path}")


@main.command("baseline")
@click.argument("text", required=False)
@click.option("--file", type=click.Path(exists=True), default=None, help="read the input from a file")
@common_options
def cmd_baseline(text, file, as_json, **params):
    """Classify with the single-prompt few-shot baseline (no solver)."""

    source = _read_input(text, file, "an argument").strip()
    try:
        cfg = _build_config(params)
        pipeline = _make_pipeline(cfg)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(5)
    classification = pipeline.baseline_classify(source)
    if as_json:
        click.echo(json.dumps({"label": classification.label}))
    else:
        click.echo(f"verdict: {classification.label}")
    sys.exit(_CLASSIFY_EXIT[classification.label])


if __name__ == "__main__":
    main()

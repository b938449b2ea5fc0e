"""Dataset loading, batch classification and binary metrics.

Fallacies are the positive class.  Inconclusive outcomes are mapped by an
`unknown_as` policy (count as fallacy, count as valid, or drop) and always
reported separately, so TP+FP+TN+FN+dropped equals the dataset size.
Zero-denominator metrics are null, never zero.
"""

from __future__ import annotations

import csv
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .pipeline import FALLACY as P_FALLACY
from .pipeline import INCONCLUSIVE as P_INCONCLUSIVE
from .pipeline import VALID as P_VALID
from .pipeline import Pipeline

FALLACY = "FALLACY"
VALID = "VALID"
SOURCES = ("logic", "logicclimate", "snli", "custom")


class FormatError(Exception):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MissingColumn(Exception):
    def __init__(self, column: str):
        super().__init__(f"missing required column {column!r}")
        self.column = column


@dataclass(frozen=True)
class LabeledExample:
    id: str
    text: str
    label: str  # FALLACY | VALID
    source: str = "custom"


def combine_snli(premise: str, hypothesis: str, connective: str = "Thus,") -> str:
    """Join an entailment pair into one valid sentence."""

    premise = premise.strip()
    if premise and premise[-1] not in ".!?":
        premise += "."
    hypothesis = hypothesis.strip()
    if hypothesis:
        hypothesis = hypothesis[0].lower() + hypothesis[1:]
    if hypothesis and hypothesis[-1] not in ".!?":
        hypothesis += "."
    return f"{premise} {connective} {hypothesis}"


def load_dataset(path: str | Path, fmt: str = "jsonl", connective: str = "Thus,") -> list[LabeledExample]:
    """Load labeled examples from JSONL or CSV.

    JSONL rows are either `{id, text, label}` or SNLI-style
    `{sentence1, sentence2, gold_label}`; SNLI rows keep only the
    entailment class and are combined into single VALID sentences.
    """

    path = Path(path)
    if fmt == "jsonl":
        return _load_jsonl(path, connective)
    if fmt == "csv":
        return _load_csv(path)
    raise ValueError(f"unknown dataset format {fmt!r} (expected jsonl or csv)")


def _load_jsonl(path: Path, connective: str) -> list[LabeledExample]:
    out: list[LabeledExample] = []
    ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except ValueError as exc:
                raise FormatError(lineno, f"bad JSON: {exc}")
            if not isinstance(row, dict):
                raise FormatError(lineno, "row is not an object")
            if "sentence1" in row and "sentence2" in row:
                gold = str(row.get("gold_label", "")).strip().lower()
                if gold != "entailment":
                    continue
                text = combine_snli(str(row["sentence1"]), str(row["sentence2"]), connective)
                ex_id = str(row.get("id", f"snli-{lineno}"))
                example = LabeledExample(ex_id, text, VALID, "snli")
            else:
                if "text" not in row:
                    raise FormatError(lineno, "row has no 'text' field")
                label = str(row.get("label", "")).strip().upper()
                if label not in (FALLACY, VALID):
                    raise FormatError(lineno, f"bad label {row.get('label')!r}")
                if not str(row["text"]).strip():
                    raise FormatError(lineno, "empty text")
                example = LabeledExample(
                    str(row.get("id", f"row-{lineno}")),
                    str(row["text"]),
                    label,
                    str(row.get("source", "custom")),
                )
            if example.id in ids:
                raise FormatError(lineno, f"duplicate id {example.id!r}")
            ids.add(example.id)
            out.append(example)
    return out


def _load_csv(path: Path) -> list[LabeledExample]:
    out: list[LabeledExample] = []
    ids: set[str] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for column in ("text", "label"):
            if column not in fields:
                raise MissingColumn(column)
        for lineno, row in enumerate(reader, start=2):
            label = (row.get("label") or "").strip().upper()
            if label not in (FALLACY, VALID):
                raise FormatError(lineno, f"bad label {row.get('label')!r}")
            text = (row.get("text") or "").strip()
            if not text:
                raise FormatError(lineno, "empty text")
            ex_id = (row.get("id") or f"row-{lineno}").strip()
            if ex_id in ids:
                raise FormatError(lineno, f"duplicate id {ex_id!r}")
            ids.add(ex_id)
            out.append(LabeledExample(ex_id, text, label, (row.get("source") or "custom").strip()))
    return out


def balanced_sample(
    examples: list[LabeledExample], seed: int = 0, per_class: int | None = None
) -> list[LabeledExample]:
    """Equal numbers of fallacies and valids, seeded and order-stable."""

    rng = random.Random(seed)
    fallacies = [e for e in examples if e.label == FALLACY]
    valids = [e for e in examples if e.label == VALID]
    n = min(len(fallacies), len(valids))
    if per_class is not None:
        n = min(n, per_class)
    picked = rng.sample(fallacies, n) + rng.sample(valids, n)
    return sorted(picked, key=lambda e: e.id)


def compute_metrics(tp: int, fp: int, tn: int, fn: int) -> dict:
    total = tp + fp + tn + fn
    accuracy = (tp + tn) / total if total else None
    precision = tp / (tp + fp) if (tp + fp) else None
    recall = tp / (tp + fn) if (tp + fn) else None
    if precision is None or recall is None or (precision + recall) == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return {"accuracy": accuracy, "precision": precision, "recall": recall, "f1": f1}


@dataclass
class MetricsReport:
    counts: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    unknown_as: str = "fallacy"
    seed: int = 0
    method: str = "pipeline"
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "counts": self.counts,
            "metrics": self.metrics,
            "records": self.records,
            "unknown_as": self.unknown_as,
            "seed": self.seed,
            "method": self.method,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        return cls(
            counts=data["counts"],
            metrics=data["metrics"],
            records=data["records"],
            unknown_as=data.get("unknown_as", "fallacy"),
            seed=data.get("seed", 0),
            method=data.get("method", "pipeline"),
            config=data.get("config", {}),
        )


def evaluate(
    examples: list[LabeledExample],
    pipeline: Pipeline,
    unknown_as: str = "fallacy",
    workers: int = 4,
    trace_dir: str | Path | None = None,
    method: str = "pipeline",
    seed: int = 0,
) -> MetricsReport:
    """Classify every example and aggregate the confusion matrix.

    Per-example failures become inconclusive outcomes, never exceptions;
    aggregation is single-threaded after the parallel classify calls.
    """

    if not examples:
        raise ValueError("dataset is empty")
    if unknown_as not in ("fallacy", "valid", "drop"):
        raise ValueError(f"bad unknown-as policy {unknown_as!r}")

    def run_one(example: LabeledExample):
        if method == "end_to_end":
            classification = pipeline.baseline_classify(example.text)
            trace_path = None
        else:
            classification, trace = pipeline.classify(example.text)
            trace_path = str(trace.save(trace_dir).name) if trace_dir else None
        return example, classification, trace_path

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(run_one, examples))

    tp = fp = tn = fn = inconclusive = dropped = 0
    records = []
    for example, classification, trace_path in results:
        outcome = classification.label
        if outcome == P_INCONCLUSIVE:
            inconclusive += 1
            if unknown_as == "drop":
                predicted = None
                dropped += 1
            else:
                predicted = FALLACY if unknown_as == "fallacy" else VALID
        else:
            predicted = FALLACY if outcome == P_FALLACY else VALID
        if predicted is not None:
            if example.label == FALLACY and predicted == FALLACY:
                tp += 1
            elif example.label == FALLACY and predicted == VALID:
                fn += 1
            elif example.label == VALID and predicted == FALLACY:
                fp += 1
            else:
                tn += 1
        records.append(
            {
                "id": example.id,
                "source": example.source,
                "gold": example.label,
                "predicted": predicted,
                "outcome": outcome,
                "reason": classification.reason,
                "trace": trace_path,
            }
        )
    records.sort(key=lambda r: r["id"])
    counts = {
        "tp": tp,
        "fp": fp,
        "tn": tn,
        "fn": fn,
        "inconclusive": inconclusive,
        "dropped": dropped,
        "total": len(examples),
    }
    return MetricsReport(
        counts=counts,
        metrics=compute_metrics(tp, fp, tn, fn),
        records=records,
        unknown_as=unknown_as,
        seed=seed,
        method=method,
        config=pipeline.config_snapshot,
    )


def _fmt(value) -> str:
    return "null" if value is None else f"{value:.4f}"


def render_table(report: MetricsReport, baseline: MetricsReport | None = None) -> str:
    c = report.counts
    lines = [
        f"examples:       {c['total']}",
        f"tp/fp/tn/fn:    {c['tp']}/{c['fp']}/{c['tn']}/{c['fn']}",
        f"inconclusive:   {c['inconclusive']} (policy: {report.unknown_as}, dropped: {c['dropped']})",
    ]
    header = f"{'metric':<10}{'value':>10}"
    if baseline is not None:
        header += f"{'baseline':>10}{'delta':>10}"
    lines.append(header)
    for name in ("accuracy", "precision", "recall", "f1"):
        row = f"{name:<10}{_fmt(report.metrics[name]):>10}"
        if baseline is not None:
            other = baseline.metrics[name]
            row += f"{_fmt(other):>10}"
            if report.metrics[name] is None or other is None:
                row += f"{'null':>10}"
            else:
                row += f"{report.metrics[name] - other:>+10.4f}"
        lines.append(row)
    return "\n".join(lines)


def write_report(
    report: MetricsReport,
    out_dir: str | Path,
    baseline: MetricsReport | None = None,
) -> tuple[Path, Path]:
    """Write report.json (deterministic bytes) and report.txt."""

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "report.json"
    doc = report.to_dict()
    if baseline is not None:
        doc["baseline"] = baseline.to_dict()
    json_path.write_text(
        json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    txt_path = out / "report.txt"
    txt_path.write_text(render_table(report, baseline) + "\n", encoding="utf-8")
    return json_path, txt_path

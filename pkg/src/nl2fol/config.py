"""Toolkit configuration: solver, gateway, modes and policies.

Loadable from a JSON file; environment variables and CLI flags override
file values.  The full (secret-scrubbed) snapshot is embedded in every
trace and report so runs can be reproduced.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .llm import LlmConfig
from .solver import SolverConfig

UNKNOWN_AS_CHOICES = ("fallacy", "valid", "drop")


class ConfigError(Exception):
    pass


@dataclass
class Config:
    solver: SolverConfig = field(default_factory=SolverConfig.from_env)
    llm: LlmConfig = field(default_factory=LlmConfig.from_env)
    mode: str = "replay"
    nli_backend: str = "llm_with_context"
    unknown_as: str = "fallacy"
    out_dir: Path = Path("runs")
    fixture_dir: Path = Path("fixtures/llm")
    valid_connective: str = "Thus,"
    workers: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.unknown_as not in UNKNOWN_AS_CHOICES:
            raise ConfigError(f"unknown-as must be one of {UNKNOWN_AS_CHOICES}")
        if self.mode not in ("live", "record", "replay"):
            raise ConfigError("mode must be live, record or replay")
        self.out_dir = Path(self.out_dir)
        self.fixture_dir = Path(self.fixture_dir)

    @classmethod
    def load(cls, path: str | Path | None = None, **overrides) -> "Config":
        """Build from an optional JSON file plus keyword overrides."""

        data: dict = {}
        if path is not None:
            try:
                data = json.loads(Path(path).read_text(encoding="utf-8"))
            except (OSError, ValueError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}")
        solver_kwargs = data.pop("solver", {})
        llm_kwargs = data.pop("llm", {})
        solver_kwargs.update(overrides.pop("solver", {}))
        llm_kwargs.update(overrides.pop("llm", {}))
        data.update({k: v for k, v in overrides.items() if v is not None})
        try:
            solver = SolverConfig.from_env(**solver_kwargs)
        except (FileNotFoundError, ValueError) as exc:
            raise ConfigError(str(exc))
        llm = LlmConfig.from_env(**llm_kwargs)
        return cls(solver=solver, llm=llm, **data)

    def resolve_mode(self) -> str:
        """Replay by default when the fixture directory exists."""

        if self.mode == "replay" and not self.fixture_dir.exists():
            return "live"
        return self.mode

    def to_dict(self) -> dict:
        exe = self.solver.executable
        return {
            "solver": {
                "executable": list(exe) if exe else "bundled",
                "extra_args": list(self.solver.extra_args),
                "timeout": self.solver.timeout,
                "finite_model_finding": self.solver.finite_model_finding,
            },
            "llm": self.llm.to_dict(),
            "mode": self.mode,
            "nli_backend": self.nli_backend,
            "unknown_as": self.unknown_as,
            "valid_connective": self.valid_connective,
            "workers": self.workers,
            "seed": self.seed,
        }

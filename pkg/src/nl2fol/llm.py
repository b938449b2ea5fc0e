"""External-intelligence interface: chat completions and NLI judgments.

Requests go over a chat-completions-style JSON HTTP endpoint configured by
NL2FOL_LLM_URL / NL2FOL_LLM_MODEL / NL2FOL_LLM_KEY.  Every request is
content-addressable (sha256 of its canonical JSON), which drives the
record/replay fixture store: replay mode answers purely from recorded
fixtures and never touches the network, so runs are bit-deterministic.

Prompt templates live in the package's templates/ directory; the elided
in-context example blocks ship alongside in templates/examples/ and are
bound automatically.
"""

from __future__ import annotations

import hashlib
import json
import os
import string
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

TEMPLATE_IDS = (
    "end_to_end",
    "claim_implication",
    "entities",
    "entity_relation",
    "properties",
    "nli_relation",
    "fol_formulation",
    "interpret",
)

ENTAILMENT = "ENTAILMENT"
NOT_ENTAILMENT = "NOT_ENTAILMENT"
NLI_BACKENDS = ("llm", "llm_with_context", "external_classifier")


class TemplateError(Exception):
    pass


class MissingFixture(Exception):
    def __init__(self, key: str, summary: str):
        super().__init__(f"no recorded fixture {key} for request: {summary}")
        self.key = key


class HttpError(Exception):
    pass


class EmptyResponse(Exception):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    text: str
    required: tuple[str, ...]

    def render(self, bindings: dict[str, str]) -> str:
        missing = [p for p in self.required if p not in bindings]
        if missing:
            raise TemplateError(
                f"template {self.template_id!r} missing placeholders: {missing}"
            )
        unknown = [k for k in bindings if k not in self.required]
        if unknown:
            raise TemplateError(
                f"template {self.template_id!r} has no placeholders: {unknown}"
            )
        return self.text.format(**bindings)


def _placeholders(text: str) -> tuple[str, ...]:
    names = []
    for _, name, _, _ in string.Formatter().parse(text):
        if name:
            if not name.isidentifier():
                raise TemplateError(f"bad placeholder {name!r}")
            if name not in names:
                names.append(name)
    return tuple(names)


_template_cache: dict[str, PromptTemplate] = {}
_examples_cache: dict[str, str] = {}


def load_template(template_id: str) -> PromptTemplate:
    if template_id not in TEMPLATE_IDS:
        raise TemplateError(f"unknown template id {template_id!r}")
    if template_id not in _template_cache:
        text = (
            resources.files("nl2fol")
            .joinpath(f"templates/{template_id}.txt")
            .read_text(encoding="utf-8")
        )
        _template_cache[template_id] = PromptTemplate(
            template_id, text, _placeholders(text)
        )
    return _template_cache[template_id]


def load_examples(template_id: str) -> str:
    if template_id not in _examples_cache:
        path = resources.files("nl2fol").joinpath(f"templates/examples/{template_id}.txt")
        _examples_cache[template_id] = path.read_text(encoding="utf-8").rstrip("\n")
    return _examples_cache[template_id]


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    model: str
    temperature: float = 0.0
    max_tokens: int = 1024
    kind: str = "chat"
    payload: tuple = ()  # extra key/value pairs for non-chat kinds

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "prompt": self.prompt,
            "model": self.model,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        if self.payload:
            d["payload"] = dict(self.payload)
        return d

    def key(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class CompletionResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency: float = 0.0


@dataclass
class NliJudgment:
    premise: str
    hypothesis: str
    label: str
    confidence: float | None
    backend: str


@dataclass
class LlmConfig:
    base_url: str = ""
    model: str = ""
    api_key: str = ""
    nli_url: str = ""
    temperature: float = 0.0
    max_tokens: int = 1024
    nli_threshold: float = 0.80
    max_in_flight: int = 4
    retries: int = 3

    @classmethod
    def from_env(cls, **kwargs) -> "LlmConfig":
        env = os.environ
        kwargs.setdefault("base_url", env.get("NL2FOL_LLM_URL", ""))
        kwargs.setdefault("model", env.get("NL2FOL_LLM_MODEL", ""))
        kwargs.setdefault("api_key", env.get("NL2FOL_LLM_KEY", ""))
        kwargs.setdefault("nli_url", env.get("NL2FOL_NLI_URL", ""))
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "base_url": self.base_url,
            "model": self.model,
            "api_key": "***" if self.api_key else "",
            "nli_url": self.nli_url,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "nli_threshold": self.nli_threshold,
        }


class FixtureStore:
    """Directory of JSON fixtures keyed by request hash.

    Reads are lock-free; writes take a directory-wide file lock so that
    concurrent recorders append safely.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def load(self, key: str) -> dict | None:
        path = self.root / f"{key}.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def save(self, key: str, request: dict, response: dict) -> None:
        import filelock

        self.root.mkdir(parents=True, exist_ok=True)
        lock = filelock.FileLock(str(self.root / ".lock"))
        with lock:
            path = self.root / f"{key}.json"
            doc = {
                "request": request,
                "response": response,
                "timestamp": datetime.now(timezone.utc).isoformat(),
            }
            tmp = path.with_suffix(".tmp")
            tmp.write_text(
                json.dumps(doc, indent=2, ensure_ascii=False, sort_keys=True) + "\n",
                encoding="utf-8",
            )
            tmp.replace(path)


def strip_fences(text: str) -> str:
    """Remove a single wrapping markdown code fence, if present."""

    stripped = text.strip()
    if stripped.startswith("```") and stripped.endswith("```"):
        lines = stripped.splitlines()
        if len(lines) >= 2:
            return "\n".join(lines[1:-1]).strip()
    return stripped


class LlmGateway:
    """Completion and NLI calls with live / record / replay modes.

    `transport` optionally replaces the HTTP layer with a callable
    `(request, template_id, bindings) -> text`; record mode then captures
    its answers into the fixture store.
    """

    def __init__(
        self,
        config: LlmConfig | None = None,
        mode: str = "replay",
        fixture_dir: str | Path = "fixtures/llm",
        transport=None,
    ):
        if mode not in ("live", "record", "replay"):
            raise ValueError(f"unknown gateway mode {mode!r}")
        self.config = config or LlmConfig.from_env()
        self.mode = mode
        self.store = FixtureStore(fixture_dir)
        self.transport = transport
        self._gate = threading.Semaphore(self.config.max_in_flight)

    # -- completions --------------------------------------------------------

    def render(self, template_id: str, bindings: dict[str, str]) -> str:
        template = load_template(template_id)
        bindings = dict(bindings)
        if "examples" in template.required and "examples" not in bindings:
            bindings["examples"] = load_examples(template_id)
        return template.render(bindings)

    def complete(self, template_id: str, bindings: dict[str, str]) -> str:
        prompt = self.render(template_id, bindings)
        return self.complete_raw(prompt, template_id=template_id, bindings=bindings)

    def complete_raw(self, prompt: str, template_id: str = "raw", bindings: dict | None = None) -> str:
        request = CompletionRequest(
            prompt=prompt,
            model=self.config.model,
            temperature=self.config.temperature,
            max_tokens=self.config.max_tokens,
        )
        return self._dispatch(request, template_id, bindings or {}).text

    def _dispatch(self, request, template_id, bindings) -> CompletionResponse:
        key = request.key()
        if self.mode == "replay":
            doc = self.store.load(key)
            if doc is None:
                raise MissingFixture(key, request.prompt.splitlines()[-1][:120])
            return CompletionResponse(text=doc["response"]["text"])
        if self.transport is not None:
            start = time.monotonic()
            text = self.transport(request, template_id, bindings)
            response = CompletionResponse(text=text, latency=time.monotonic() - start)
        elif request.kind == "chat":
            response = self._http_chat(request)
        else:
            response = self._http_nli(request)
        if not response.text.strip():
            raise EmptyResponse(f"empty response for template {template_id!r}")
        if self.mode == "record":
            self.store.save(key, request.to_dict(), {"text": response.text})
        return response

    def _post_json(self, url: str, payload: dict) -> dict:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        last = None
        for attempt in range(self.config.retries):
            try:
                with self._gate:
                    resp = requests.post(url, json=payload, headers=headers, timeout=120)
                if resp.status_code >= 400:
                    raise HttpError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                return resp.json()
            except (HttpError, requests.RequestException, ValueError) as exc:
                last = exc
                if attempt + 1 < self.config.retries:
                    time.sleep(0.5 * 2**attempt)
        raise HttpError(f"request failed after {self.config.retries} attempts: {last}")

    def _http_chat(self, request: CompletionRequest) -> CompletionResponse:
        if not self.config.base_url:
            raise HttpError("no LLM endpoint configured (NL2FOL_LLM_URL)")
        payload = {
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        start = time.monotonic()
        data = self._post_json(self.config.base_url, payload)
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise HttpError(f"malformed chat response: {exc}")
        usage = data.get("usage", {}) or {}
        return CompletionResponse(
            text=text or "",
            prompt_tokens=usage.get("prompt_tokens", 0),
            completion_tokens=usage.get("completion_tokens", 0),
            latency=time.monotonic() - start,
        )

    def _http_nli(self, request: CompletionRequest) -> CompletionResponse:
        url = self.config.nli_url or self.config.base_url
        if not url:
            raise HttpError("no NLI endpoint configured (NL2FOL_NLI_URL)")
        start = time.monotonic()
        data = self._post_json(url, dict(request.payload))
        prob = data.get("entailment_probability")
        if prob is None:
            raise HttpError("malformed NLI response: missing entailment_probability")
        return CompletionResponse(text=f"{float(prob):.6f}", latency=time.monotonic() - start)

    # -- NLI -----------------------------------------------------------------

    def nli_entails(
        self,
        premise: str,
        hypothesis: str,
        backend: str = "llm_with_context",
        context: str | None = None,
    ) -> NliJudgment:
        if backend not in NLI_BACKENDS:
            raise ValueError(f"unknown NLI backend {backend!r}")
        if not premise.strip() or not hypothesis.strip():
            raise ValueError("premise and hypothesis must be nonempty")
        if premise.strip() == hypothesis.strip():
            # Reflexivity needs no backend call.
            return NliJudgment(premise, hypothesis, ENTAILMENT, None, backend)

        if backend == "external_classifier":
            payload = (("premise", premise), ("hypothesis", hypothesis))
            if context:
                payload += (("context", context),)
            request = CompletionRequest(
                prompt="", model=self.config.model, kind="nli", payload=payload
            )
            text = self._dispatch(request, "nli", {}).text
            prob = float(text)
            label = ENTAILMENT if prob >= self.config.nli_threshold else NOT_ENTAILMENT
            return NliJudgment(premise, hypothesis, label, prob, backend)

        context_block = ""
        if backend == "llm_with_context" and context:
            context_block = f"Input sentence: {context}\n\n"
        bindings = {
            "context_block": context_block,
            "premise": premise,
            "hypothesis": hypothesis,
        }
        text = self.complete("nli_relation", bindings)
        label = NOT_ENTAILMENT
        cleaned = strip_fences(text).upper()
        if "NOT_ENTAILMENT" in cleaned or "NOT ENTAILMENT" in cleaned:
            label = NOT_ENTAILMENT
        elif "ENTAILMENT" in cleaned:
            label = ENTAILMENT
        return NliJudgment(premise, hypothesis, label, None, backend)

"""Translation generation: pluggable backends, bounded retries, audit log.

Every translation is written to an append-only JSONL run log together with
the exact rendered prompt that produced it, so any output can be traced back
to its inputs. The log doubles as a resume store: a sweep re-run with the
same configuration reuses logged outputs instead of re-calling the backend.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

from ragmt.promptgen import EnhancedPrompt

NO_REFERENCE_OUTPUT = "无参考"


class GenerationError(RuntimeError):
    """Backend transport exhaustion or empty model output."""

    def __init__(self, message: str, attempts: list[str] | None = None):
        super().__init__(message)
        self.attempts = attempts or []


@runtime_checkable
class GenerationBackend(Protocol):
    kind: str
    model_id: str

    def generate(self, prompt_text: str) -> str: ...

    def descriptor(self) -> dict: ...


_EXAMPLE_LINE = re.compile(r"^\(JP\).*→ \(ZH\)(.*)$", re.MULTILINE)


@dataclass(frozen=True)
class CopyStub:
    """Deterministic stub that answers with the first retrieved example's
    Chinese side, or a fixed no-reference marker when the prompt carries no
    examples. Output is a pure function of the prompt text."""

    kind: str = "copy-stub"
    model_id: str = "copy-stub"

    def generate(self, prompt_text: str) -> str:
        match = _EXAMPLE_LINE.search(prompt_text)
        return match.group(1) if match else NO_REFERENCE_OUTPUT

    def descriptor(self) -> dict:
        return {"kind": self.kind, "model_id": self.model_id, "params": {}}


@dataclass(frozen=True)
class FixedStub:
    text: str = "你好"
    kind: str = "fixed-stub"
    model_id: str = "fixed-stub"

    def generate(self, prompt_text: str) -> str:
        return self.text

    def descriptor(self) -> dict:
        return {"kind": self.kind, "model_id": self.model_id, "params": {"text": self.text}}


@dataclass
class RemoteChatBackend:
    """Chat-completion backend for live translation.

    Decoding parameters are recorded in every descriptor and default to the
    most deterministic setting; unrecorded sampling noise would make sweep
    conditions incomparable.
    """

    model_id: str = "gpt-4o"
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "RAGMT_API_KEY"
    temperature: float = 0.0
    timeout: float = 120.0
    kind: str = "remote-llm"

    def generate(self, prompt_text: str) -> str:
        import httpx

        api_key = os.environ.get(self.api_key_env, "")
        if not api_key:
            raise GenerationError(f"no API credential in ${self.api_key_env}")
        resp = httpx.post(
            f"{self.base_url.rstrip('/')}/chat/completions",
            json={
                "model": self.model_id,
                "temperature": self.temperature,
                "messages": [{"role": "user", "content": prompt_text}],
            },
            headers={"Authorization": f"Bearer {api_key}"},
            timeout=self.timeout,
        )
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "model_id": self.model_id,
            "params": {"temperature": self.temperature, "base_url": self.base_url},
        }


@dataclass(frozen=True)
class TranslationRecord:
    test_id: str
    prompt: EnhancedPrompt
    output_zh: str
    backend: dict
    latency: float
    attempt_count: int

    def to_dict(self) -> dict:
        return {
            "test_id": self.test_id,
            "prompt": self.prompt.to_dict(),
            "output_zh": self.output_zh,
            "backend": self.backend,
            "latency": self.latency,
            "attempt_count": self.attempt_count,
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "TranslationRecord":
        return cls(
            test_id=rec["test_id"],
            prompt=EnhancedPrompt(**rec["prompt"]),
            output_zh=rec["output_zh"],
            backend=rec["backend"],
            latency=rec["latency"],
            attempt_count=rec["attempt_count"],
        )


class RunLog:
    """Append-only JSONL of translation records, keyed for idempotent reuse
    by (config hash, knowledge-base size, test id)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._by_key: dict[tuple[str, int, str], dict] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    rec = json.loads(line)
                    self._by_key[(rec["config_hash"], rec["size"], rec["test_id"])] = rec

    def lookup(self, config_hash: str, size: int, test_id: str) -> dict | None:
        return self._by_key.get((config_hash, size, test_id))

    def append(self, record: TranslationRecord, config_hash: str, size: int) -> None:
        rec = record.to_dict()
        rec["config_hash"] = config_hash
        rec["size"] = size
        with self._lock:
            self._by_key[(config_hash, size, record.test_id)] = rec
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def translate(
    prompt: EnhancedPrompt,
    backend: GenerationBackend,
    test_id: str = "",
    max_retries: int = 3,
) -> TranslationRecord:
    """Send the rendered prompt to the backend and return the trimmed output.

    Transport failures and empty outputs are retried up to `max_retries`
    times before raising with the accumulated attempt log.
    """
    attempts: list[str] = []
    start = time.perf_counter()
    for attempt in range(1, max_retries + 1):
        try:
            output = backend.generate(prompt.rendered).strip()
        except Exception as exc:  # noqa: BLE001 - recorded and retried
            attempts.append(f"attempt {attempt}: transport error: {exc}")
            continue
        if not output:
            attempts.append(f"attempt {attempt}: empty output")
            continue
        return TranslationRecord(
            test_id=test_id,
            prompt=prompt,
            output_zh=output,
            backend=backend.descriptor(),
            latency=time.perf_counter() - start,
            attempt_count=attempt,
        )
    raise GenerationError(
        f"translation failed after {max_retries} attempts for test_id={test_id!r}", attempts
    )

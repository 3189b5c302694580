"""Pre-translation linguistic analysis of the source sentence.

Two judgments are produced per sentence by prompting a judgment backend:

* A1: binary classification of the noun-modifying clause construction
  (inner vs. outer relation),
* A2: predicted translation-risk categories (any subset of four).

Responses are parsed strictly; an unparseable A1 becomes ``UNKNOWN`` and an
unparseable A2 becomes the empty set, never a silent default. Raw responses
are retained verbatim so every parsed label can be re-derived.
"""

from __future__ import annotations

import os
import re
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol, runtime_checkable

from ragmt.templates import load_template


class NmccType(Enum):
    INNER = "inner"
    OUTER = "outer"
    UNKNOWN = "unknown"


class RiskCategory(Enum):
    """The four translation-risk categories, keyed by their answer letters."""

    LEXICAL_CHOICE = "A"
    NMCC_HANDLING = "B"
    WORD_ORDER = "C"
    STYLE_REGISTER = "D"

    @property
    def label(self) -> str:
        return _RISK_LABELS[self]

    @classmethod
    def from_tag(cls, tag: object) -> "RiskCategory":
        """Accept a letter ('B'), an enum name ('NMCC_HANDLING') or a label."""
        text = str(tag).strip()
        upper = text.upper()
        if upper in cls._value2member_map_:
            return cls(upper)
        if upper in cls.__members__:
            return cls[upper]
        for cat, label in _RISK_LABELS.items():
            if text.lower() == label.lower():
                return cat
        raise ValueError(f"unknown risk category tag {tag!r}")


_RISK_LABELS = {
    RiskCategory.LEXICAL_CHOICE: "lexical choice",
    RiskCategory.NMCC_HANDLING: "NMCC handling",
    RiskCategory.WORD_ORDER: "word order",
    RiskCategory.STYLE_REGISTER: "style/register",
}

RISK_ORDER = (
    RiskCategory.LEXICAL_CHOICE,
    RiskCategory.NMCC_HANDLING,
    RiskCategory.WORD_ORDER,
    RiskCategory.STYLE_REGISTER,
)


@dataclass(frozen=True)
class AnalysisResult:
    a1: NmccType
    a2: frozenset[RiskCategory]
    raw_a1_response: str
    raw_a2_response: str
    backend_id: str
    a1_parse_failed: bool = False
    a2_parse_failed: bool = False

    def to_dict(self) -> dict:
        return {
            "a1": self.a1.value,
            "a2": sorted(c.value for c in self.a2),
            "raw_a1_response": self.raw_a1_response,
            "raw_a2_response": self.raw_a2_response,
            "backend_id": self.backend_id,
            "a1_parse_failed": self.a1_parse_failed,
            "a2_parse_failed": self.a2_parse_failed,
        }


class BackendError(RuntimeError):
    """Transport-level backend failure; carries the per-attempt log."""

    def __init__(self, message: str, attempts: list[str] | None = None):
        super().__init__(message)
        self.attempts = attempts or []


@runtime_checkable
class JudgmentBackend(Protocol):
    backend_id: str

    def complete(self, prompt: str) -> str: ...


_SENTENCE_LINE = re.compile(r"^Sentence: (.*)$", re.MULTILINE)


@dataclass(frozen=True)
class ScriptedStub:
    """Deterministic judgment backend driven by a per-sentence script.

    The stub recognizes which prompt it received (A1 vs. A2) from the prompt
    text and answers from the matching script, falling back to the default
    answer. Output is a pure function of (prompt, script).
    """

    a1_script: dict[str, str] = field(default_factory=dict)
    a2_script: dict[str, str] = field(default_factory=dict)
    a1_default: str = "ANSWER: INNER"
    a2_default: str = "ANSWER: NONE"
    backend_id: str = "scripted-stub"

    def complete(self, prompt: str) -> str:
        match = _SENTENCE_LINE.search(prompt)
        sentence = match.group(1) if match else ""
        if prompt.startswith("You are a Japanese grammar expert"):
            return self.a1_script.get(sentence, self.a1_default)
        return self.a2_script.get(sentence, self.a2_default)


@dataclass
class RemoteJudgmentBackend:
    """Chat-completion backend for live A1/A2 judgments.

    The API credential is read from the environment (never from config
    files). Transport failures are retried with backoff.
    """

    model: str = "gpt-4o"
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "RAGMT_API_KEY"
    timeout: float = 60.0
    max_transport_retries: int = 3
    temperature: float = 0.0

    @property
    def backend_id(self) -> str:
        return f"remote-llm:{self.model}"

    def complete(self, prompt: str) -> str:
        import httpx

        api_key = os.environ.get(self.api_key_env, "")
        if not api_key:
            raise BackendError(f"no API credential in ${self.api_key_env}")
        payload = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        attempts: list[str] = []
        for attempt in range(1, self.max_transport_retries + 1):
            try:
                resp = httpx.post(
                    f"{self.base_url.rstrip('/')}/chat/completions",
                    json=payload,
                    headers={"Authorization": f"Bearer {api_key}"},
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except Exception as exc:  # noqa: BLE001 - recorded and retried
                attempts.append(f"attempt {attempt}: {exc}")
                if attempt < self.max_transport_retries:
                    time.sleep(min(2.0 ** attempt, 10.0))
        raise BackendError(
            f"judgment backend failed after {self.max_transport_retries} attempts",
            attempts,
        )


_INNER_RE = re.compile(r"\binner\b", re.IGNORECASE)
_OUTER_RE = re.compile(r"\bouter\b", re.IGNORECASE)
# CJK equivalents: 内/外 immediately modifying 関係.
_CJK_INNER_RE = re.compile(r"内\s*の?\s*関係")
_CJK_OUTER_RE = re.compile(r"外\s*の?\s*関係")


def parse_a1_response(raw: str) -> NmccType:
    """Total parser for A1 responses.

    Scans case-insensitively for the inner/outer token families; exactly one
    family present yields that label, zero or both yield UNKNOWN.
    """
    text = str(raw)
    inner = bool(_INNER_RE.search(text) or _CJK_INNER_RE.search(text))
    outer = bool(_OUTER_RE.search(text) or _CJK_OUTER_RE.search(text))
    if inner and not outer:
        return NmccType.INNER
    if outer and not inner:
        return NmccType.OUTER
    return NmccType.UNKNOWN


_LETTER_RE = re.compile(r"\b([A-D])\b")
_NAME_PATTERNS = {
    RiskCategory.LEXICAL_CHOICE: re.compile(r"lexical\s+choice", re.IGNORECASE),
    RiskCategory.NMCC_HANDLING: re.compile(r"NMCC\s+handling", re.IGNORECASE),
    RiskCategory.WORD_ORDER: re.compile(r"word[\s-]+order", re.IGNORECASE),
    RiskCategory.STYLE_REGISTER: re.compile(r"style\s*(?:/|and)\s*register", re.IGNORECASE),
}


def parse_a2_response(raw: str) -> frozenset[RiskCategory]:
    """Total parser for A2 responses.

    Extracts standalone uppercase letters A-D and spelled-out category names;
    the result is the union of all matches (possibly empty).
    """
    text = str(raw)
    found: set[RiskCategory] = {RiskCategory(m) for m in _LETTER_RE.findall(text)}
    for cat, pattern in _NAME_PATTERNS.items():
        if pattern.search(text):
            found.add(cat)
    return frozenset(found)


_ANSWER_LINE = re.compile(r"^\s*ANSWER\s*:\s*(.*)$", re.IGNORECASE | re.MULTILINE)
_NONE_RE = re.compile(r"\b(none|no\s+risks?)\b", re.IGNORECASE)


def _answer_line(raw: str) -> str | None:
    matches = _ANSWER_LINE.findall(raw)
    return matches[-1] if matches else None


def _parse_a1(raw: str) -> NmccType:
    # Prefer the constrained ANSWER line when present; prose responses that
    # restate both labels would otherwise always be ambiguous.
    line = _answer_line(raw)
    if line is not None:
        parsed = parse_a1_response(line)
        if parsed is not NmccType.UNKNOWN:
            return parsed
    return parse_a1_response(raw)


def _parse_a2(raw: str) -> tuple[frozenset[RiskCategory], bool]:
    """Parse an A2 response; the flag reports whether the parse succeeded.

    A response parses when it names at least one category or explicitly says
    none apply; anything else (e.g. letters outside A-D) is a failed parse.
    """
    line = _answer_line(raw)
    scope = line if line is not None else raw
    cats = parse_a2_response(scope)
    if not cats and line is not None:
        cats = parse_a2_response(raw)
    if cats:
        return cats, True
    explicit_none = bool(_NONE_RE.search(raw))
    return frozenset(), explicit_none


def render_a1_prompt(sl: str, template_version: str = "v1") -> str:
    return load_template("a1_prompt", template_version).replace("{SL}", sl)


def render_a2_prompt(sl: str, template_version: str = "v1") -> str:
    return load_template("a2_prompt", template_version).replace("{SL}", sl)


def classify_nmcc(
    sl: str,
    backend: JudgmentBackend,
    template_version: str = "v1",
    max_parse_retries: int = 3,
) -> tuple[NmccType, str]:
    """Classify the sentence's NMCC as inner or outer relation.

    Re-asks the backend on parse failures up to `max_parse_retries` times,
    then settles on UNKNOWN. Returns (label, last raw response).
    """
    if not sl:
        raise ValueError("sl must be non-empty")
    prompt = render_a1_prompt(sl, template_version)
    raw = ""
    for _ in range(max_parse_retries + 1):
        raw = backend.complete(prompt)
        parsed = _parse_a1(raw)
        if parsed is not NmccType.UNKNOWN:
            return parsed, raw
    return NmccType.UNKNOWN, raw


def predict_risks(
    sl: str,
    backend: JudgmentBackend,
    template_version: str = "v1",
    max_parse_retries: int = 3,
) -> tuple[frozenset[RiskCategory], str]:
    """Predict translation-risk categories for the sentence.

    Returns (categories, last raw response); categories may legitimately be
    empty when the backend answers that no risk applies.
    """
    if not sl:
        raise ValueError("sl must be non-empty")
    prompt = render_a2_prompt(sl, template_version)
    raw = ""
    for _ in range(max_parse_retries + 1):
        raw = backend.complete(prompt)
        cats, ok = _parse_a2(raw)
        if ok:
            return cats, raw
    return frozenset(), raw


def analyze_sentence(
    sl: str,
    backend: JudgmentBackend,
    template_version: str = "v1",
    max_parse_retries: int = 3,
) -> AnalysisResult:
    """Run both judgments and bundle them with their raw responses."""
    a1, raw_a1 = classify_nmcc(sl, backend, template_version, max_parse_retries)
    a2, raw_a2 = predict_risks(sl, backend, template_version, max_parse_retries)
    _, a2_ok = _parse_a2(raw_a2)
    return AnalysisResult(
        a1=a1,
        a2=a2,
        raw_a1_response=raw_a1,
        raw_a2_response=raw_a2,
        backend_id=backend.backend_id,
        a1_parse_failed=a1 is NmccType.UNKNOWN,
        a2_parse_failed=not a2_ok,
    )


def format_risks(cats: frozenset[RiskCategory] | set[RiskCategory]) -> str:
    """Comma-joined category labels in canonical A-D order; 'none' if empty."""
    ordered = [c.label for c in RISK_ORDER if c in cats]
    return ", ".join(ordered) if ordered else "none"

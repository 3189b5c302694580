"""Parallel corpus handling: loading, cleaning, contamination checks, subsetting.

A corpus is an ordered collection of Japanese/Chinese sentence pairs used
either as a retrieval knowledge base or as a fixed test set. All equality
tests (dedup, contamination) run on normalized text: Unicode NFC, stripped,
internal whitespace runs collapsed to one space.
"""

from __future__ import annotations

import json
import random
import re
import unicodedata
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from ragmt.analysis import RiskCategory


class CorpusError(ValueError):
    """Malformed corpus file or violated corpus invariant."""


_WS_RUN = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """NFC-normalize, trim, and collapse internal whitespace runs to one space."""
    return _WS_RUN.sub(" ", unicodedata.normalize("NFC", text).strip())


def strip_whitespace(text: str) -> str:
    return "".join(ch for ch in text if not ch.isspace())


def strip_whitespace_and_punct(text: str) -> str:
    return "".join(
        ch for ch in text if not ch.isspace() and not unicodedata.category(ch).startswith("P")
    )


class CorpusRole(Enum):
    KNOWLEDGE_BASE = "knowledge_base"
    TEST_SET = "test_set"


@dataclass(frozen=True)
class PairMeta:
    genre: str = ""
    work: str = ""
    has_nmcc: bool = True
    error_tags: frozenset[RiskCategory] = frozenset()
    provenance_note: str = ""

    def to_dict(self) -> dict:
        return {
            "genre": self.genre,
            "work": self.work,
            "has_nmcc": self.has_nmcc,
            "error_tags": sorted(tag.value for tag in self.error_tags),
            "provenance_note": self.provenance_note,
        }


@dataclass(frozen=True)
class SentencePair:
    id: str
    source_ja: str
    target_zh: str
    meta: PairMeta = field(default_factory=PairMeta)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source_ja": self.source_ja,
            "target_zh": self.target_zh,
            "meta": self.meta.to_dict(),
        }


@dataclass(frozen=True)
class Corpus:
    pairs: tuple[SentencePair, ...]
    role: CorpusRole = CorpusRole.KNOWLEDGE_BASE
    ordering_seed: int = 0

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def ids(self) -> list[str]:
        return [p.id for p in self.pairs]

    def by_id(self) -> dict[str, SentencePair]:
        return {p.id: p for p in self.pairs}


@dataclass(frozen=True)
class ContaminationReport:
    exact_matches: tuple[tuple[str, str], ...] = ()
    near_matches: tuple[tuple[str, str, str], ...] = ()

    def is_clean(self) -> bool:
        return not self.exact_matches and not self.near_matches

    def to_dict(self) -> dict:
        return {
            "exact_matches": [list(m) for m in self.exact_matches],
            "near_matches": [list(m) for m in self.near_matches],
            "clean": self.is_clean(),
        }


def _parse_error_tags(raw: object, lineno: int) -> frozenset[RiskCategory]:
    if raw is None:
        return frozenset()
    if not isinstance(raw, (list, tuple)):
        raise CorpusError(f"line {lineno}: error_tags must be a list")
    try:
        return frozenset(RiskCategory.from_tag(t) for t in raw)
    except ValueError as exc:
        raise CorpusError(f"line {lineno}: {exc}") from None


def _pair_from_record(rec: dict, lineno: int) -> SentencePair:
    for key in ("id", "source_ja", "target_zh"):
        if key not in rec or rec[key] is None:
            raise CorpusError(f"line {lineno}: missing field {key!r}")
    pair_id = str(rec["id"]).strip()
    if not pair_id:
        raise CorpusError(f"line {lineno}: empty id")
    source = normalize_text(str(rec["source_ja"]))
    target = normalize_text(str(rec["target_zh"]))
    if not source:
        raise CorpusError(f"line {lineno}: source_ja empty after normalization")
    if not target:
        raise CorpusError(f"line {lineno}: target_zh empty after normalization")
    meta_rec = rec.get("meta") or {}
    if not isinstance(meta_rec, dict):
        raise CorpusError(f"line {lineno}: meta must be an object")
    meta = PairMeta(
        genre=str(meta_rec.get("genre", "")),
        work=str(meta_rec.get("work", "")),
        has_nmcc=bool(meta_rec.get("has_nmcc", True)),
        error_tags=_parse_error_tags(meta_rec.get("error_tags"), lineno),
        provenance_note=str(meta_rec.get("provenance_note", "")),
    )
    return SentencePair(id=pair_id, source_ja=source, target_zh=target, meta=meta)


def load_pairs(
    path: str | Path,
    format: str | None = None,
    role: CorpusRole = CorpusRole.KNOWLEDGE_BASE,
) -> Corpus:
    """Load a JSONL or TSV corpus file, preserving file order.

    Records are normalized on load. Malformed records and duplicate ids are
    reported with their line numbers.
    """
    path = Path(path)
    if format is None:
        format = "tsv" if path.suffix.lower() in (".tsv", ".tab") else "jsonl"
    if format not in ("jsonl", "tsv"):
        raise CorpusError(f"unknown corpus format {format!r}")

    pairs: list[SentencePair] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            if format == "jsonl":
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from None
                if not isinstance(rec, dict):
                    raise CorpusError(f"line {lineno}: record must be a JSON object")
            else:
                cols = line.rstrip("\n").split("\t")
                if len(cols) != 3:
                    raise CorpusError(f"line {lineno}: expected 3 tab-separated columns, got {len(cols)}")
                rec = {"id": cols[0], "source_ja": cols[1], "target_zh": cols[2]}
            pair = _pair_from_record(rec, lineno)
            if pair.id in seen:
                raise CorpusError(
                    f"duplicate id {pair.id!r} at lines {seen[pair.id]} and {lineno}"
                )
            seen[pair.id] = lineno
            pairs.append(pair)
    return Corpus(pairs=tuple(pairs), role=role)


def save_pairs(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus as JSONL (UTF-8, one record per line)."""
    with open(path, "w", encoding="utf-8") as fh:
        for pair in corpus.pairs:
            fh.write(json.dumps(pair.to_dict(), ensure_ascii=False) + "\n")


def dedup_and_clean(corpus: Corpus) -> tuple[Corpus, list[str]]:
    """Drop pairs whose normalized (source, target) repeats an earlier pair.

    First occurrence wins; order is otherwise preserved.
    """
    kept: list[SentencePair] = []
    removed: list[str] = []
    seen: set[tuple[str, str]] = set()
    for pair in corpus.pairs:
        key = (normalize_text(pair.source_ja), normalize_text(pair.target_zh))
        if key in seen:
            removed.append(pair.id)
        else:
            seen.add(key)
            kept.append(pair)
    return replace(corpus, pairs=tuple(kept)), removed


def check_disjoint(test: Corpus, kb: Corpus) -> ContaminationReport:
    """Report source-side overlap between a test set and a knowledge base.

    Exact matches compare normalized sources; near matches compare sources
    after removing whitespace (and, failing that, punctuation as well).
    """
    kb_exact: dict[str, list[str]] = {}
    kb_no_ws: dict[str, list[str]] = {}
    kb_no_ws_punct: dict[str, list[str]] = {}
    for pair in kb.pairs:
        src = normalize_text(pair.source_ja)
        kb_exact.setdefault(src, []).append(pair.id)
        kb_no_ws.setdefault(strip_whitespace(src), []).append(pair.id)
        kb_no_ws_punct.setdefault(strip_whitespace_and_punct(src), []).append(pair.id)

    exact: list[tuple[str, str]] = []
    near: list[tuple[str, str, str]] = []
    for pair in test.pairs:
        src = normalize_text(pair.source_ja)
        exact_ids = set(kb_exact.get(src, ()))
        for kb_id in kb_exact.get(src, ()):
            exact.append((pair.id, kb_id))
        for kb_id in kb_no_ws.get(strip_whitespace(src), ()):
            if kb_id not in exact_ids:
                near.append((pair.id, kb_id, "whitespace-insensitive match"))
        ws_hits = set(kb_no_ws.get(strip_whitespace(src), ()))
        for kb_id in kb_no_ws_punct.get(strip_whitespace_and_punct(src), ()):
            if kb_id not in exact_ids and kb_id not in ws_hits:
                near.append((pair.id, kb_id, "whitespace/punctuation-insensitive match"))
    return ContaminationReport(exact_matches=tuple(exact), near_matches=tuple(near))


def subset(kb: Corpus, size: int, seed: int) -> Corpus:
    """Return the first `size` pairs of the seed-shuffled knowledge base.

    Subsets are nested: for the same seed, a smaller subset is always a
    prefix of a larger one, so knowledge-base size is the only factor that
    varies between sweep conditions.
    """
    if size < 0 or size > len(kb.pairs):
        raise CorpusError(f"subset size {size} out of range 0..{len(kb.pairs)}")
    order = list(range(len(kb.pairs)))
    random.Random(seed).shuffle(order)
    chosen = tuple(kb.pairs[i] for i in order[:size])
    return Corpus(pairs=chosen, role=kb.role, ordering_seed=seed)


def kb_meta_violations(corpus: Corpus) -> list[str]:
    """Return ids of pairs missing the has_nmcc mark (knowledge-base corpora
    are NMCC corpora by construction, so this should be empty)."""
    return [p.id for p in corpus.pairs if not p.meta.has_nmcc]

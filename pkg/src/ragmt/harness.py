"""Experiment orchestration: per-sentence pipeline, size sweep, reports.

One sweep runs the full pipeline (analysis -> retrieval -> prompt ->
generation -> scoring) over the fixed test set once per knowledge-base size,
holding everything else constant. The size-0 condition disables retrieval
only; the analysis block stays in the prompt unless `bare_baseline` ablates
it. Every artifact embeds the effective config and its hash.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ragmt import bleu
from ragmt.analysis import AnalysisResult, analyze_sentence
from ragmt.config import (
    PipelineConfig,
    build_analysis_backend,
    build_encoder,
    build_generation_backend,
    condition_snapshot,
    config_hash,
)
from ragmt.corpus import Corpus, check_disjoint, subset
from ragmt.generation import RunLog, TranslationRecord, translate
from ragmt.promptgen import render_prompt
from ragmt.retrieval import EmbeddingCache, VectorIndex, build_index, embed, search


class ContaminationError(RuntimeError):
    """Test/KB overlap detected; the sweep refuses to run."""

    def __init__(self, report):
        super().__init__(
            f"contaminated corpora: {len(report.exact_matches)} exact, "
            f"{len(report.near_matches)} near match(es)"
        )
        self.report = report


class PipelineStageError(RuntimeError):
    """Failure inside one pipeline stage, tagged with the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineContext:
    """Built collaborators shared by every condition of a sweep."""

    encoder: object
    analysis_backend: object
    generation_backend: object
    cache: EmbeddingCache


def build_context(cfg: PipelineConfig, cache_path: str | Path | None = None) -> PipelineContext:
    return PipelineContext(
        encoder=build_encoder(cfg.encoder),
        analysis_backend=build_analysis_backend(cfg.analysis),
        generation_backend=build_generation_backend(cfg.generation),
        cache=EmbeddingCache(cache_path),
    )


@dataclass
class SentenceResult:
    test_id: str
    record: TranslationRecord | None
    score: bleu.BleuScore | None
    analysis: AnalysisResult | None = None
    error: str | None = None
    resumed: bool = False


@dataclass
class ConditionResult:
    size: int
    results: list[SentenceResult]
    mean_bleu: float | None
    completion: float


@dataclass
class SweepReport:
    config: dict
    config_hash: str
    rows: list[bleu.GainRow]
    per_sentence: list[dict]
    completion: dict[int, float]
    valid: bool
    control_ok: bool
    control_differing_keys: list[str]
    outputs: dict[str, dict[int, str]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "rows": [r.to_dict() for r in self.rows],
            "per_sentence": self.per_sentence,
            "completion": {str(k): v for k, v in self.completion.items()},
            "valid": self.valid,
            "control": {"ok": self.control_ok, "differing_keys": self.control_differing_keys},
        }


def run_sentence(
    sl: str,
    kb_index: VectorIndex | None,
    cfg: PipelineConfig,
    ctx: PipelineContext,
    prompt_kb: Corpus,
    test_id: str = "",
) -> tuple[TranslationRecord, AnalysisResult | None]:
    """Run the pipeline for one source sentence.

    With no index (the size-0 condition) the examples block is empty; the
    analysis stage still runs unless the bare baseline is requested.
    """
    analysis = None
    skip_analysis = cfg.bare_baseline and kb_index is None
    if not skip_analysis:
        try:
            analysis = analyze_sentence(
                sl,
                ctx.analysis_backend,
                cfg.template_version,
                cfg.analysis.max_parse_retries,
            )
        except Exception as exc:
            raise PipelineStageError("analysis", exc) from exc

    hits = []
    if kb_index is not None:
        try:
            query = embed(sl, ctx.encoder, ctx.cache)
            hits = search(kb_index, query, cfg.retriever)
        except Exception as exc:
            raise PipelineStageError("retrieval", exc) from exc

    try:
        prompt = render_prompt(
            sl,
            analysis.a1 if analysis else None,
            analysis.a2 if analysis else None,
            hits,
            prompt_kb,
            cfg.template_version,
        )
    except Exception as exc:
        raise PipelineStageError("prompt", exc) from exc

    try:
        record = translate(
            prompt, ctx.generation_backend, test_id=test_id, max_retries=cfg.generation.max_retries
        )
    except Exception as exc:
        raise PipelineStageError("generation", exc) from exc
    return record, analysis


def run_condition(
    test: Corpus,
    kb: Corpus,
    size: int,
    cfg: PipelineConfig,
    ctx: PipelineContext,
    run_log: RunLog | None = None,
) -> ConditionResult:
    """Run one knowledge-base size over the whole test set.

    The contamination gate runs before any index build or generation call.
    Previously logged translations for the same (config, size, test id) are
    reused instead of re-calling the backend.
    """
    report = check_disjoint(test, kb)
    if not report.is_clean():
        raise ContaminationError(report)

    sub = subset(kb, size, cfg.seed)
    index = build_index(sub, ctx.encoder, ctx.cache) if size > 0 else None
    chash = config_hash(cfg)

    def one(pair) -> SentenceResult:
        if run_log is not None:
            logged = run_log.lookup(chash, size, pair.id)
            if logged is not None:
                record = TranslationRecord.from_dict(logged)
                score = bleu.score_texts(record.output_zh, pair.target_zh, cfg.smoothing_eps)
                return SentenceResult(pair.id, record, score, resumed=True)
        try:
            record, analysis = run_sentence(pair.source_ja, index, cfg, ctx, sub, test_id=pair.id)
        except PipelineStageError as exc:
            return SentenceResult(pair.id, None, None, error=str(exc))
        if run_log is not None:
            run_log.append(record, chash, size)
        score = bleu.score_texts(record.output_zh, pair.target_zh, cfg.smoothing_eps)
        return SentenceResult(pair.id, record, score, analysis=analysis)

    with ThreadPoolExecutor(max_workers=cfg.max_concurrency) as pool:
        results = list(pool.map(one, test.pairs))

    done = [r for r in results if r.error is None]
    completion = len(done) / len(results) if results else 0.0
    mean = bleu.macro_average([r.score.score for r in done]) if done else None
    return ConditionResult(size=size, results=results, mean_bleu=mean, completion=completion)


def _control_check(cfg: PipelineConfig, sizes) -> tuple[bool, list[str]]:
    """Diff the per-condition config snapshots; only the effective size may
    differ across conditions."""
    snaps = [condition_snapshot(cfg, s) for s in sizes]
    differing: set[str] = set()
    base = snaps[0]
    for snap in snaps[1:]:
        for key in set(base) | set(snap):
            if base.get(key) != snap.get(key):
                differing.add(key)
    ok = differing <= {"effective_kb_size"}
    return ok, sorted(differing)


def sweep(
    test: Corpus,
    kb: Corpus,
    cfg: PipelineConfig,
    ctx: PipelineContext | None = None,
    run_log: RunLog | None = None,
) -> SweepReport:
    """Run every configured size with identical everything-but-size and
    assemble the gain table against the size-0 baseline."""
    cfg.validate(kb_size=len(kb))
    if 0 not in cfg.sizes:
        raise ValueError("sizes must include the 0 baseline")
    if ctx is None:
        ctx = build_context(cfg)

    gate = check_disjoint(test, kb)
    if not gate.is_clean():
        raise ContaminationError(gate)

    conditions = [run_condition(test, kb, size, cfg, ctx, run_log) for size in cfg.sizes]

    valid = all(c.completion == 1.0 and c.mean_bleu is not None for c in conditions)
    control_ok, differing = _control_check(cfg, cfg.sizes)

    per_sentence: list[dict] = []
    outputs: dict[str, dict[int, str]] = {}
    for cond in conditions:
        for res in cond.results:
            row = {
                "test_id": res.test_id,
                "size": cond.size,
                "output_zh": res.record.output_zh if res.record else None,
                "error": res.error,
            }
            if res.score is not None:
                row.update(res.score.to_dict())
            per_sentence.append(row)
            if res.record is not None:
                outputs.setdefault(res.test_id, {})[cond.size] = res.record.output_zh

    # Gains are only defined against a positive baseline mean; degenerate
    # runs (e.g. a stub that never overlaps the references) keep their means
    # but leave the gain cells empty.
    if valid and conditions[0].mean_bleu > 0:
        rows = bleu.gain_rows(list(cfg.sizes), [c.mean_bleu for c in conditions])
    else:
        rows = [
            bleu.GainRow(size=c.size, mean_bleu=c.mean_bleu if c.mean_bleu is not None else 0.0)
            for c in conditions
        ]

    return SweepReport(
        config=cfg.to_dict(),
        config_hash=config_hash(cfg),
        rows=rows,
        per_sentence=per_sentence,
        completion={c.size: c.completion for c in conditions},
        valid=valid,
        control_ok=control_ok,
        control_differing_keys=differing,
        outputs=outputs,
    )


def format_table1_md(report: SweepReport) -> str:
    lines = [
        "| RAG size | Average BLEU | Absolute gain vs. baseline | Relative gain vs. baseline (%) |",
        "|---|---|---|---|",
    ]
    for row in report.rows:
        if row.abs_gain is None:
            lines.append(f"| {row.size} | {row.mean_bleu:.2f} | — | — |")
        else:
            lines.append(
                f"| {row.size} | {row.mean_bleu:.2f} | {row.abs_gain:+.2f} | {row.rel_gain_pct:+.1f}% |"
            )
    return "\n".join(lines) + "\n"


def format_table1_csv(report: SweepReport) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["size", "mean_bleu", "abs_gain", "rel_gain_pct"])
    for row in report.rows:
        writer.writerow(
            [
                row.size,
                f"{row.mean_bleu:.2f}",
                "" if row.abs_gain is None else f"{row.abs_gain:+.2f}",
                "" if row.rel_gain_pct is None else f"{row.rel_gain_pct:+.1f}",
            ]
        )
    return buf.getvalue()


def case_report(report: SweepReport, test_ids: list[str], sizes: list[int]) -> str:
    """Per-sentence comparison blocks: one table of (size, BLEU, output) per
    requested test sentence."""
    scores: dict[tuple[str, int], float] = {}
    for row in report.per_sentence:
        if row.get("score") is not None:
            scores[(row["test_id"], row["size"])] = row["score"]

    blocks = []
    for test_id in test_ids:
        if test_id not in report.outputs:
            raise ValueError(f"unknown test id {test_id!r}")
        lines = [
            f"### {test_id}",
            "",
            "| RAG size | BLEU | Target-language output (Chinese) |",
            "|---|---|---|",
        ]
        for size in sizes:
            if (test_id, size) not in scores:
                raise ValueError(f"no result for test id {test_id!r} at size {size}")
            output = report.outputs[test_id][size]
            lines.append(f"| {size} | {scores[(test_id, size)]:.2f} | {output} |")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def write_sweep_artifacts(
    report: SweepReport,
    out_dir: str | Path,
    case_ids: list[str] | None = None,
    case_sizes: list[int] | None = None,
) -> dict[str, Path]:
    """Write report.json, table1.md/csv, scores.jsonl, and cases.md."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    paths["report"] = out / "report.json"
    with open(paths["report"], "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")

    paths["table1_md"] = out / "table1.md"
    paths["table1_md"].write_text(format_table1_md(report), encoding="utf-8")
    paths["table1_csv"] = out / "table1.csv"
    paths["table1_csv"].write_text(format_table1_csv(report), encoding="utf-8")

    paths["scores"] = out / "scores.jsonl"
    with open(paths["scores"], "w", encoding="utf-8") as fh:
        for row in report.per_sentence:
            fh.write(json.dumps({"config_hash": report.config_hash, **row}, ensure_ascii=False) + "\n")
        for row in report.rows:
            fh.write(
                json.dumps(
                    {"config_hash": report.config_hash, "summary": True, **row.to_dict()},
                    ensure_ascii=False,
                )
                + "\n"
            )

    sizes = [r.size for r in report.rows]
    if case_sizes is None:
        case_sizes = sorted({sizes[0], sizes[len(sizes) // 2], sizes[-1]})
    if case_ids is None:
        case_ids = sorted(report.outputs)[:2]
    if case_ids:
        paths["cases"] = out / "cases.md"
        paths["cases"].write_text(case_report(report, case_ids, case_sizes), encoding="utf-8")
    return paths

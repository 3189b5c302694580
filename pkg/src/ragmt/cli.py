"""Command-line entry points for every pipeline stage and the full sweep.

Exit codes: 0 success, 1 operational error (bad data, contamination, backend
failure), 2 usage error. Remote backends read their API credential from the
environment variable named in the config (default RAGMT_API_KEY).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ragmt import bleu
from ragmt.analysis import analyze_sentence
from ragmt.config import (
    ConfigError,
    PipelineConfig,
    build_analysis_backend,
    build_encoder,
    config_hash,
    load_config,
)
from ragmt.corpus import (
    CorpusError,
    CorpusRole,
    check_disjoint,
    dedup_and_clean,
    kb_meta_violations,
    load_pairs,
    save_pairs,
)
from ragmt.generation import RunLog
from ragmt.harness import (
    ContaminationError,
    build_context,
    run_sentence,
    sweep,
    write_sweep_artifacts,
)
from ragmt.retrieval import EmbeddingCache, RetrieverConfig, build_index, embed, load_index, save_index, search


def _print(obj) -> None:
    print(json.dumps(obj, ensure_ascii=False, indent=2))


def _overrides(args) -> dict:
    over: dict = {}
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "k", None) is not None:
        over["k"] = args.k
    if getattr(args, "sizes", None):
        over["sizes"] = tuple(int(s) for s in args.sizes.split(","))
    if getattr(args, "bare_baseline", False):
        over["bare_baseline"] = True
    if getattr(args, "backend", None):
        over["generation.kind"] = args.backend
    if getattr(args, "encoder", None):
        over["encoder.kind"] = args.encoder
    return over


def _config(args) -> PipelineConfig:
    return load_config(getattr(args, "config", None), _overrides(args))


def cmd_ingest(args) -> int:
    role = CorpusRole.TEST_SET if args.role == "test" else CorpusRole.KNOWLEDGE_BASE
    corpus = load_pairs(args.infile, format=args.format, role=role)
    cleaned, removed = dedup_and_clean(corpus)
    if args.out:
        save_pairs(cleaned, args.out)
    _print(
        {
            "loaded": len(corpus),
            "kept": len(cleaned),
            "removed": removed,
            "missing_nmcc_mark": kb_meta_violations(cleaned),
            "out": args.out,
        }
    )
    return 0


def cmd_check(args) -> int:
    test = load_pairs(args.test, role=CorpusRole.TEST_SET)
    kb = load_pairs(args.kb, role=CorpusRole.KNOWLEDGE_BASE)
    report = check_disjoint(test, kb)
    _print(report.to_dict())
    return 0 if report.is_clean() else 1


def cmd_index(args) -> int:
    cfg = _config(args)
    kb = load_pairs(args.kb)
    encoder = build_encoder(cfg.encoder)
    cache = EmbeddingCache(args.cache)
    index = build_index(kb, encoder, cache)
    save_index(index, args.out)
    _print(
        {
            "entries": len(index),
            "dim": index.dim,
            "encoder_id": index.encoder_id,
            "out": args.out,
            "config_hash": config_hash(cfg),
        }
    )
    return 0


def cmd_analyze(args) -> int:
    cfg = _config(args)
    backend = build_analysis_backend(cfg.analysis)
    if args.sl:
        sentences = [args.sl]
    else:
        with open(args.infile, encoding="utf-8") as fh:
            sentences = [line.strip() for line in fh if line.strip()]
    rows = []
    for sl in sentences:
        result = analyze_sentence(sl, backend, cfg.template_version, cfg.analysis.max_parse_retries)
        rows.append({"sl": sl, **result.to_dict()})
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    else:
        for row in rows:
            print(json.dumps(row, ensure_ascii=False))
    return 0


def cmd_retrieve(args) -> int:
    cfg = _config(args)
    kb = load_pairs(args.kb)
    encoder = build_encoder(cfg.encoder)
    cache = EmbeddingCache(args.cache)
    if args.index:
        index = load_index(args.index)
    else:
        index = build_index(kb, encoder, cache)
    query = embed(args.query, encoder, cache)
    hits = search(index, query, RetrieverConfig(k=cfg.retriever.k))
    by_id = kb.by_id()
    _print(
        [
            {**h.to_dict(), "jp": by_id[h.pair_id].source_ja, "zh": by_id[h.pair_id].target_zh}
            for h in hits
        ]
    )
    return 0


def cmd_translate(args) -> int:
    cfg = _config(args)
    kb = load_pairs(args.kb) if args.kb else None
    ctx = build_context(cfg, cache_path=args.cache)
    from ragmt.corpus import subset

    if kb is not None and args.size > 0:
        sub = subset(kb, args.size, cfg.seed)
        index = build_index(sub, ctx.encoder, ctx.cache)
    else:
        from ragmt.corpus import Corpus

        sub = Corpus(pairs=())
        index = None
    record, analysis = run_sentence(args.sl, index, cfg, ctx, sub, test_id="cli")
    _print(
        {
            "sl": args.sl,
            "output_zh": record.output_zh,
            "analysis": analysis.to_dict() if analysis else None,
            "prompt": record.prompt.rendered,
            "backend": record.backend,
            "config_hash": config_hash(cfg),
        }
    )
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    with open(args.hyp, encoding="utf-8") as fh:
        hyps = [line.rstrip("\n") for line in fh]
    with open(args.ref, encoding="utf-8") as fh:
        refs = [line.rstrip("\n") for line in fh]
    hyps = [h for h in hyps if h.strip()]
    refs = [r for r in refs if r.strip()]
    if len(hyps) != len(refs):
        print(f"error: {len(hyps)} hypothesis lines vs {len(refs)} reference lines", file=sys.stderr)
        return 1
    rows = []
    for i, (hyp, ref) in enumerate(zip(hyps, refs), start=1):
        score = bleu.score_texts(hyp, ref, cfg.smoothing_eps)
        rows.append({"line": i, **score.to_dict()})
        print(f"line {i}: {score.score:.2f}")
    mean = bleu.macro_average([r["score"] for r in rows])
    print(f"mean: {mean:.2f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            fh.write(json.dumps({"summary": True, "mean": mean, "epsilon": cfg.smoothing_eps}) + "\n")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    test = load_pairs(args.test, role=CorpusRole.TEST_SET)
    kb = load_pairs(args.kb, role=CorpusRole.KNOWLEDGE_BASE)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = build_context(cfg, cache_path=args.cache)
    run_log = RunLog(out_dir / "runlog.jsonl")
    report = sweep(test, kb, cfg, ctx, run_log=run_log)
    case_ids = args.case_ids.split(",") if args.case_ids else None
    paths = write_sweep_artifacts(report, out_dir, case_ids=case_ids)
    print((out_dir / "table1.md").read_text(encoding="utf-8"))
    _print({"out": {k: str(v) for k, v in paths.items()}, "valid": report.valid})
    return 0 if report.valid else 1


def cmd_serve(args) -> int:
    import uvicorn

    from ragmt.service import build_service_context, create_app

    cfg = _config(args)
    kb = load_pairs(args.kb) if args.kb else None
    ctx = build_service_context(
        cfg,
        sessions_dir=args.sessions_dir,
        kb=kb,
        cache_path=args.cache,
        static_dir=args.static_dir,
    )
    app = create_app(ctx)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ragmt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True, cache=True):
        if config:
            p.add_argument("--config", default=None, help="TOML config file")
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--k", type=int, default=None)
            p.add_argument("--backend", default=None, help="generation backend kind override")
            p.add_argument("--encoder", default=None, help="encoder kind override")
        if cache:
            p.add_argument("--cache", default=None, help="embedding cache file")

    p = sub.add_parser("ingest", help="load, clean, and report a corpus file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=["jsonl", "tsv"], default=None)
    p.add_argument("--role", choices=["kb", "test"], default="kb")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("check", help="contamination gate between test set and knowledge base")
    p.add_argument("--test", required=True)
    p.add_argument("--kb", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("index", help="build and snapshot a vector index")
    p.add_argument("--kb", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("analyze", help="A1/A2 analysis for sentences")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--in", dest="infile", help="file with one sentence per line")
    group.add_argument("--sl", help="single sentence")
    p.add_argument("--out", default=None)
    common(p, cache=False)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("retrieve", help="top-k retrieval for a query sentence")
    p.add_argument("--kb", required=True)
    p.add_argument("--index", default=None, help="index snapshot (else built on the fly)")
    p.add_argument("--query", required=True)
    common(p)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("translate", help="single sentence through the full pipeline")
    p.add_argument("--sl", required=True)
    p.add_argument("--kb", default=None)
    p.add_argument("--size", type=int, default=0, help="knowledge-base subset size")
    common(p)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("evaluate", help="score hypothesis file against reference file")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out", default=None, help="write per-line scores as JSONL")
    common(p, cache=False)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="run the full knowledge-base size sweep")
    p.add_argument("--test", required=True)
    p.add_argument("--kb", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--sizes", default=None, help="comma-separated sizes, must include 0")
    p.add_argument("--bare-baseline", action="store_true", dest="bare_baseline")
    p.add_argument("--case-ids", default=None, help="comma-separated test ids for cases.md")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="start the workbench HTTP service")
    p.add_argument("--kb", default=None)
    p.add_argument("--sessions-dir", default="sessions")
    p.add_argument("--static-dir", default=None, help="built workbench assets")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    common(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ContaminationError as exc:
        _print(exc.report.to_dict())
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (CorpusError, ConfigError, FileNotFoundError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

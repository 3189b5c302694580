"""HTTP service for the human-in-the-loop translation workbench.

Sessions walk the five-step cycle (analyze -> retrieve -> compose ->
generate -> review) over the same pipeline modules the CLI uses; nothing is
reimplemented at the service layer. Each session is persisted as an
append-only JSONL event log and its current state is always rebuilt by
replaying that log, so the audit trail is the storage. Archived sessions are
immutable and exportable as a single audit document; reviewed translations
can be exported as knowledge-base candidate pairs.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from ragmt import bleu
from ragmt.analysis import NmccType, RiskCategory, analyze_sentence
from ragmt.config import (
    PipelineConfig,
    build_analysis_backend,
    build_encoder,
    build_generation_backend,
)
from ragmt.corpus import Corpus, PairMeta, SentencePair
from ragmt.generation import translate
from ragmt.promptgen import EnhancedPrompt, render_prompt
from ragmt.retrieval import EmbeddingCache, RetrievalHit, VectorIndex, build_index, embed, search


class ServiceError(Exception):
    def __init__(self, code: str, message: str, status: int = 400, missing: str | None = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status
        self.missing = missing

    def body(self) -> dict:
        body = {"code": self.code, "message": self.message}
        if self.missing:
            body["missing_prerequisite"] = self.missing
        return body


@dataclass
class SessionHit:
    pair_id: str
    jp: str
    zh: str
    distance: float
    similarity: float
    rank: int
    selected: bool = True
    justification: str = ""

    def to_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "jp": self.jp,
            "zh": self.zh,
            "distance": self.distance,
            "similarity": self.similarity,
            "rank": self.rank,
            "selected": self.selected,
            "justification": self.justification,
        }


@dataclass
class Session:
    """Materialized view of one session's event log."""

    session_id: str
    sl: str = ""
    status: str = "open"
    analysis: dict | None = None
    hits: list[SessionHit] = field(default_factory=list)
    prompt_versions: list[dict] = field(default_factory=list)
    outputs: list[dict] = field(default_factory=list)
    post_edits: list[dict] = field(default_factory=list)
    scores: list[dict] = field(default_factory=list)

    def apply(self, event: dict) -> None:
        etype, data = event["type"], event["data"]
        if etype == "created":
            self.sl = data["sl"]
        elif etype == "analyzed":
            self.analysis = data
        elif etype == "retrieved":
            self.hits = [SessionHit(**h) for h in data["hits"]]
        elif etype == "composed":
            for sel in data.get("selections", []):
                hit = self._hit_by_rank(sel["rank"])
                hit.selected = bool(sel["selected"])
                hit.justification = str(sel.get("justification", hit.justification))
            self.prompt_versions.append({"prompt": data["prompt"], "note": data.get("note", "")})
        elif etype == "generated":
            self.outputs.append(data)
        elif etype == "post_edited":
            self.post_edits.append(data)
        elif etype == "scored":
            self.scores.append(data)
        elif etype == "archived":
            self.status = "archived"
        else:
            raise ValueError(f"unknown event type {etype!r}")

    def _hit_by_rank(self, rank: int) -> SessionHit:
        for hit in self.hits:
            if hit.rank == rank:
                return hit
        raise ServiceError("unknown_hit", f"no retrieved hit with rank {rank}", 400)

    def selected_hits(self) -> list[SessionHit]:
        return [h for h in self.hits if h.selected]

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "sl": self.sl,
            "status": self.status,
            "analysis": self.analysis,
            "hits": [h.to_dict() for h in self.hits],
            "prompt_versions": self.prompt_versions,
            "outputs": self.outputs,
            "post_edits": self.post_edits,
            "scores": self.scores,
        }


class SessionStore:
    """One append-only JSONL event log per session; state is replayed from
    disk on every read, so what you see is exactly what is stored."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.jsonl"

    def exists(self, session_id: str) -> bool:
        return self._path(session_id).exists()

    def session_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.jsonl"))

    def load(self, session_id: str) -> Session:
        path = self._path(session_id)
        if not path.exists():
            raise ServiceError("unknown_session", f"no session {session_id!r}", 404)
        session = Session(session_id=session_id)
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    session.apply(json.loads(line))
        return session

    def append(self, session_id: str, etype: str, data: dict) -> Session:
        """Validate against current state, persist the event, return the new
        state. Callers must hold the session lock."""
        path = self._path(session_id)
        seq = 0
        if path.exists():
            with open(path, encoding="utf-8") as fh:
                seq = sum(1 for line in fh if line.strip())
        event = {"seq": seq, "type": etype, "data": data}
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")
        return self.load(session_id)


@dataclass
class ServiceContext:
    """Everything the API needs: corpus, index, backends, and the store."""

    cfg: PipelineConfig
    store: SessionStore
    kb: Corpus | None = None
    index: VectorIndex | None = None
    encoder: object = None
    cache: EmbeddingCache | None = None
    analysis_backend: object = None
    generation_backend: object = None
    static_dir: Path | None = None


def build_service_context(
    cfg: PipelineConfig,
    sessions_dir: str | Path,
    kb: Corpus | None = None,
    cache_path: str | Path | None = None,
    static_dir: str | Path | None = None,
) -> ServiceContext:
    encoder = build_encoder(cfg.encoder)
    cache = EmbeddingCache(cache_path)
    index = build_index(kb, encoder, cache) if kb is not None and len(kb) > 0 else None
    return ServiceContext(
        cfg=cfg,
        store=SessionStore(sessions_dir),
        kb=kb,
        index=index,
        encoder=encoder,
        cache=cache,
        analysis_backend=build_analysis_backend(cfg.analysis),
        generation_backend=build_generation_backend(cfg.generation),
        static_dir=Path(static_dir) if static_dir else None,
    )


def _require_open(session: Session) -> None:
    if session.status != "open":
        raise ServiceError("archived", "session is archived and immutable", 409)


def _require(session: Session, ok: bool, missing: str) -> None:
    if not ok:
        raise ServiceError(
            "missing_prerequisite", f"step requires {missing} first", 409, missing=missing
        )


def step_analyze(ctx: ServiceContext, session_id: str) -> Session:
    with ctx.store.lock(session_id):
        session = ctx.store.load(session_id)
        _require_open(session)
        result = analyze_sentence(
            session.sl,
            ctx.analysis_backend,
            ctx.cfg.template_version,
            ctx.cfg.analysis.max_parse_retries,
        )
        return ctx.store.append(session_id, "analyzed", result.to_dict())


def step_retrieve(ctx: ServiceContext, session_id: str, k: int | None = None) -> Session:
    with ctx.store.lock(session_id):
        session = ctx.store.load(session_id)
        _require_open(session)
        _require(session, session.analysis is not None, "analyze")
        if ctx.index is None or ctx.kb is None:
            raise ServiceError("no_index", "no knowledge-base index loaded", 409, missing="index")
        cfg = ctx.cfg.retriever if k is None else type(ctx.cfg.retriever)(
            k=k, normalize_vectors=ctx.cfg.retriever.normalize_vectors
        )
        query = embed(session.sl, ctx.encoder, ctx.cache)
        hits = search(ctx.index, query, cfg)
        by_id = ctx.kb.by_id()
        data = {
            "hits": [
                SessionHit(
                    pair_id=h.pair_id,
                    jp=by_id[h.pair_id].source_ja,
                    zh=by_id[h.pair_id].target_zh,
                    distance=h.distance,
                    similarity=h.similarity,
                    rank=h.rank,
                ).to_dict()
                for h in hits
            ]
        }
        return ctx.store.append(session_id, "retrieved", data)


def step_compose(
    ctx: ServiceContext,
    session_id: str,
    selections: list[dict] | None = None,
    note: str = "",
) -> Session:
    with ctx.store.lock(session_id):
        session = ctx.store.load(session_id)
        _require_open(session)
        _require(session, session.analysis is not None, "analyze")
        _require(session, bool(session.hits), "retrieve")
        # Resolve selection changes against current state before persisting,
        # so replaying the event reproduces exactly what was rendered here.
        resolved = []
        for sel in selections or []:
            current = session._hit_by_rank(int(sel["rank"]))
            resolved.append(
                {
                    "rank": int(sel["rank"]),
                    "selected": bool(sel["selected"]),
                    "justification": str(sel.get("justification", current.justification)),
                }
            )
        scratch = ctx.store.load(session_id)
        for sel in resolved:
            hit = scratch._hit_by_rank(sel["rank"])
            hit.selected = sel["selected"]
            hit.justification = sel["justification"]
        chosen = scratch.selected_hits()
        a1 = NmccType(session.analysis["a1"])
        a2 = frozenset(RiskCategory(v) for v in session.analysis["a2"])
        retrieval_hits = [
            RetrievalHit(
                pair_id=h.pair_id, distance=h.distance, similarity=h.similarity, rank=h.rank
            )
            for h in chosen
        ]
        prompt_kb = Corpus(
            pairs=tuple(
                SentencePair(id=h.pair_id, source_ja=h.jp, target_zh=h.zh) for h in session.hits
            )
        )
        prompt = render_prompt(
            session.sl, a1, a2, retrieval_hits, prompt_kb, ctx.cfg.template_version
        )
        event = {"selections": resolved, "prompt": prompt.to_dict(), "note": note}
        return ctx.store.append(session_id, "composed", event)


def step_generate(ctx: ServiceContext, session_id: str) -> Session:
    with ctx.store.lock(session_id):
        session = ctx.store.load(session_id)
        _require_open(session)
        _require(session, bool(session.prompt_versions), "compose")
        prompt = EnhancedPrompt(**session.prompt_versions[-1]["prompt"])
        record = translate(
            prompt,
            ctx.generation_backend,
            test_id=session_id,
            max_retries=ctx.cfg.generation.max_retries,
        )
        data = {
            "output_zh": record.output_zh,
            "backend": record.backend,
            "attempt_count": record.attempt_count,
            "prompt_version": len(session.prompt_versions) - 1,
        }
        return ctx.store.append(session_id, "generated", data)


def step_post_edit(ctx: ServiceContext, session_id: str, text: str, note: str = "") -> Session:
    with ctx.store.lock(session_id):
        session = ctx.store.load(session_id)
        _require_open(session)
        _require(session, bool(session.outputs), "generate")
        if not text.strip():
            raise ServiceError("empty_post_edit", "post-edit text must be non-empty", 400)
        return ctx.store.append(session_id, "post_edited", {"text": text, "note": note})


def step_score(ctx: ServiceContext, session_id: str, reference: str) -> Session:
    """Score the current best candidate (latest post-edit, else latest
    output) against a user-supplied reference translation."""
    with ctx.store.lock(session_id):
        session = ctx.store.load(session_id)
        _require_open(session)
        _require(session, bool(session.outputs), "generate")
        if not reference.strip():
            raise ServiceError("empty_reference", "reference must be non-empty", 400)
        if session.post_edits:
            candidate = session.post_edits[-1]["text"]
            candidate_kind = "post_edit"
        else:
            candidate = session.outputs[-1]["output_zh"]
            candidate_kind = "output"
        score = bleu.score_texts(candidate, reference, ctx.cfg.smoothing_eps)
        data = {
            "reference": reference,
            "candidate": candidate,
            "candidate_kind": candidate_kind,
            "bleu": score.to_dict(),
        }
        return ctx.store.append(session_id, "scored", data)


def step_archive(ctx: ServiceContext, session_id: str) -> Session:
    with ctx.store.lock(session_id):
        session = ctx.store.load(session_id)
        _require_open(session)
        if not session.outputs and not session.post_edits:
            raise ServiceError(
                "missing_prerequisite",
                "archive requires at least one output or post-edit",
                409,
                missing="generate",
            )
        unjustified = [h.rank for h in session.hits if not h.justification.strip()]
        if unjustified:
            raise ServiceError(
                "unjustified_hits",
                f"hits without justification: ranks {unjustified}",
                409,
            )
        return ctx.store.append(session_id, "archived", {})


def export_session(session: Session) -> dict:
    """Single audit document: worksheet, retrieval log, prompt versions,
    translations, and review records."""
    return {
        "session_id": session.session_id,
        "sl": session.sl,
        "status": session.status,
        "analysis_worksheet": session.analysis,
        "retrieval_log": [h.to_dict() for h in session.hits],
        "prompt_versions": session.prompt_versions,
        "translations": session.outputs,
        "review_records": {"post_edits": session.post_edits, "scores": session.scores},
    }


def export_kb_candidates(store: SessionStore, session_ids: list[str]) -> list[SentencePair]:
    """Turn archived sessions into knowledge-base candidate pairs: the source
    sentence paired with the final post-edit (or, failing that, the latest
    output), provenance-stamped with the session id."""
    pairs = []
    for sid in session_ids:
        session = store.load(sid)
        if session.status != "archived":
            raise ServiceError("not_archived", f"session {sid!r} is not archived", 409)
        if session.post_edits:
            target = session.post_edits[-1]["text"]
        elif session.outputs:
            target = session.outputs[-1]["output_zh"]
        else:
            raise ServiceError("no_candidate", f"session {sid!r} has no output", 409)
        pairs.append(
            SentencePair(
                id=f"wb-{sid}",
                source_ja=session.sl,
                target_zh=target,
                meta=PairMeta(genre="workbench", provenance_note=sid),
            )
        )
    return pairs


def create_app(ctx: ServiceContext):
    from fastapi import FastAPI, Request
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import HTMLResponse, JSONResponse

    app = FastAPI(title="ragmt workbench service")

    @app.exception_handler(ServiceError)
    async def service_error_handler(request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422, content={"code": "validation_error", "message": str(exc.errors())}
        )

    @app.post("/sessions", status_code=201)
    def create_session(body: dict):
        sl = str(body.get("sl", ""))
        if not sl.strip():
            raise ServiceError("empty_sl", "sl must be non-empty", 400)
        session_id = uuid.uuid4().hex[:12]
        with ctx.store.lock(session_id):
            session = ctx.store.append(session_id, "created", {"sl": sl})
        return session.to_dict()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return ctx.store.load(session_id).to_dict()

    @app.post("/sessions/{session_id}/analyze")
    def analyze(session_id: str):
        return step_analyze(ctx, session_id).to_dict()

    @app.post("/sessions/{session_id}/retrieve")
    def retrieve(session_id: str, body: dict | None = None):
        k = (body or {}).get("k")
        return step_retrieve(ctx, session_id, k=int(k) if k is not None else None).to_dict()

    @app.post("/sessions/{session_id}/compose")
    def compose(session_id: str, body: dict | None = None):
        body = body or {}
        return step_compose(
            ctx, session_id, selections=body.get("selections"), note=str(body.get("note", ""))
        ).to_dict()

    @app.post("/sessions/{session_id}/generate")
    def generate(session_id: str):
        return step_generate(ctx, session_id).to_dict()

    @app.post("/sessions/{session_id}/postedit")
    def post_edit(session_id: str, body: dict):
        return step_post_edit(
            ctx, session_id, text=str(body.get("text", "")), note=str(body.get("note", ""))
        ).to_dict()

    @app.post("/sessions/{session_id}/score")
    def score(session_id: str, body: dict):
        return step_score(ctx, session_id, reference=str(body.get("reference", ""))).to_dict()

    @app.post("/sessions/{session_id}/archive")
    def archive(session_id: str):
        return step_archive(ctx, session_id).to_dict()

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str):
        return export_session(ctx.store.load(session_id))

    @app.get("/kb/status")
    def kb_status():
        return {
            "pairs": len(ctx.kb) if ctx.kb is not None else 0,
            "index_loaded": ctx.index is not None,
            "dim": ctx.index.dim if ctx.index is not None else None,
            "encoder_id": ctx.index.encoder_id if ctx.index is not None else None,
        }

    @app.post("/kb/export")
    def kb_export(body: dict):
        ids = [str(s) for s in body.get("session_ids", [])]
        pairs = export_kb_candidates(ctx.store, ids)
        jsonl = "".join(json.dumps(p.to_dict(), ensure_ascii=False) + "\n" for p in pairs)
        return {"pairs": [p.to_dict() for p in pairs], "jsonl": jsonl}

    if ctx.static_dir is not None and ctx.static_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ctx.static_dir, html=True), name="workbench")
    else:

        @app.get("/", response_class=HTMLResponse)
        def root():
            return (
                "<html><body><h1>ragmt workbench service</h1>"
                "<p>No workbench assets found; build the frontend and point "
                "the server at its dist directory.</p></body></html>"
            )

    return app

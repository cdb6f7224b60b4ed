"""HTTP service tying the pipeline together for the studio UI and batch use.

Generation is asynchronous: POST /api/dances answers 202 immediately and the
plan/performance appear when polling the record. Records live in the
content-addressed store; provider failures land in the record status rather
than hanging a request.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
from fastapi import BackgroundTasks, Body, FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .compiler import (
    CompiledPerformance,
    CompileOptions,
    Segment,
    compile_plan,
    export_glb,
    frames_json_document,
)
from .elements import SixElementsAdjustment
from .generator import (
    GenerationError,
    InvalidPrompt,
    RetriesExhausted,
    StoryPrompt,
    StubProvider,
    RecordedProvider,
    HostedProvider,
    RetryPolicy,
    adjustments_json_schema,
    generate_plan,
    plan_json_schema,
    validate_plan,
)
from .jsonio import content_hash, dumps_canonical_bytes
from .library import Library
from .motion import AnimationClip
from .store import RecordStore

logger = logging.getLogger("storydance.service")

PROVIDERS = ("stub", "recorded", "hosted")


def log_event(event: str, **fields) -> None:
    logger.info(json.dumps({"event": event, **fields}, sort_keys=True))


@dataclass(frozen=True)
class ServiceConfig:
    library_path: Path = Path("library/manifest.json")
    store_dir: Path = Path("store")
    provider: str = "stub"
    host: str = "127.0.0.1"
    port: int = 8844
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    compile_options: CompileOptions = field(default_factory=CompileOptions)
    strict_library: bool = True
    cors_origins: tuple[str, ...] = ("*",)

    @classmethod
    def from_file(cls, path: Path | str | None, env=os.environ) -> "ServiceConfig":
        """Config file plus STORYDANCE_* environment overrides."""
        raw: dict = {}
        if path is not None:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        def pick(key, default):
            return env.get(f"STORYDANCE_{key.upper()}", raw.get(key, default))
        return cls(
            library_path=Path(pick("library", "library/manifest.json")),
            store_dir=Path(pick("store", "store")),
            provider=str(pick("provider", "stub")),
            host=str(pick("host", "127.0.0.1")),
            port=int(pick("port", 8844)),
            retry=RetryPolicy(
                max_attempts=int(pick("max_attempts", 3)),
                timeout_s=float(pick("timeout_s", 30.0))),
            compile_options=CompileOptions(
                crossfade=float(pick("crossfade", 0.5)),
                output_rate=float(pick("output_rate", 30.0))),
            strict_library=bool(raw.get("strict_library", True)),
            cors_origins=tuple(raw.get("cors_origins", ("*",))),
        )


def make_provider(name: str, library: Library):
    if name == "stub":
        return StubProvider(library.manifest)
    if name == "recorded":
        return RecordedProvider()
    if name == "hosted":
        return HostedProvider()  # raises if PROVIDER_API_KEY is absent
    raise ValueError(f"unknown provider {name!r}; expected one of {PROVIDERS}")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _error_body(issues) -> dict:
    return {"detail": [{"path": p, "message": m} for p, m in issues]}


_ADJUSTMENTS_VALIDATOR = jsonschema.Draft202012Validator(adjustments_json_schema())


class DanceService:
    """Application core shared by the HTTP layer and the tests."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.library = Library(config.library_path, strict=config.strict_library)
        self.store = RecordStore(config.store_dir)
        self.provider = make_provider(config.provider, self.library)

    # -- identity -----------------------------------------------------------

    def dance_id_for(self, prompt: StoryPrompt) -> str:
        return content_hash({
            "prompt": prompt.normalized,
            "provider": self.provider.name,
            "library": self.library.fingerprint,
        })

    # -- generation ---------------------------------------------------------

    def request_dance(self, prompt: StoryPrompt) -> tuple[str, bool]:
        """Create (or reuse) the record; returns (dance_id, needs_generation)."""
        dance_id = self.dance_id_for(prompt)
        with self.store.lock(dance_id):
            record = self.store.load_dance(dance_id)
            if record is not None and record["status"] in ("generating", "ready"):
                return dance_id, False
            self.store.save_dance({
                "dance_id": dance_id,
                "prompt": prompt.text,
                "provider": self.provider.name,
                "library": self.library.fingerprint,
                "created_at": _now(),
                "status": "generating",
                "error": None,
                "plan": None,
                "provenance": None,
                "exchanges": [],
                "performances": [],
                "current_performance": None,
            })
        log_event("dance.requested", dance_id=dance_id)
        return dance_id, True

    def run_generation(self, dance_id: str) -> None:
        record = self.store.load_dance(dance_id)
        if record is None:
            return
        prompt = StoryPrompt(record["prompt"])
        try:
            plan, exchanges = generate_plan(
                prompt, self.provider, self.library.manifest,
                joint_ids=self.library.skeleton.joint_ids,
                policy=self.config.retry)
            perf = compile_plan(plan, self.library, self.config.compile_options)
            self._persist_performance(perf)
            with self.store.lock(dance_id):
                record.update(
                    status="ready",
                    plan=plan.to_json_dict(),
                    provenance={
                        "provider": plan.provenance.provider,
                        "attempts": plan.provenance.attempts,
                        "created_at": plan.provenance.created_at,
                    },
                    exchanges=[e.to_json_dict() for e in exchanges],
                    performances=[{"id": perf.id, "created_at": _now()}],
                    current_performance=perf.id,
                )
                self.store.save_dance(record)
            log_event("dance.ready", dance_id=dance_id, performance=perf.id,
                      exchanges=len(exchanges))
        except RetriesExhausted as e:
            with self.store.lock(dance_id):
                record.update(status="failed", error=str(e),
                              exchanges=[x.to_json_dict() for x in e.exchanges])
                self.store.save_dance(record)
            log_event("dance.failed", dance_id=dance_id, error=str(e))
        except GenerationError as e:
            with self.store.lock(dance_id):
                record.update(status="failed", error=str(e))
                self.store.save_dance(record)
            log_event("dance.failed", dance_id=dance_id, error=str(e))

    def _persist_performance(self, perf: CompiledPerformance) -> None:
        meta = {
            "performance_id": perf.id,
            "total_duration": perf.total_duration,
            "segments": [s.to_json_dict() for s in perf.segments],
        }
        self.store.save_performance(perf.id, perf.clip.to_json_dict(), meta)

    def load_performance(self, perf_id: str) -> CompiledPerformance | None:
        loaded = self.store.load_performance(perf_id)
        if loaded is None:
            return None
        clip_doc, meta = loaded
        clip = AnimationClip.from_json_dict(clip_doc)
        segments = tuple(
            Segment(index=s["index"], movement_id=s["movement_id"],
                    start=s["start"], end=s["end"],
                    adjustments=SixElementsAdjustment.from_json_dict(
                        s.get("adjustments", {})))
            for s in meta["segments"])
        return CompiledPerformance(id=meta["performance_id"], clip=clip,
                                   segments=segments,
                                   total_duration=meta["total_duration"])

    # -- refinement -----------------------------------------------------------

    def refine(self, dance_id: str, selection_index: int,
               adjustments: SixElementsAdjustment) -> dict:
        """Swap one selection's adjustments and compile a new version.

        Returns the updated record. Caller must have verified status=ready.
        """
        with self.store.lock(dance_id):
            record = self.store.load_dance(dance_id)
            plan = validate_plan(record["plan"], self.library.manifest,
                                 joint_ids=self.library.skeleton.joint_ids)
            selections = list(plan.selections)
            selections[selection_index] = replace(
                selections[selection_index], adjustments=adjustments)
            plan = replace(plan, selections=tuple(selections))
            perf = compile_plan(plan, self.library, self.config.compile_options)
            if not self.store.has_performance(perf.id):
                self._persist_performance(perf)
            record["plan"] = plan.to_json_dict()
            if perf.id not in [p["id"] for p in record["performances"]]:
                record["performances"].append({"id": perf.id, "created_at": _now()})
            record["current_performance"] = perf.id
            self.store.save_dance(record)
        log_event("refine.applied", dance_id=dance_id,
                  selection=selection_index, performance=perf.id)
        return record


def create_app(config: ServiceConfig | None = None,
               service: DanceService | None = None) -> FastAPI:
    service = service or DanceService(config or ServiceConfig())
    app = FastAPI(title="storydance", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(service.config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.service = service

    @app.get("/api/movements")
    def list_movements():
        return [{"id": m.id, "gloss": m.english_gloss,
                 "tags": list(m.meaning_tags)}
                for m in service.library.manifest.movements]

    @app.get("/api/movements/{movement_id}/clip.glb")
    def movement_clip(movement_id: str):
        try:
            data = service.library.clip_bytes(movement_id)
        except (KeyError, FileNotFoundError):
            return JSONResponse({"detail": f"unknown movement {movement_id!r}"},
                                status_code=404)
        return Response(content=data, media_type="model/gltf-binary")

    @app.post("/api/dances", status_code=202)
    def create_dance(background: BackgroundTasks, body: dict | None = Body(None)):
        raw = (body or {}).get("prompt")
        if not isinstance(raw, str):
            return JSONResponse(
                _error_body([("prompt", "prompt must be a string")]), 400)
        try:
            prompt = StoryPrompt(raw)
        except InvalidPrompt as e:
            return JSONResponse(_error_body([("prompt", str(e))]), 400)
        dance_id, needs_generation = service.request_dance(prompt)
        if needs_generation:
            background.add_task(service.run_generation, dance_id)
        return {"dance_id": dance_id}

    @app.get("/api/dances/{dance_id}")
    def get_dance(dance_id: str):
        record = service.store.load_dance(dance_id)
        if record is None:
            return JSONResponse({"detail": "unknown dance id"}, 404)
        return record

    @app.get("/api/dances/{dance_id}/performance")
    def get_performance(dance_id: str, format: str = "frames-json",
                        version: str | None = None):
        record = service.store.load_dance(dance_id)
        if record is None:
            return JSONResponse({"detail": "unknown dance id"}, 404)
        if record["status"] == "failed":
            return JSONResponse({"detail": record["error"]}, 502)
        if record["status"] != "ready":
            return JSONResponse({"detail": "performance not ready"}, 404)
        perf_id = version or record["current_performance"]
        known = [p["id"] for p in record["performances"]]
        if perf_id not in known:
            return JSONResponse({"detail": f"unknown version {perf_id!r}"}, 404)
        perf = service.load_performance(perf_id)
        if perf is None:
            return JSONResponse({"detail": "performance record missing"}, 404)
        if format == "frames-json":
            doc = frames_json_document(perf, service.library.skeleton)
            return Response(content=dumps_canonical_bytes(doc),
                            media_type="application/json")
        if format == "glb":
            return Response(content=export_glb(perf, service.library.skeleton),
                            media_type="model/gltf-binary")
        return JSONResponse(
            _error_body([("format", f"unsupported format {format!r}")]), 400)

    @app.post("/api/dances/{dance_id}/refine")
    def refine_dance(dance_id: str, body: dict | None = Body(None)):
        record = service.store.load_dance(dance_id)
        if record is None:
            return JSONResponse({"detail": "unknown dance id"}, 404)
        if record["status"] != "ready":
            return JSONResponse(
                {"detail": f"dance is {record['status']}, not ready"}, 409)
        body = body or {}
        index = body.get("selection_index")
        if not isinstance(index, int) or isinstance(index, bool) or \
                not (0 <= index < len(record["plan"]["selections"])):
            return JSONResponse(_error_body(
                [("selection_index", "must be an integer index into selections")]),
                400)
        raw_adjustments = body.get("adjustments", {})
        issues = [(f"adjustments{e.json_path[1:]}", e.message)
                  for e in sorted(_ADJUSTMENTS_VALIDATOR.iter_errors(raw_adjustments),
                                  key=lambda e: e.json_path)]
        if issues:
            return JSONResponse(_error_body(issues), 400)
        ap = (raw_adjustments or {}).get("axis_point")
        if ap and ap.get("joint") not in service.library.skeleton.joint_ids:
            return JSONResponse(_error_body(
                [("adjustments.axis_point.joint",
                  f"unknown joint {ap.get('joint')!r}")]), 400)
        adjustments = SixElementsAdjustment.from_json_dict(raw_adjustments)
        record = service.refine(dance_id, index, adjustments)
        return {
            "dance_id": dance_id,
            "performance_id": record["current_performance"],
            "versions": [p["id"] for p in record["performances"]],
        }

    @app.get("/api/schema/plan")
    def get_plan_schema():
        return plan_json_schema()

    return app

"""Command-line entry points.

Exit codes: 0 success, 1 validation failure, 2 I/O or provider failure.
Pass --json for machine-readable stdout.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .compiler import (
    CompileError,
    CompileOptions,
    compile_plan,
    export_frames_json,
    export_glb,
    segments_sidecar,
)
from .elements import ParameterRangeError
from .generator import (
    GenerationError,
    InvalidPrompt,
    RetryPolicy,
    SchemaViolation,
    StoryPrompt,
    generate_plan,
    validate_plan,
)
from .gltf import GltfError
from .jsonio import dumps_canonical_bytes, write_atomic
from .library import Library, ManifestError
from .motion import MotionError
from .reference import MOVEMENT_COUNT, build_reference_library
from .service import DanceService, ServiceConfig, create_app, make_provider

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2

VALIDATION_ERRORS = (ManifestError, SchemaViolation, InvalidPrompt,
                     CompileError, GltfError, MotionError,
                     ParameterRangeError, ValueError)


def _emit(args, payload: dict, text: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def _load_library(args) -> Library:
    return Library(Path(args.library), strict=not getattr(args, "dev", False))


def _read_plan(args, library: Library):
    with open(args.plan, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return validate_plan(raw, library.manifest,
                         joint_ids=library.skeleton.joint_ids)


def cmd_build_library(args) -> int:
    manifest = build_reference_library(args.out, count=args.count)
    _emit(args, {"manifest": str(manifest), "movements": args.count},
          f"built reference library with {args.count} movements at {manifest}")
    return EXIT_OK


def cmd_validate_library(args) -> int:
    library = Library(Path(args.manifest), strict=not args.dev)
    report = library.validate()
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        bad = [m for m in report["movements"] if not m["ok"]]
        print(f"library {report['version']}: {report['movement_count']} movements, "
              + ("all valid" if report["ok"] else f"{len(bad)} invalid"))
        for m in bad:
            print(f"  {m['id']}: {'; '.join(m['errors'])}")
    return EXIT_OK if report["ok"] else EXIT_VALIDATION


def cmd_generate(args) -> int:
    library = _load_library(args)
    provider = make_provider(args.provider, library)
    policy = RetryPolicy(max_attempts=args.max_attempts, timeout_s=args.timeout)
    plan, exchanges = generate_plan(StoryPrompt(args.prompt), provider,
                                    library.manifest,
                                    joint_ids=library.skeleton.joint_ids,
                                    policy=policy)
    write_atomic(args.out, dumps_canonical_bytes(plan.to_json_dict()))
    _emit(args, {
        "out": str(args.out),
        "selections": [s.movement_id for s in plan.selections],
        "attempts": plan.provenance.attempts,
        "provider": plan.provenance.provider,
    }, f"wrote {args.out}: {len(plan.selections)} selections "
       f"({', '.join(s.movement_id for s in plan.selections)}) "
       f"after {plan.provenance.attempts} attempt(s)")
    return EXIT_OK


def _compile_from_args(args, library: Library):
    plan = _read_plan(args, library)
    options = CompileOptions(crossfade=args.crossfade, output_rate=args.rate)
    return compile_plan(plan, library, options)


def cmd_compile(args) -> int:
    library = _load_library(args)
    perf = _compile_from_args(args, library)
    out = Path(args.out)
    write_atomic(out, export_glb(perf, library.skeleton))
    sidecar = out.with_suffix(out.suffix + ".segments.json")
    write_atomic(sidecar, segments_sidecar(perf))
    _emit(args, {"out": str(out), "sidecar": str(sidecar),
                 "performance_id": perf.id, "duration": perf.total_duration},
          f"wrote {out} ({perf.total_duration:.2f}s, id {perf.id[:12]}) "
          f"and {sidecar}")
    return EXIT_OK


def cmd_export_frames(args) -> int:
    library = _load_library(args)
    perf = _compile_from_args(args, library)
    write_atomic(args.out, export_frames_json(perf, library.skeleton))
    _emit(args, {"out": str(args.out), "performance_id": perf.id,
                 "duration": perf.total_duration},
          f"wrote {args.out} ({perf.total_duration:.2f}s, id {perf.id[:12]})")
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import render_report

    with open(args.frames, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    for key in ("rate", "frames", "segments"):
        if key not in doc:
            raise ValueError(f"frames document missing field {key!r}")
    paths = render_report(doc, args.out_dir, stem=args.stem)
    _emit(args, {"written": [str(p) for p in paths]},
          "wrote " + ", ".join(str(p) for p in paths))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    config = ServiceConfig.from_file(args.config)
    overrides = {}
    if args.library:
        overrides["library_path"] = Path(args.library)
    if args.store:
        overrides["store_dir"] = Path(args.store)
    if args.provider:
        overrides["provider"] = args.provider
    if args.host:
        overrides["host"] = args.host
    if args.port:
        overrides["port"] = args.port
    if overrides:
        from dataclasses import replace
        config = replace(config, **overrides)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    app = create_app(service=DanceService(config))
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="storydance",
        description="Story prompts to playable performances over a "
                    "traditional movement alphabet.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, library=True):
        p.add_argument("--json", action="store_true",
                       help="machine-readable stdout")
        if library:
            p.add_argument("--library", default="library/manifest.json",
                           help="path to the library manifest")
            p.add_argument("--dev", action="store_true",
                           help="allow manifests without the full 59 movements")

    p = sub.add_parser("build-library", help="write the reference library")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=MOVEMENT_COUNT)
    common(p, library=False)
    p.set_defaults(func=cmd_build_library)

    p = sub.add_parser("validate-library", help="check manifest and clips")
    p.add_argument("--manifest", required=True)
    p.add_argument("--dev", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_validate_library)

    p = sub.add_parser("generate", help="turn a story prompt into a plan")
    p.add_argument("--prompt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--provider", default="stub",
                   choices=["stub", "recorded", "hosted"])
    p.add_argument("--max-attempts", type=int, default=3)
    p.add_argument("--timeout", type=float, default=30.0)
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("compile", help="compile a plan to a .glb performance")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--crossfade", type=float, default=0.5)
    p.add_argument("--rate", type=float, default=30.0)
    common(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("export-frames", help="compile a plan to frames-json")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--crossfade", type=float, default=0.5)
    p.add_argument("--rate", type=float, default=30.0)
    common(p)
    p.set_defaults(func=cmd_export_frames)

    p = sub.add_parser("report", help="figures and CSV from a frames export")
    p.add_argument("--frames", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--stem", default="performance")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", default=None)
    p.add_argument("--library", default=None)
    p.add_argument("--store", default=None)
    p.add_argument("--provider", default=None,
                   choices=["stub", "recorded", "hosted"])
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VALIDATION_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, GenerationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

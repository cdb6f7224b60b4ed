"""Compile a validated dance plan into one playable, blended timeline."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .elements import SixElementsAdjustment, apply_all
from .generator import DancePlan
from .gltf import write_glb
from .jsonio import content_hash, dumps_canonical_bytes
from .library import Library
from .motion import AnimationClip, Skeleton, crossfade, resample, retime

EXPORT_FORMATS = ("frames-json", "glb")


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class CompileOptions:
    crossfade: float = 0.5
    output_rate: float = 30.0

    def __post_init__(self):
        if self.crossfade < 0:
            raise CompileError("crossfade must be >= 0")
        if not (self.output_rate > 0):
            raise CompileError("output_rate must be positive")

    def to_json_dict(self) -> dict:
        return {"crossfade": self.crossfade, "output_rate": self.output_rate}


@dataclass(frozen=True)
class Segment:
    index: int
    movement_id: str
    start: float
    end: float
    adjustments: SixElementsAdjustment

    def to_json_dict(self) -> dict:
        return {
            "index": self.index,
            "movement_id": self.movement_id,
            "start": self.start,
            "end": self.end,
            "adjustments": self.adjustments.to_json_dict(),
        }


@dataclass(frozen=True)
class CompiledPerformance:
    id: str
    clip: AnimationClip
    segments: tuple[Segment, ...]
    total_duration: float


def performance_id(plan: DancePlan, options: CompileOptions,
                   library_fingerprint: str) -> str:
    """Content hash over everything that determines the output frames."""
    return content_hash({
        "plan": plan.to_json_dict(),
        "options": options.to_json_dict(),
        "library": library_fingerprint,
    })


def compile_plan(plan: DancePlan, library: Library,
                 options: CompileOptions | None = None) -> CompiledPerformance:
    """Refine, retime, and crossfade every selection into one clip.

    Per selection: load the movement clip, apply the six-element adjustments,
    stretch by duration_scale, resample at the output rate, then join the
    pieces with the configured crossfade (clamped to 0 for a single
    selection). The segment index maps output time spans back to selections.
    """
    if not plan.selections:
        raise CompileError("plan has no selections")
    options = options or CompileOptions()

    pieces: list[AnimationClip] = []
    for sel in plan.selections:
        try:
            clip = library.clip(sel.movement_id)
        except KeyError:
            raise CompileError(f"unknown movement id {sel.movement_id!r}") from None
        except OSError as e:
            raise CompileError(f"missing clip file for {sel.movement_id}: {e}") from e
        clip = apply_all(clip, sel.adjustments, library.skeleton, library.regions)
        clip = retime(clip, sel.duration_scale)
        clip = resample(clip, options.output_rate)
        pieces.append(clip)

    fade = options.crossfade if len(pieces) > 1 else 0.0
    shortest = min(p.duration for p in pieces)
    if fade >= shortest and len(pieces) > 1:
        raise CompileError(
            f"crossfade {fade}s is not shorter than the shortest segment "
            f"({shortest}s)")

    segments = []
    start = 0.0
    for i, (sel, piece) in enumerate(zip(plan.selections, pieces)):
        segments.append(Segment(index=i, movement_id=sel.movement_id,
                                start=start, end=start + piece.duration,
                                adjustments=sel.adjustments))
        start += piece.duration - fade

    combined = pieces[0]
    for piece in pieces[1:]:
        combined = crossfade(combined, piece, fade)
    combined = AnimationClip(name="performance", duration=combined.duration,
                             sample_rate=combined.sample_rate,
                             channels=combined.channels)
    # Quantize through the canonical 9-digit serialization so the in-memory
    # performance and its stored form are the same object: every export path
    # (direct, CLI, or via the record store) emits identical bytes.
    combined = AnimationClip.from_json_dict(
        json.loads(dumps_canonical_bytes(combined.to_json_dict())))

    return CompiledPerformance(
        id=performance_id(plan, options, library.fingerprint),
        clip=combined,
        segments=tuple(segments),
        total_duration=combined.duration,
    )


# ---------------------------------------------------------------------------
# Exports

def _frame_count(duration: float, rate: float) -> int:
    return int(math.floor(duration * rate + 1e-9)) + 1


def segments_json(perf: CompiledPerformance, rate: float) -> list[dict]:
    n = _frame_count(perf.total_duration, rate)
    out = []
    for seg in perf.segments:
        entry = seg.to_json_dict()
        entry["frame_start"] = max(0, int(math.ceil(seg.start * rate - 1e-9)))
        entry["frame_end"] = min(n - 1, int(math.floor(seg.end * rate + 1e-9)))
        out.append(entry)
    return out


def frames_json_document(perf: CompiledPerformance, skeleton: Skeleton) -> dict:
    """Self-contained playback document: rest hierarchy, uniform pose frames
    (root translation then per-joint wxyz quaternions), and the segment index.
    Field order is fixed for golden-file comparisons."""
    clip = perf.clip
    rate = clip.sample_rate
    n = _frame_count(perf.total_duration, rate)

    joints = [{
        "id": j.joint_id,
        "parent": j.parent,
        "translation": [float(v) for v in j.rest_translation],
    } for j in skeleton.joints]

    rotation_tracks = []
    for j in skeleton.joints:
        if clip.has_channel(j.joint_id):
            rotation_tracks.append(clip.channel(j.joint_id).rotations)
        else:
            rotation_tracks.append(np.tile(j.rest_rotation, (n, 1)))
    root_channel = (clip.channel(skeleton.root_id)
                    if clip.has_channel(skeleton.root_id) else None)
    if root_channel is not None and root_channel.translations is not None:
        root_tr = root_channel.translations
    else:
        root_tr = np.tile(skeleton.joints[0].rest_translation, (n, 1))

    frames = []
    for i in range(n):
        row = [float(v) for v in root_tr[i]]
        for track in rotation_tracks:
            row.extend(float(v) for v in track[i])
        frames.append(row)

    return {
        "rate": rate,
        "duration": perf.total_duration,
        "joints": joints,
        "frames": frames,
        "segments": segments_json(perf, rate),
    }


def export_frames_json(perf: CompiledPerformance, skeleton: Skeleton) -> bytes:
    return dumps_canonical_bytes(frames_json_document(perf, skeleton))


def export_glb(perf: CompiledPerformance, skeleton: Skeleton) -> bytes:
    return write_glb(perf.clip, skeleton)


def segments_sidecar(perf: CompiledPerformance) -> bytes:
    """Companion document for .glb exports, which cannot carry the segment
    index inline."""
    return dumps_canonical_bytes({
        "performance_id": perf.id,
        "duration": perf.total_duration,
        "segments": segments_json(perf, perf.clip.sample_rate),
    })


def export_performance(perf: CompiledPerformance, skeleton: Skeleton,
                       fmt: str) -> bytes:
    if fmt == "frames-json":
        return export_frames_json(perf, skeleton)
    if fmt == "glb":
        return export_glb(perf, skeleton)
    raise CompileError(f"unsupported export format {fmt!r}; "
                       f"expected one of {EXPORT_FORMATS}")

"""Movement-alphabet library: manifest, tags, clip storage, validation."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .elements import BodyRegionMap, default_region_map
from .gltf import GltfError, read_glb
from .jsonio import content_hash
from .motion import AnimationClip, MotionError, Skeleton, validate_clip

logger = logging.getLogger(__name__)

STRICT_MOVEMENT_COUNT = 59
MAX_CLIP_SECONDS = 60.0
_ID_RE = re.compile(r"^[a-z0-9]+(-[a-z0-9]+)*$")


class ManifestError(ValueError):
    """The manifest file is structurally or referentially invalid."""


@dataclass(frozen=True)
class MovementDefinition:
    id: str
    english_gloss: str
    meaning_tags: tuple[str, ...]
    clip_file: str
    default_duration_scale: float = 1.0

    def __post_init__(self):
        if not _ID_RE.match(self.id):
            raise ManifestError(f"movement id {self.id!r} is not kebab-case")
        if not self.english_gloss:
            raise ManifestError(f"movement {self.id}: empty gloss")
        if len(self.meaning_tags) < 1:
            raise ManifestError(f"movement {self.id}: needs at least one meaning tag")
        if any(t != t.lower() or not t for t in self.meaning_tags):
            raise ManifestError(f"movement {self.id}: tags must be lowercase and non-empty")
        if not (self.default_duration_scale > 0):
            raise ManifestError(f"movement {self.id}: non-positive duration scale")


@dataclass(frozen=True)
class LibraryManifest:
    version: str
    skeleton_file: str
    joint_map_file: str
    movements: tuple[MovementDefinition, ...]

    def movement(self, movement_id: str) -> MovementDefinition:
        for m in self.movements:
            if m.id == movement_id:
                return m
        raise KeyError(movement_id)

    @property
    def movement_ids(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.movements)


def parse_manifest(data: Mapping, strict: bool = True) -> LibraryManifest:
    for key in ("version", "skeleton_file", "joint_map_file", "movements"):
        if key not in data:
            raise ManifestError(f"manifest missing field {key!r}")
    movements = []
    for entry in data["movements"]:
        try:
            movements.append(MovementDefinition(
                id=entry["id"],
                english_gloss=entry["english_gloss"],
                meaning_tags=tuple(entry["meaning_tags"]),
                clip_file=entry["clip_file"],
                default_duration_scale=float(entry.get("default_duration_scale", 1.0)),
            ))
        except KeyError as e:
            raise ManifestError(f"movement entry missing field {e}") from e
    ids = [m.id for m in movements]
    dupes = {i for i in ids if ids.count(i) > 1}
    if dupes:
        raise ManifestError(f"duplicate movement ids: {sorted(dupes)}")
    files = [m.clip_file for m in movements]
    dupe_files = {f for f in files if files.count(f) > 1}
    if dupe_files:
        raise ManifestError(f"duplicate clip files: {sorted(dupe_files)}")
    if strict and len(movements) != STRICT_MOVEMENT_COUNT:
        raise ManifestError(
            f"strict mode requires exactly {STRICT_MOVEMENT_COUNT} movements,"
            f" manifest has {len(movements)}")
    if not strict and len(movements) != STRICT_MOVEMENT_COUNT:
        logger.warning("manifest has %d movements (the full alphabet has %d)",
                       len(movements), STRICT_MOVEMENT_COUNT)
    return LibraryManifest(
        version=str(data["version"]),
        skeleton_file=str(data["skeleton_file"]),
        joint_map_file=str(data["joint_map_file"]),
        movements=tuple(movements),
    )


def load_manifest(path: Path | str, strict: bool = True) -> LibraryManifest:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ManifestError(f"manifest is not valid JSON: {e}") from e
    return parse_manifest(data, strict=strict)


def load_joint_map(path: Path | str) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ManifestError("joint map must be a JSON object")
    values = list(raw.values())
    dupes = {v for v in values if values.count(v) > 1}
    if dupes:
        raise ManifestError(f"joint map targets mapped twice: {sorted(dupes)}")
    return {str(k): str(v) for k, v in raw.items()}


def find_by_tags(manifest: LibraryManifest,
                 query_tags: Iterable[str]) -> list[tuple[str, int]]:
    """Movements ranked by meaning-tag overlap; ties keep manifest order and
    zero-score entries are dropped."""
    query = {t.lower() for t in query_tags}
    scored = []
    for order, m in enumerate(manifest.movements):
        score = len(query.intersection(m.meaning_tags))
        if score > 0:
            scored.append((-score, order, m.id))
    scored.sort()
    return [(mid, -neg) for neg, _, mid in scored]


class Library:
    """Loaded manifest plus skeleton, joint map, regions, and clip cache."""

    def __init__(self, manifest_path: Path | str, strict: bool = True):
        self.root = Path(manifest_path).parent
        self.manifest = load_manifest(manifest_path, strict=strict)
        self.skeleton = Skeleton.from_json_dict(
            _read_json(self.root / self.manifest.skeleton_file))
        self.joint_map = load_joint_map(self.root / self.manifest.joint_map_file)
        self.regions: BodyRegionMap = default_region_map(self.skeleton)
        self._clips: dict[str, AnimationClip] = {}
        self.fingerprint = content_hash({
            "version": self.manifest.version,
            "movements": [m.id for m in self.manifest.movements],
        })

    def clip_path(self, movement_id: str) -> Path:
        return self.root / self.manifest.movement(movement_id).clip_file

    def clip_bytes(self, movement_id: str) -> bytes:
        return self.clip_path(movement_id).read_bytes()

    def clip(self, movement_id: str) -> AnimationClip:
        cached = self._clips.get(movement_id)
        if cached is None:
            warnings: list[str] = []
            cached = read_glb(self.clip_bytes(movement_id), self.joint_map,
                              self.skeleton, warnings=warnings)
            for w in warnings:
                logger.warning("clip %s: %s", movement_id, w)
            validate_clip(cached, self.skeleton)
            self._clips[movement_id] = cached
        return cached

    def validate(self) -> dict:
        """Parse and bind every clip; returns a machine-readable report."""
        report: dict = {"ok": True, "version": self.manifest.version,
                        "movement_count": len(self.manifest.movements),
                        "movements": []}
        for m in self.manifest.movements:
            entry: dict = {"id": m.id, "ok": True, "errors": [], "warnings": []}
            try:
                warnings: list[str] = []
                clip = read_glb(self.clip_bytes(m.id), self.joint_map,
                                self.skeleton, warnings=warnings)
                validate_clip(clip, self.skeleton)
                entry["warnings"] = warnings
                entry["duration"] = clip.duration
                if not (0.0 < clip.duration <= MAX_CLIP_SECONDS):
                    entry["ok"] = False
                    entry["errors"].append(
                        f"duration {clip.duration} outside (0, {MAX_CLIP_SECONDS}]")
            except (OSError, GltfError, MotionError) as e:
                entry["ok"] = False
                entry["errors"].append(str(e))
            if not entry["ok"]:
                report["ok"] = False
            report["movements"].append(entry)
        return report


def _read_json(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)

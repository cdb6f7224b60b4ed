"""The shipped reference library: canonical skeleton and placeholder clips.

The repertoire manifest carries the full 59-entry movement alphabet. A
handful of entries use their known English glosses; the rest are explicit
placeholders (ids ``mbya-001``...) whose clips are deterministic seeded
sinusoidal motions, NOT captured dance data. They exist so every pipeline
stage has real signal to act on.
"""
from __future__ import annotations

import zlib
from pathlib import Path

import numpy as np

from . import quat
from .gltf import write_glb
from .jsonio import dumps_canonical_bytes, write_atomic
from .motion import AnimationClip, ClipChannel, Joint, Skeleton, uniform_times

CLIP_DURATION = 4.0   # seconds
CLIP_RATE = 30.0      # Hz
MOVEMENT_COUNT = 59

# (joint_id, parent index, local translation). Y is up, +X is the
# character's left, so the sagittal mirror is x -> -x.
CANONICAL_JOINTS: tuple[tuple[str, int | None, tuple[float, float, float]], ...] = (
    ("root", None, (0.0, 0.95, 0.0)),
    ("spine_01", 0, (0.0, 0.12, 0.0)),
    ("spine_02", 1, (0.0, 0.14, 0.0)),
    ("neck", 2, (0.0, 0.16, 0.0)),
    ("head", 3, (0.0, 0.09, 0.0)),
    ("left_shoulder", 2, (0.06, 0.12, 0.0)),
    ("left_upper_arm", 5, (0.12, 0.0, 0.0)),
    ("left_forearm", 6, (0.26, 0.0, 0.0)),
    ("left_hand", 7, (0.24, 0.0, 0.0)),
    ("right_shoulder", 2, (-0.06, 0.12, 0.0)),
    ("right_upper_arm", 9, (-0.12, 0.0, 0.0)),
    ("right_forearm", 10, (-0.26, 0.0, 0.0)),
    ("right_hand", 11, (-0.24, 0.0, 0.0)),
    ("left_upper_leg", 0, (0.10, -0.06, 0.0)),
    ("left_lower_leg", 13, (0.0, -0.42, 0.0)),
    ("left_foot", 14, (0.0, -0.40, 0.0)),
    ("left_toe", 15, (0.0, -0.06, 0.14)),
    ("right_upper_leg", 0, (-0.10, -0.06, 0.0)),
    ("right_lower_leg", 17, (0.0, -0.42, 0.0)),
    ("right_foot", 18, (0.0, -0.40, 0.0)),
    ("right_toe", 19, (0.0, -0.06, 0.14)),
)

NAMED_MOVEMENTS = (
    {
        "id": "a-swan-gliding",
        "english_gloss": "A Swan Gliding",
        "meaning_tags": ["swan", "bird", "grace", "water", "glide"],
    },
    {
        "id": "flying-through-the-sky",
        "english_gloss": "Flying Through the Sky",
        "meaning_tags": ["flight", "sky", "soar", "bird", "freedom"],
    },
    {
        "id": "a-dragon-playing-in-the-water",
        "english_gloss": "A Dragon Playing in the Water",
        "meaning_tags": ["dragon", "water", "play", "power", "myth"],
    },
    {
        "id": "pisamai-riang-mon",
        "english_gloss": "Pisamai Riang Mon",
        "meaning_tags": ["love", "relationship", "courtship", "tenderness"],
    },
)

# Editorial tag vocabulary for the placeholder entries; broad enough that
# story prompts usually intersect something.
PLACEHOLDER_TAGS = (
    "strength", "battle", "hero", "journey", "star", "light", "dark",
    "machine", "ritual", "sacrifice", "awakening", "spring", "earth", "fire",
    "wind", "rain", "forest", "flower", "bee", "deer", "elephant", "monkey",
    "fish", "wave", "mountain", "moon", "sun", "royal", "offering",
    "greeting", "farewell", "sorrow", "joy", "play", "spin", "leap",
    "stillness", "walk", "rhythm", "pulse", "mirror", "shadow", "dream",
    "spirit", "guardian", "victory", "defeat", "transformation",
)


def canonical_skeleton() -> Skeleton:
    joints = tuple(
        Joint(joint_id=jid, parent=parent,
              rest_translation=np.asarray(t, dtype=np.float64),
              rest_rotation=quat.IDENTITY.copy())
        for jid, parent, t in CANONICAL_JOINTS
    )
    return Skeleton(joints=joints)


def _seed_for(movement_id: str) -> int:
    return zlib.crc32(movement_id.encode("utf-8"))


def reference_movements(count: int = MOVEMENT_COUNT) -> list[dict]:
    """Manifest entries: the glossed movements first, placeholders after."""
    if count < 1:
        raise ValueError("count must be >= 1")
    entries = [dict(m) for m in NAMED_MOVEMENTS[:count]]
    i = 0
    while len(entries) < count:
        i += 1
        mid = f"mbya-{i:03d}"
        rng = np.random.default_rng(_seed_for(mid))
        tags = [PLACEHOLDER_TAGS[k] for k in
                sorted(rng.choice(len(PLACEHOLDER_TAGS), size=3, replace=False))]
        entries.append({
            "id": mid,
            "english_gloss": f"Placeholder Movement {i:02d}",
            "meaning_tags": tags,
        })
    for e in entries:
        e["clip_file"] = f"clips/{e['id']}.glb"
        e["default_duration_scale"] = 1.0
    return entries


def placeholder_clip(movement_id: str, skeleton: Skeleton,
                     duration: float = CLIP_DURATION,
                     rate: float = CLIP_RATE) -> AnimationClip:
    """Deterministic gentle sinusoidal motion on every joint.

    Per-joint amplitudes stay small (offset <= 0.10 rad, swing <= 0.12 rad,
    <= 0.45 Hz) so that crossfaded sequences meet the continuity budget of
    0.05 rad per frame at 30 Hz with margin.
    """
    rng = np.random.default_rng(_seed_for(movement_id))
    times = uniform_times(duration, rate)
    channels = []
    for j in skeleton.joints:
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        offset = rng.uniform(-0.10, 0.10)
        amp = rng.uniform(0.05, 0.12)
        freq = rng.uniform(0.25, 0.45)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        if j.parent is None:
            offset, amp = 0.0, 0.5 * amp  # keep the pelvis steadier
        angles = offset + amp * np.sin(2.0 * np.pi * freq * times + phase)
        rotations = quat.canonicalize(quat.exp_map(angles[:, None] * axis))
        translations = None
        if j.parent is None:
            sway = rng.uniform(0.04, 0.08, size=2)
            bob = rng.uniform(0.01, 0.02)
            tf = rng.uniform(0.2, 0.4, size=3)
            tp = rng.uniform(0.0, 2.0 * np.pi, size=3)
            translations = np.column_stack([
                j.rest_translation[0] + sway[0] * np.sin(2 * np.pi * tf[0] * times + tp[0]),
                j.rest_translation[1] + bob * np.sin(2 * np.pi * tf[1] * times + tp[1]),
                j.rest_translation[2] + sway[1] * np.sin(2 * np.pi * tf[2] * times + tp[2]),
            ])
        channels.append(ClipChannel(joint_id=j.joint_id, times=times,
                                    rotations=rotations, translations=translations))
    return AnimationClip(name=movement_id, duration=duration, sample_rate=rate,
                         channels=tuple(channels))


def build_reference_library(out_dir: Path | str, count: int = MOVEMENT_COUNT,
                            version: str = "ref-1") -> Path:
    """Write manifest, skeleton, joint map, and one .glb per movement.

    Fully deterministic: building twice yields byte-identical files.
    Returns the manifest path.
    """
    out = Path(out_dir)
    skeleton = canonical_skeleton()
    write_atomic(out / "skeleton.json",
                 dumps_canonical_bytes(skeleton.to_json_dict()))
    joint_map = {j.joint_id: j.joint_id for j in skeleton.joints}
    write_atomic(out / "joint_map.json", dumps_canonical_bytes(joint_map))
    movements = reference_movements(count)
    manifest = {
        "version": version,
        "skeleton_file": "skeleton.json",
        "joint_map_file": "joint_map.json",
        "movements": movements,
    }
    write_atomic(out / "manifest.json", dumps_canonical_bytes(manifest))
    for entry in movements:
        clip = placeholder_clip(entry["id"], skeleton)
        write_atomic(out / entry["clip_file"], write_glb(clip, skeleton))
    return out / "manifest.json"

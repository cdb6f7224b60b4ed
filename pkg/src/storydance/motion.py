"""Skeleton and animation-clip data model: sampling, resampling, blending.

Clips hold per-joint unit-quaternion rotation keyframes; the root channel
additionally carries translations. All operations are pure and return new
clips; arrays are frozen after construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import quat
from .jsonio import dumps_canonical

#: Grid times are considered exact keyframe hits within this many seconds.
TIME_EPS = 1e-9


class MotionError(ValueError):
    """Invalid clip, skeleton, or operation argument."""


class SkeletonMismatchError(MotionError):
    """Two clips do not animate the same joint set."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Joint:
    joint_id: str
    parent: int | None
    rest_translation: np.ndarray  # (3,) meters, local
    rest_rotation: np.ndarray     # (4,) wxyz, local


@dataclass(frozen=True)
class Skeleton:
    """Joint hierarchy; index 0 is the single root and parents precede children."""

    joints: tuple[Joint, ...]

    def __post_init__(self):
        if not self.joints:
            raise MotionError("skeleton has no joints")
        ids = [j.joint_id for j in self.joints]
        if len(set(ids)) != len(ids):
            raise MotionError("duplicate joint ids in skeleton")
        if any(not j.joint_id for j in self.joints):
            raise MotionError("empty joint id")
        if self.joints[0].parent is not None:
            raise MotionError("joint 0 must be the root (parent=None)")
        for i, j in enumerate(self.joints[1:], start=1):
            if j.parent is None:
                raise MotionError(f"multiple roots: joint {j.joint_id} has no parent")
            if not (0 <= j.parent < i):
                raise MotionError(f"joint {j.joint_id}: parent index must precede it")

    @property
    def joint_ids(self) -> tuple[str, ...]:
        return tuple(j.joint_id for j in self.joints)

    @property
    def root_id(self) -> str:
        return self.joints[0].joint_id

    def index_of(self, joint_id: str) -> int:
        for i, j in enumerate(self.joints):
            if j.joint_id == joint_id:
                return i
        raise MotionError(f"unknown joint: {joint_id}")

    def to_json_dict(self) -> dict:
        return {
            "joints": [
                {
                    "id": j.joint_id,
                    "parent": j.parent,
                    "translation": [float(v) for v in j.rest_translation],
                    "rotation": [float(v) for v in j.rest_rotation],
                }
                for j in self.joints
            ]
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Skeleton":
        joints = tuple(
            Joint(
                joint_id=str(j["id"]),
                parent=j["parent"],
                rest_translation=_frozen(np.asarray(j["translation"], dtype=np.float64)),
                rest_rotation=_frozen(quat.canonical_unit(np.asarray(j["rotation"], dtype=np.float64))),
            )
            for j in data["joints"]
        )
        return cls(joints=joints)


@dataclass(frozen=True)
class ClipChannel:
    """Rotation keyframes for one joint; the root channel may carry translations."""

    joint_id: str
    times: np.ndarray        # (n,) seconds, strictly increasing
    rotations: np.ndarray    # (n, 4) wxyz unit quaternions
    translations: np.ndarray | None = None  # (n, 3) meters, root only

    def __post_init__(self):
        times = _frozen(np.asarray(self.times, dtype=np.float64))
        rots = _frozen(np.asarray(self.rotations, dtype=np.float64))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "rotations", rots)
        if self.translations is not None:
            object.__setattr__(self, "translations",
                               _frozen(np.asarray(self.translations, dtype=np.float64)))
        if times.ndim != 1 or len(times) < 1:
            raise MotionError(f"channel {self.joint_id}: needs at least one keyframe")
        if np.any(np.diff(times) <= 0):
            raise MotionError(f"channel {self.joint_id}: times must be strictly increasing")
        if times[0] < -TIME_EPS:
            raise MotionError(f"channel {self.joint_id}: negative keyframe time")
        if rots.shape != (len(times), 4):
            raise MotionError(f"channel {self.joint_id}: rotations/times length mismatch")
        if self.translations is not None and self.translations.shape != (len(times), 3):
            raise MotionError(f"channel {self.joint_id}: translations/times length mismatch")
        if not quat.is_unit(rots):
            raise MotionError(f"channel {self.joint_id}: non-unit rotation keyframe")

    def sample_rotation(self, t) -> np.ndarray:
        """Shortest-arc slerp of the bracketing keys; clamps outside the range.
        Exact at keyframe times. Accepts a scalar or an array of times."""
        scalar = np.isscalar(t) or np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=np.float64))
        idx = np.searchsorted(self.times, ts, side="left")
        n = len(self.times)
        out = np.empty((len(ts), 4))
        for k, (tk, i) in enumerate(zip(ts, idx)):
            if i < n and self.times[i] == tk:
                out[k] = self.rotations[i]
            elif i == 0:
                out[k] = self.rotations[0]
            elif i == n:
                out[k] = self.rotations[-1]
            else:
                t0, t1 = self.times[i - 1], self.times[i]
                u = (tk - t0) / (t1 - t0)
                out[k] = quat.slerp(self.rotations[i - 1], self.rotations[i], u)
        return out[0] if scalar else out

    def sample_translation(self, t) -> np.ndarray:
        if self.translations is None:
            raise MotionError(f"channel {self.joint_id} has no translations")
        scalar = np.isscalar(t) or np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=np.float64))
        tr = self.translations
        out = np.empty((len(ts), 3))
        idx = np.searchsorted(self.times, ts, side="left")
        n = len(self.times)
        for k, (tk, i) in enumerate(zip(ts, idx)):
            if i < n and self.times[i] == tk:
                out[k] = tr[i]
            elif i == 0:
                out[k] = tr[0]
            elif i == n:
                out[k] = tr[-1]
            else:
                t0, t1 = self.times[i - 1], self.times[i]
                u = (tk - t0) / (t1 - t0)
                out[k] = (1.0 - u) * tr[i - 1] + u * tr[i]
        return out[0] if scalar else out


@dataclass(frozen=True)
class AnimationClip:
    name: str
    duration: float
    sample_rate: float
    channels: tuple[ClipChannel, ...]

    def __post_init__(self):
        if not (self.duration > 0) or not math.isfinite(self.duration):
            raise MotionError("clip duration must be positive")
        if not (self.sample_rate > 0) or not math.isfinite(self.sample_rate):
            raise MotionError("clip sample_rate must be positive")
        ids = [c.joint_id for c in self.channels]
        if len(set(ids)) != len(ids):
            raise MotionError("duplicate channels for one joint")
        for c in self.channels:
            if c.times[-1] > self.duration + TIME_EPS:
                raise MotionError(f"channel {c.joint_id}: keyframe beyond clip duration")
        object.__setattr__(self, "channels", tuple(self.channels))

    @property
    def joint_ids(self) -> tuple[str, ...]:
        return tuple(c.joint_id for c in self.channels)

    def channel(self, joint_id: str) -> ClipChannel:
        for c in self.channels:
            if c.joint_id == joint_id:
                return c
        raise MotionError(f"clip has no channel for joint {joint_id}")

    def has_channel(self, joint_id: str) -> bool:
        return any(c.joint_id == joint_id for c in self.channels)

    @property
    def uniform(self) -> bool:
        """True when every channel's keys sit exactly on the i/sample_rate grid
        covering [0, duration]."""
        grid = uniform_times(self.duration, self.sample_rate)
        for c in self.channels:
            if len(c.times) != len(grid) or not np.array_equal(c.times, grid):
                return False
        return True

    def to_json_dict(self) -> dict:
        chans = []
        for c in self.channels:
            entry: dict = {
                "joint": c.joint_id,
                "times": [float(t) for t in c.times],
                "rotations": [[float(v) for v in q] for q in c.rotations],
            }
            if c.translations is not None:
                entry["translations"] = [[float(v) for v in p] for p in c.translations]
            chans.append(entry)
        return {
            "name": self.name,
            "duration": float(self.duration),
            "sample_rate": float(self.sample_rate),
            "channels": chans,
        }

    def to_json(self) -> str:
        return dumps_canonical(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "AnimationClip":
        # Values are stored canonical (unit within tolerance, w >= 0); they
        # pass through untouched so serialize/parse round-trips are exact.
        channels = []
        for c in data["channels"]:
            channels.append(
                ClipChannel(
                    joint_id=str(c["joint"]),
                    times=np.asarray(c["times"], dtype=np.float64),
                    rotations=np.asarray(c["rotations"], dtype=np.float64),
                    translations=(np.asarray(c["translations"], dtype=np.float64)
                                  if "translations" in c else None),
                )
            )
        return cls(
            name=str(data["name"]),
            duration=float(data["duration"]),
            sample_rate=float(data["sample_rate"]),
            channels=tuple(channels),
        )


@dataclass(frozen=True)
class Pose:
    """Local rotations keyed by joint id plus the root translation.

    Joints without a channel are absent here; forward kinematics falls back
    to the skeleton's rest pose for them.
    """

    rotations: Mapping[str, np.ndarray]
    root_translation: np.ndarray | None = None

    def rotation_or_rest(self, skeleton: Skeleton, index: int) -> np.ndarray:
        j = skeleton.joints[index]
        got = self.rotations.get(j.joint_id)
        return got if got is not None else j.rest_rotation


def uniform_times(duration: float, rate: float) -> np.ndarray:
    """Grid 0, 1/rate, ... covering [0, duration] (last key may fall short of
    duration when it is not a multiple of the spacing)."""
    n = int(math.floor(duration * rate + TIME_EPS)) + 1
    return np.arange(n, dtype=np.float64) / rate


def validate_clip(clip: AnimationClip, skeleton: Skeleton) -> None:
    """Check that the clip binds to the skeleton."""
    ids = set(skeleton.joint_ids)
    for c in clip.channels:
        if c.joint_id not in ids:
            raise MotionError(f"channel joint {c.joint_id} not in skeleton")
        if c.translations is not None and c.joint_id != skeleton.root_id:
            raise MotionError(f"translations on non-root channel {c.joint_id}")


def sample_pose(clip: AnimationClip, t: float) -> Pose:
    """Pose at time t; rotations slerp between bracketing keys, translations
    lerp, and t outside [0, duration] clamps to the boundary key."""
    if not math.isfinite(t):
        raise MotionError("sample time must be finite")
    rotations = {}
    root_translation = None
    for c in clip.channels:
        rotations[c.joint_id] = c.sample_rotation(t)
        if c.translations is not None:
            root_translation = c.sample_translation(t)
    return Pose(rotations=rotations, root_translation=root_translation)


def resample(clip: AnimationClip, rate: float) -> AnimationClip:
    """Uniform keyframes at 1/rate spacing over [0, duration]; a clip already
    on that grid is returned unchanged, making resampling idempotent."""
    if not (rate > 0):
        raise MotionError("resample rate must be positive")
    if rate == clip.sample_rate and clip.uniform:
        return clip
    grid = uniform_times(clip.duration, rate)
    channels = []
    for c in clip.channels:
        channels.append(
            ClipChannel(
                joint_id=c.joint_id,
                times=grid,
                rotations=c.sample_rotation(grid),
                translations=c.sample_translation(grid) if c.translations is not None else None,
            )
        )
    return AnimationClip(name=clip.name, duration=clip.duration,
                         sample_rate=rate, channels=tuple(channels))


def retime(clip: AnimationClip, scale: float) -> AnimationClip:
    """Uniformly stretch keyframe times by scale (> 0)."""
    if not (scale > 0):
        raise MotionError("retime scale must be positive")
    if scale == 1.0:
        return clip
    channels = tuple(
        ClipChannel(
            joint_id=c.joint_id,
            times=c.times * scale,
            rotations=c.rotations,
            translations=c.translations,
        )
        for c in clip.channels
    )
    return AnimationClip(name=clip.name, duration=clip.duration * scale,
                         sample_rate=clip.sample_rate / scale, channels=channels)


def crossfade(a: AnimationClip, b: AnimationClip, overlap: float) -> AnimationClip:
    """Join two clips, blending rotations by slerp and translations linearly
    across the overlap window with a linear 0 -> 1 ramp.

    The output has duration a.duration + b.duration - overlap, is uniform at
    a.sample_rate, equals a before the window and b (time-shifted) after it.
    """
    if not (0.0 <= overlap <= min(a.duration, b.duration)):
        raise MotionError(
            f"overlap {overlap} outside [0, {min(a.duration, b.duration)}]")
    if sorted(a.joint_ids) != sorted(b.joint_ids):
        raise SkeletonMismatchError("clips animate different joint sets")
    if a.sample_rate != b.sample_rate:
        raise SkeletonMismatchError(
            f"sample rates differ: {a.sample_rate} vs {b.sample_rate}")

    rate = a.sample_rate
    duration = a.duration + b.duration - overlap
    grid = uniform_times(duration, rate)
    start = a.duration - overlap  # window is [start, a.duration]

    before = grid < start if overlap > 0 else grid < a.duration
    after = grid > a.duration if overlap > 0 else ~before
    inside = ~(before | after)
    b_local = grid - start
    if overlap > 0:
        w = np.clip((grid - start) / overlap, 0.0, 1.0)
    else:
        w = np.zeros_like(grid)

    channels = []
    for ca in a.channels:
        cb = b.channel(ca.joint_id)
        rots = np.empty((len(grid), 4))
        rots[before] = ca.sample_rotation(grid[before])
        rots[after] = cb.sample_rotation(b_local[after])
        if np.any(inside):
            qa = ca.sample_rotation(grid[inside])
            qb = cb.sample_rotation(b_local[inside])
            wi = w[inside]
            mixed = np.empty_like(qa)
            for k in range(len(wi)):
                mixed[k] = quat.slerp(qa[k], qb[k], wi[k])
            rots[inside] = mixed
        trans = None
        if (ca.translations is not None) != (cb.translations is not None):
            raise SkeletonMismatchError(
                f"only one clip carries translations for {ca.joint_id}")
        if ca.translations is not None:
            ta = ca.sample_translation(grid)
            tb = cb.sample_translation(b_local)
            trans = np.where(before[:, None], ta,
                             np.where(after[:, None], tb,
                                      (1.0 - w[:, None]) * ta + w[:, None] * tb))
        channels.append(ClipChannel(joint_id=ca.joint_id, times=grid,
                                    rotations=quat.canonicalize(rots),
                                    translations=trans))
    return AnimationClip(name=f"{a.name}+{b.name}", duration=duration,
                         sample_rate=rate, channels=tuple(channels))


def mean_rotation(channel: ClipChannel) -> np.ndarray:
    """Chordal mean of the channel's keys (see quat.chordal_mean)."""
    return quat.chordal_mean(channel.rotations)


def forward_kinematics(skeleton: Skeleton, pose: Pose) -> dict[str, np.ndarray]:
    """World-space joint positions for one pose."""
    world_r: list[np.ndarray] = []
    world_p: list[np.ndarray] = []
    positions: dict[str, np.ndarray] = {}
    for i, j in enumerate(skeleton.joints):
        local_r = pose.rotation_or_rest(skeleton, i)
        if j.parent is None:
            local_t = (pose.root_translation if pose.root_translation is not None
                       else j.rest_translation)
            world_r.append(np.asarray(local_r))
            world_p.append(np.asarray(local_t, dtype=np.float64))
        else:
            pr, pp = world_r[j.parent], world_p[j.parent]
            world_r.append(quat.mul(pr, local_r))
            world_p.append(pp + quat.rotate_vector(pr, j.rest_translation))
        positions[j.joint_id] = world_p[-1]
    return positions


def joint_world_trajectory(clip: AnimationClip, skeleton: Skeleton,
                           joint_id: str) -> np.ndarray:
    """World positions of one joint at every uniform grid time of the clip."""
    idx = skeleton.index_of(joint_id)  # raises on unknown joint
    grid = uniform_times(clip.duration, clip.sample_rate)
    sampled = {c.joint_id: c.sample_rotation(grid) for c in clip.channels}
    root_chan = next((c for c in clip.channels if c.translations is not None), None)
    root_tr = (root_chan.sample_translation(grid) if root_chan is not None
               else np.tile(skeleton.joints[0].rest_translation, (len(grid), 1)))

    n = len(grid)
    world_r = np.empty((len(skeleton.joints), n, 4))
    world_p = np.empty((len(skeleton.joints), n, 3))
    for i, j in enumerate(skeleton.joints):
        local = sampled.get(j.joint_id)
        if local is None:
            local = np.tile(j.rest_rotation, (n, 1))
        if j.parent is None:
            world_r[i] = local
            world_p[i] = root_tr
        else:
            world_r[i] = quat.mul(world_r[j.parent], local)
            world_p[i] = world_p[j.parent] + quat.rotate_vector(
                world_r[j.parent], j.rest_translation)
        if i == idx:
            return world_p[i].copy()
    raise MotionError(f"unknown joint: {joint_id}")  # pragma: no cover

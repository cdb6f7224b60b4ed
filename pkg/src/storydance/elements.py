"""Deterministic rule-based refinements over animation clips.

Six independent, parameter-continuous transformations, each an identity at
its neutral parameter:

    energy                geodesic amplitude scaling about each channel mean
    circles_curves        log-domain Gaussian smoothing blended back in
    axis_point            pivot stabilization via root-translation compensation
    synchronous_limbs     left limbs driven toward mirrored right-limb motion
    external_body_spaces  root-path scaling plus proximal-joint amplitude
    shifting_relations    lower-body phase delay against the upper body

All operations expect (and enforce) clips uniformly keyed at their own
sample rate, and are pure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.ndimage import gaussian_filter1d

from . import quat
from .motion import (
    AnimationClip,
    ClipChannel,
    Skeleton,
    joint_world_trajectory,
    mean_rotation,
    resample,
    uniform_times,
)

REGION_NAMES = ("head", "torso", "left_arm", "right_arm", "left_leg", "right_leg")

#: Smoothing window at circles_curves == 1, in seconds.
SMOOTHING_SIGMA_MAX = 0.15
#: Fraction of the space scale applied to shoulder/hip rotation amplitude.
PROXIMAL_COUPLING = 0.5
#: Lower-body delay at shifting_relations == 1, in seconds.
LOWER_BODY_DELAY_MAX = 0.5


class ParameterRangeError(ValueError):
    """A transform parameter lies outside its documented range."""


class UnknownJointError(ValueError):
    pass


@dataclass(frozen=True)
class BodyRegionMap:
    """Region to joint-set mapping plus the derived limb pairing.

    regions must partition the non-root joints of the bound skeleton;
    mirror_pairs lists (leader, follower) with the right side leading.
    """

    regions: Mapping[str, tuple[str, ...]]
    mirror_pairs: tuple[tuple[str, str], ...]
    proximal_joints: tuple[str, ...]

    def joints_of(self, *names: str) -> frozenset[str]:
        out: set[str] = set()
        for n in names:
            out.update(self.regions[n])
        return frozenset(out)

    @property
    def lower_body(self) -> frozenset[str]:
        return self.joints_of("left_leg", "right_leg")

    def validate_against(self, skeleton: Skeleton) -> None:
        non_root = set(skeleton.joint_ids) - {skeleton.root_id}
        seen: set[str] = set()
        for name in REGION_NAMES:
            joints = self.regions.get(name)
            if joints is None:
                raise ValueError(f"region map missing region {name}")
            for j in joints:
                if j in seen:
                    raise ValueError(f"joint {j} assigned to two regions")
                seen.add(j)
        if seen != non_root:
            missing = non_root - seen
            extra = seen - non_root
            raise ValueError(
                f"regions must partition non-root joints (missing={sorted(missing)},"
                f" extra={sorted(extra)})")


def default_region_map(skeleton: Skeleton) -> BodyRegionMap:
    """Region map inferred from left_/right_ joint naming; arms are the
    shoulder chains, legs the hip chains, the rest head/torso by name."""
    regions: dict[str, list[str]] = {n: [] for n in REGION_NAMES}
    for j in skeleton.joints[1:]:
        jid = j.joint_id
        if jid.startswith("left_"):
            side = "left"
        elif jid.startswith("right_"):
            side = "right"
        else:
            side = None
        if side:
            part = jid.split("_", 1)[1]
            limb = "leg" if any(k in part for k in ("leg", "foot", "toe")) else "arm"
            regions[f"{side}_{limb}"].append(jid)
        elif any(k in jid for k in ("head", "neck")):
            regions["head"].append(jid)
        else:
            regions["torso"].append(jid)
    pairs = []
    for right in regions["right_arm"] + regions["right_leg"]:
        left = "left_" + right.split("_", 1)[1]
        if any(left in r for r in (regions["left_arm"], regions["left_leg"])):
            pairs.append((right, left))
    proximal = tuple(j for j in skeleton.joint_ids
                     if j.endswith("shoulder") or j.endswith("upper_leg"))
    rmap = BodyRegionMap(
        regions={k: tuple(v) for k, v in regions.items()},
        mirror_pairs=tuple(pairs),
        proximal_joints=proximal,
    )
    rmap.validate_against(skeleton)
    return rmap


def _check_range(name: str, value: float, lo: float, hi: float) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ParameterRangeError(f"{name} must be a number, got {value!r}") from None
    if not (lo <= v <= hi) or not np.isfinite(v):
        raise ParameterRangeError(f"{name} must be in [{lo}, {hi}], got {value}")
    return v


@dataclass(frozen=True)
class AxisPoint:
    joint: str
    intensity: float

    def __post_init__(self):
        _check_range("axis_point.intensity", self.intensity, 0.0, 1.0)


@dataclass(frozen=True)
class SixElementsAdjustment:
    """Parameter bundle for the six transforms; defaults are the neutral
    (identity) setting for every element."""

    energy: Mapping[str, float] = field(default_factory=dict)
    circles_curves: float = 0.0
    axis_point: AxisPoint | None = None
    synchronous_limbs: float = 0.0
    external_body_spaces: float = 1.0
    shifting_relations: float = 0.0

    def __post_init__(self):
        energy = dict(self.energy)
        for region, value in energy.items():
            if region not in REGION_NAMES:
                raise ParameterRangeError(f"unknown energy region {region!r}")
            energy[region] = _check_range(f"energy.{region}", value, 0.0, 2.0)
        object.__setattr__(self, "energy", energy)
        _check_range("circles_curves", self.circles_curves, 0.0, 1.0)
        _check_range("synchronous_limbs", self.synchronous_limbs, 0.0, 1.0)
        _check_range("external_body_spaces", self.external_body_spaces, 0.0, 2.0)
        _check_range("shifting_relations", self.shifting_relations, 0.0, 1.0)

    def energy_for(self, region: str) -> float:
        return self.energy.get(region, 1.0)

    @property
    def is_neutral(self) -> bool:
        return (
            all(v == 1.0 for v in self.energy.values())
            and self.circles_curves == 0.0
            and (self.axis_point is None or self.axis_point.intensity == 0.0)
            and self.synchronous_limbs == 0.0
            and self.external_body_spaces == 1.0
            and self.shifting_relations == 0.0
        )

    def to_json_dict(self) -> dict:
        """Canonical minimal form: neutral fields are omitted entirely."""
        out: dict = {}
        energy = {r: v for r, v in self.energy.items() if v != 1.0}
        if energy:
            out["energy"] = {r: energy[r] for r in REGION_NAMES if r in energy}
        if self.circles_curves != 0.0:
            out["circles_curves"] = self.circles_curves
        if self.axis_point is not None and self.axis_point.intensity != 0.0:
            out["axis_point"] = {"joint": self.axis_point.joint,
                                 "intensity": self.axis_point.intensity}
        if self.synchronous_limbs != 0.0:
            out["synchronous_limbs"] = self.synchronous_limbs
        if self.external_body_spaces != 1.0:
            out["external_body_spaces"] = self.external_body_spaces
        if self.shifting_relations != 0.0:
            out["shifting_relations"] = self.shifting_relations
        return out

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "SixElementsAdjustment":
        """Build from the wire form; omitted fields mean neutral."""
        known = {"energy", "circles_curves", "axis_point", "synchronous_limbs",
                 "external_body_spaces", "shifting_relations"}
        unknown = set(data) - known
        if unknown:
            raise ParameterRangeError(f"unknown adjustment fields: {sorted(unknown)}")
        axis = None
        if data.get("axis_point") is not None:
            ap = data["axis_point"]
            axis = AxisPoint(joint=str(ap["joint"]), intensity=ap["intensity"])
        return cls(
            energy=dict(data.get("energy", {})),
            circles_curves=data.get("circles_curves", 0.0),
            axis_point=axis,
            synchronous_limbs=data.get("synchronous_limbs", 0.0),
            external_body_spaces=data.get("external_body_spaces", 1.0),
            shifting_relations=data.get("shifting_relations", 0.0),
        )


NEUTRAL = SixElementsAdjustment()


def _uniform(clip: AnimationClip) -> AnimationClip:
    return resample(clip, clip.sample_rate)


def _replace_channels(clip: AnimationClip,
                      new: Mapping[str, ClipChannel]) -> AnimationClip:
    channels = tuple(new.get(c.joint_id, c) for c in clip.channels)
    return AnimationClip(name=clip.name, duration=clip.duration,
                         sample_rate=clip.sample_rate, channels=channels)


def _slerp_tracks(qa: np.ndarray, qb: np.ndarray, w: float) -> np.ndarray:
    if w == 0.0:
        return quat.canonicalize(qa.copy())
    if w == 1.0:
        return quat.canonicalize(qb.copy())
    rel = quat.mul(quat.conjugate(qa), qb)
    return quat.canonical_unit(quat.mul(qa, quat.exp_map(w * quat.log_map(rel))))


def apply_energy(clip: AnimationClip, regions: BodyRegionMap,
                 energy: Mapping[str, float]) -> AnimationClip:
    """Scale each region's rotation amplitude about the channel means.

    Scale 1 keeps the motion, 0 freezes the region at its mean, up to 2
    exaggerates along the geodesic (angles clamp at 179 degrees). The root
    (translation and rotation) is never touched.
    """
    scales: dict[str, float] = {}
    for region, value in energy.items():
        if region not in REGION_NAMES:
            raise ParameterRangeError(f"unknown energy region {region!r}")
        scales[region] = _check_range(f"energy.{region}", value, 0.0, 2.0)
    clip = _uniform(clip)
    joint_scale: dict[str, float] = {}
    for region, scale in scales.items():
        if scale == 1.0:
            continue
        for j in regions.regions[region]:
            joint_scale[j] = scale
    if not joint_scale:
        return clip
    new = {}
    for c in clip.channels:
        scale = joint_scale.get(c.joint_id)
        if scale is None:
            continue
        center = mean_rotation(c)
        new[c.joint_id] = ClipChannel(
            joint_id=c.joint_id, times=c.times,
            rotations=quat.scale_about(center, c.rotations, scale),
            translations=c.translations)
    return _replace_channels(clip, new)


def apply_circles_curves(clip: AnimationClip, c: float,
                         sigma_max: float = SMOOTHING_SIGMA_MAX) -> AnimationClip:
    """Round the motion: Gaussian-smooth each rotation track in the
    log-quaternion domain about its mean (sigma = c * sigma_max seconds),
    then blend the smoothed track back in by c."""
    c = _check_range("circles_curves", c, 0.0, 1.0)
    clip = _uniform(clip)
    if c == 0.0:
        return clip
    sigma_samples = c * sigma_max * clip.sample_rate
    new = {}
    for chan in clip.channels:
        center = mean_rotation(chan)
        rv = quat.log_map(quat.mul(quat.conjugate(center), chan.rotations))
        smoothed_rv = gaussian_filter1d(rv, sigma=sigma_samples, axis=0,
                                        mode="nearest")
        smoothed = quat.mul(center, quat.exp_map(smoothed_rv))
        new[chan.joint_id] = ClipChannel(
            joint_id=chan.joint_id, times=chan.times,
            rotations=_slerp_tracks(chan.rotations, smoothed, c),
            translations=chan.translations)
    return _replace_channels(clip, new)


def apply_axis_point(clip: AnimationClip, skeleton: Skeleton, joint_id: str,
                     intensity: float) -> AnimationClip:
    """Pull the chosen joint toward a fixed pivot at its initial world
    position by compensating the root translation."""
    intensity = _check_range("axis_point.intensity", intensity, 0.0, 1.0)
    if joint_id not in skeleton.joint_ids:
        raise UnknownJointError(f"axis point joint {joint_id!r} not in skeleton")
    clip = _uniform(clip)
    if intensity == 0.0:
        return clip
    traj = joint_world_trajectory(clip, skeleton, joint_id)
    root_id = skeleton.root_id
    if clip.has_channel(root_id):
        root = clip.channel(root_id)
        base = (root.translations if root.translations is not None
                else np.tile(skeleton.joints[0].rest_translation, (len(root.times), 1)))
        times = root.times
        rotations = root.rotations
    else:
        times = uniform_times(clip.duration, clip.sample_rate)
        rotations = np.tile(skeleton.joints[0].rest_rotation, (len(times), 1))
        base = np.tile(skeleton.joints[0].rest_translation, (len(times), 1))
    compensated = base - intensity * (traj - traj[0])
    new_root = ClipChannel(joint_id=root_id, times=times, rotations=rotations,
                           translations=compensated)
    if clip.has_channel(root_id):
        return _replace_channels(clip, {root_id: new_root})
    return AnimationClip(name=clip.name, duration=clip.duration,
                         sample_rate=clip.sample_rate,
                         channels=(new_root,) + clip.channels)


def apply_synchronous_limbs(clip: AnimationClip, regions: BodyRegionMap,
                            s: float) -> AnimationClip:
    """Drive left-limb channels toward the sagittal mirror of their right
    counterparts; s = 1 makes the sides move in mirrored unison."""
    s = _check_range("synchronous_limbs", s, 0.0, 1.0)
    clip = _uniform(clip)
    if s == 0.0:
        return clip
    new = {}
    for leader_id, follower_id in regions.mirror_pairs:
        if not (clip.has_channel(leader_id) and clip.has_channel(follower_id)):
            continue
        leader = clip.channel(leader_id)
        follower = clip.channel(follower_id)
        target = quat.mirror_sagittal(leader.rotations)
        new[follower_id] = ClipChannel(
            joint_id=follower_id, times=follower.times,
            rotations=_slerp_tracks(follower.rotations, target, s),
            translations=follower.translations)
    return _replace_channels(clip, new)


def apply_external_body_spaces(clip: AnimationClip, regions: BodyRegionMap,
                               x: float,
                               coupling: float = PROXIMAL_COUPLING) -> AnimationClip:
    """Scale use of surrounding space: root-path deviations from the initial
    position scale by x, shoulder and hip rotation amplitudes by
    1 + coupling * (x - 1)."""
    x = _check_range("external_body_spaces", x, 0.0, 2.0)
    clip = _uniform(clip)
    if x == 1.0:
        return clip
    proximal_scale = 1.0 + coupling * (x - 1.0)
    new = {}
    for c in clip.channels:
        if c.translations is not None:
            anchor = c.translations[0]
            scaled = anchor + x * (c.translations - anchor)
            new[c.joint_id] = ClipChannel(joint_id=c.joint_id, times=c.times,
                                          rotations=c.rotations,
                                          translations=scaled)
        elif c.joint_id in regions.proximal_joints:
            center = mean_rotation(c)
            new[c.joint_id] = ClipChannel(
                joint_id=c.joint_id, times=c.times,
                rotations=quat.scale_about(center, c.rotations, proximal_scale),
                translations=None)
    return _replace_channels(clip, new)


def apply_shifting_relations(clip: AnimationClip, regions: BodyRegionMap,
                             r: float,
                             delay_max: float = LOWER_BODY_DELAY_MAX) -> AnimationClip:
    """Delay the lower body by r * delay_max seconds (clamped at the clip
    start) while the upper body keeps its timing."""
    r = _check_range("shifting_relations", r, 0.0, 1.0)
    clip = _uniform(clip)
    if r == 0.0:
        return clip
    delay = r * delay_max
    lower = regions.lower_body
    new = {}
    for c in clip.channels:
        if c.joint_id not in lower:
            continue
        shifted = np.maximum(c.times - delay, 0.0)
        new[c.joint_id] = ClipChannel(
            joint_id=c.joint_id, times=c.times,
            rotations=c.sample_rotation(shifted),
            translations=(c.sample_translation(shifted)
                          if c.translations is not None else None))
    return _replace_channels(clip, new)


def apply_all(clip: AnimationClip, adjustment: SixElementsAdjustment,
              skeleton: Skeleton, regions: BodyRegionMap) -> AnimationClip:
    """Compose the six transforms in the fixed order: axis_point, then
    external_body_spaces, synchronous_limbs, circles_curves,
    shifting_relations, and energy last so it scales the final shape.
    The neutral adjustment returns the input unchanged."""
    if adjustment.is_neutral:
        return clip
    clip = _uniform(clip)
    ap = adjustment.axis_point
    if ap is not None and ap.intensity != 0.0:
        clip = apply_axis_point(clip, skeleton, ap.joint, ap.intensity)
    if adjustment.external_body_spaces != 1.0:
        clip = apply_external_body_spaces(clip, regions,
                                          adjustment.external_body_spaces)
    if adjustment.synchronous_limbs != 0.0:
        clip = apply_synchronous_limbs(clip, regions, adjustment.synchronous_limbs)
    if adjustment.circles_curves != 0.0:
        clip = apply_circles_curves(clip, adjustment.circles_curves)
    if adjustment.shifting_relations != 0.0:
        clip = apply_shifting_relations(clip, regions, adjustment.shifting_relations)
    if any(v != 1.0 for v in adjustment.energy.values()):
        clip = apply_energy(clip, regions, adjustment.energy)
    return clip

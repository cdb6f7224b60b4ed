import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation as ScipyRotation

from storydance import quat
from storydance.elements import (
    NEUTRAL,
    AxisPoint,
    ParameterRangeError,
    SixElementsAdjustment,
    UnknownJointError,
    apply_all,
    apply_axis_point,
    apply_circles_curves,
    apply_energy,
    apply_external_body_spaces,
    apply_shifting_relations,
    apply_synchronous_limbs,
)
from storydance.motion import AnimationClip, ClipChannel, uniform_times

from helpers import axis_quat, max_frame_step_rad, polyline_length, signed_axis_angle

RATE = 30.0
DURATION = 4.0


def grid():
    return uniform_times(DURATION, RATE)


def channel(joint_id, angles_rad, axis=(1, 0, 0), translations=None):
    t = grid()
    assert len(angles_rad) == len(t)
    rots = quat.canonicalize(
        np.stack([axis_quat(axis, a) for a in angles_rad]))
    return ClipChannel(joint_id=joint_id, times=t, rotations=rots,
                       translations=translations)


def sine(amplitude_rad, freq=0.5, phase=0.0):
    return amplitude_rad * np.sin(2 * math.pi * freq * grid() + phase)


def build_clip(channels):
    return AnimationClip("fixture", DURATION, RATE, tuple(channels))


def clips_equal(a: AnimationClip, b: AnimationClip, tol=1e-9) -> bool:
    if a.joint_ids != b.joint_ids:
        return False
    for ca, cb in zip(a.channels, b.channels):
        if np.max(np.abs(ca.rotations - cb.rotations)) > tol:
            return False
        if (ca.translations is None) != (cb.translations is None):
            return False
        if ca.translations is not None and \
                np.max(np.abs(ca.translations - cb.translations)) > tol:
            return False
    return True


def fk_oracle(skeleton, rotations_by_joint, root_translation):
    """Independent forward kinematics via scipy Rotation (xyzw order)."""
    world = {}
    state = {}
    for i, j in enumerate(skeleton.joints):
        q = rotations_by_joint.get(j.joint_id, j.rest_rotation)
        r = ScipyRotation.from_quat([q[1], q[2], q[3], q[0]])
        if j.parent is None:
            p = np.asarray(root_translation, dtype=np.float64)
            state[i] = (r, p)
        else:
            pr, pp = state[j.parent]
            state[i] = (pr * r, pp + pr.apply(j.rest_translation))
        world[j.joint_id] = state[i][1]
    return world


class TestEnergy:
    def test_scale_one_everywhere_is_identity(self, regions):
        clip = build_clip([channel("left_upper_leg", sine(0.2))])
        out = apply_energy(clip, regions, {r: 1.0 for r in regions.regions})
        assert out is clip

    def test_scale_zero_freezes_region_at_mean(self, regions):
        clip = build_clip([channel("left_upper_leg", sine(0.3)),
                           channel("right_lower_leg", sine(0.25, freq=0.4))])
        out = apply_energy(clip, regions, {"left_leg": 0.0, "right_leg": 0.0})
        for c in out.channels:
            steps = max_frame_step_rad(c.rotations)
            assert steps <= 1e-9  # zero temporal angular variance

    def test_half_energy_halves_sine_amplitude(self, regions):
        # Oracle: scaling about the mean of a symmetric single-axis sinusoid
        # multiplies the angle track by the scale.
        angles = np.deg2rad(20.0) * np.sin(2 * math.pi * 0.5 * grid())
        clip = build_clip([channel("left_upper_leg", angles)])
        out = apply_energy(clip, regions, {"left_leg": 0.5})
        got = np.array([signed_axis_angle(q, [1, 0, 0])
                        for q in out.channels[0].rotations])
        assert np.max(np.abs(got - 0.5 * angles)) < 1e-3
        assert abs(np.max(np.abs(got)) - math.radians(10.0)) < 1e-3

    def test_amplitude_monotone_in_scale(self, regions):
        angles = sine(0.3)
        clip = build_clip([channel("right_upper_arm", angles)])
        amplitudes = []
        for e in np.linspace(0.0, 2.0, 9):
            out = apply_energy(clip, regions, {"right_arm": float(e)})
            track = [abs(signed_axis_angle(q, [1, 0, 0]))
                     for q in out.channels[0].rotations]
            amplitudes.append(max(track))
        assert all(b >= a - 1e-12 for a, b in zip(amplitudes, amplitudes[1:]))

    def test_root_untouched(self, regions):
        tr = np.column_stack([sine(0.05), np.full(len(grid()), 0.95), sine(0.04)])
        clip = build_clip([channel("root", sine(0.1), translations=tr),
                           channel("left_upper_leg", sine(0.3))])
        out = apply_energy(clip, regions, {"left_leg": 0.0})
        assert np.array_equal(out.channel("root").rotations,
                              clip.channel("root").rotations)
        assert np.array_equal(out.channel("root").translations, tr)

    def test_out_of_range_rejected_not_clamped(self, regions):
        clip = build_clip([channel("left_upper_leg", sine(0.2))])
        with pytest.raises(ParameterRangeError):
            apply_energy(clip, regions, {"left_leg": 2.5})
        with pytest.raises(ParameterRangeError):
            apply_energy(clip, regions, {"lower_body": 1.0})


class TestCirclesCurves:
    def test_zero_is_identity(self, regions):
        clip = build_clip([channel("head", sine(0.2))])
        assert apply_circles_curves(clip, 0.0) is clip

    def test_step_track_velocity_strictly_decreases(self):
        # Velocity oracle: finite-difference max angular step before/after.
        angles = np.where(grid() < DURATION / 2, 0.0, math.radians(30.0))
        clip = build_clip([channel("head", angles)])
        before = max_frame_step_rad(clip.channels[0].rotations)
        out = apply_circles_curves(clip, 1.0)
        after = max_frame_step_rad(out.channels[0].rotations)
        assert after < before

    def test_constant_track_unchanged(self):
        angles = np.full(len(grid()), 0.4)
        clip = build_clip([channel("neck", angles)])
        for c in (0.25, 1.0):
            out = apply_circles_curves(clip, c)
            assert clips_equal(out, clip, tol=1e-9)

    def test_out_of_range_rejected(self):
        clip = build_clip([channel("head", sine(0.1))])
        with pytest.raises(ParameterRangeError):
            apply_circles_curves(clip, 1.5)


class TestAxisPoint:
    def make_walking_clip(self, skeleton):
        t = grid()
        tr = np.column_stack([0.3 * np.sin(2 * math.pi * 0.25 * t),
                              np.full(len(t), 0.95),
                              0.2 * np.sin(2 * math.pi * 0.3 * t + 1.0)])
        return build_clip([
            channel("root", sine(0.1, freq=0.3), axis=(0, 1, 0), translations=tr),
            channel("left_hand", sine(0.4)),
        ])

    def test_intensity_zero_is_identity(self, skeleton):
        clip = self.make_walking_clip(skeleton)
        assert apply_axis_point(clip, skeleton, "left_hand", 0.0) is clip

    def test_full_intensity_pins_joint_world_position(self, skeleton):
        clip = self.make_walking_clip(skeleton)
        out = apply_axis_point(clip, skeleton, "left_hand", 1.0)
        # Oracle: independent scipy-based FK on the output, frame by frame.
        root = out.channel("root")
        positions = []
        for i in range(len(root.times)):
            rots = {c.joint_id: c.rotations[i] for c in out.channels}
            world = fk_oracle(skeleton, rots, root.translations[i])
            positions.append(world["left_hand"])
        positions = np.asarray(positions)
        drift = np.max(np.linalg.norm(positions - positions[0], axis=1))
        assert drift < 1e-6

    def test_root_pivot_freezes_root_translation(self, skeleton):
        clip = self.make_walking_clip(skeleton)
        out = apply_axis_point(clip, skeleton, "root", 1.0)
        tr = out.channel("root").translations
        assert np.max(np.abs(tr - tr[0])) < 1e-12

    def test_unknown_joint_rejected(self, skeleton):
        clip = self.make_walking_clip(skeleton)
        with pytest.raises(UnknownJointError):
            apply_axis_point(clip, skeleton, "tail", 1.0)


class TestSynchronousLimbs:
    def arm_clip(self, left_angles, right_angles, axis=(0, 0, 1)):
        return build_clip([
            channel("left_upper_arm", left_angles, axis=axis),
            channel("right_upper_arm", right_angles, axis=axis),
        ])

    def test_zero_is_identity(self, regions):
        clip = self.arm_clip(sine(0.2), sine(0.3, phase=1.0))
        assert apply_synchronous_limbs(clip, regions, 0.0) is clip

    def test_full_blend_mirrors_leader(self, regions):
        clip = self.arm_clip(sine(0.2), sine(0.3, phase=1.0))
        out = apply_synchronous_limbs(clip, regions, 1.0)
        left = out.channel("left_upper_arm").rotations
        expected = quat.mirror_sagittal(clip.channel("right_upper_arm").rotations)
        assert np.max(np.abs(left - expected)) <= 1e-9

    def test_mirror_symmetric_clip_is_fixed_point(self, regions):
        right = np.stack([axis_quat([0.2, 0.7, -0.3], a) for a in sine(0.3)])
        left = quat.mirror_sagittal(right)
        t = grid()
        clip = build_clip([
            ClipChannel("left_upper_arm", t, left),
            ClipChannel("right_upper_arm", t, right),
        ])
        for s in (0.3, 0.7, 1.0):
            out = apply_synchronous_limbs(clip, regions, s)
            assert clips_equal(out, clip, tol=1e-6)

    def test_leader_channels_never_modified(self, regions):
        clip = self.arm_clip(sine(0.2), sine(0.3))
        out = apply_synchronous_limbs(clip, regions, 0.8)
        assert np.array_equal(out.channel("right_upper_arm").rotations,
                              clip.channel("right_upper_arm").rotations)


class TestExternalBodySpaces:
    def spacious_clip(self):
        t = grid()
        tr = np.column_stack([0.25 * np.sin(2 * math.pi * 0.25 * t),
                              np.full(len(t), 0.95),
                              0.15 * np.cos(2 * math.pi * 0.25 * t)])
        return build_clip([
            channel("root", sine(0.05), translations=tr),
            channel("left_shoulder", sine(0.2)),
            channel("head", sine(0.15)),
        ])

    def test_one_is_identity(self, regions):
        clip = self.spacious_clip()
        assert apply_external_body_spaces(clip, regions, 1.0) is clip

    def test_zero_freezes_root_translation(self, regions):
        clip = self.spacious_clip()
        out = apply_external_body_spaces(clip, regions, 0.0)
        tr = out.channel("root").translations
        assert np.max(np.abs(tr - tr[0])) < 1e-12

    def test_double_doubles_path_length(self, regions):
        clip = self.spacious_clip()
        out = apply_external_body_spaces(clip, regions, 2.0)
        base = polyline_length(clip.channel("root").translations)
        assert base > 0.1  # fixture actually travels
        doubled = polyline_length(out.channel("root").translations)
        assert abs(doubled - 2.0 * base) < 1e-6

    def test_proximal_amplitude_coupling(self, regions):
        clip = self.spacious_clip()
        out = apply_external_body_spaces(clip, regions, 2.0)
        got = np.array([signed_axis_angle(q, [1, 0, 0])
                        for q in out.channel("left_shoulder").rotations])
        want = 1.5 * np.array([signed_axis_angle(q, [1, 0, 0])
                               for q in clip.channel("left_shoulder").rotations])
        assert np.max(np.abs(got - want)) < 1e-3
        # Non-proximal, non-root channels stay put.
        assert np.array_equal(out.channel("head").rotations,
                              clip.channel("head").rotations)


class TestShiftingRelations:
    def legs_clip(self):
        return build_clip([
            channel("left_upper_leg", sine(0.3)),
            channel("spine_01", sine(0.2)),
        ])

    def test_zero_is_identity(self, regions):
        clip = self.legs_clip()
        assert apply_shifting_relations(clip, regions, 0.0) is clip

    def test_full_shift_delays_lower_body_half_second(self, regions):
        clip = self.legs_clip()
        out = apply_shifting_relations(clip, regions, 1.0)
        src = clip.channel("left_upper_leg")
        shifted = out.channel("left_upper_leg")
        for i, t in enumerate(shifted.times):
            if t >= 0.5:
                ref = src.sample_rotation(float(t) - 0.5)
                assert np.max(np.abs(shifted.rotations[i] - ref)) <= 1e-6

    def test_upper_body_untouched(self, regions):
        clip = self.legs_clip()
        out = apply_shifting_relations(clip, regions, 1.0)
        assert np.array_equal(out.channel("spine_01").rotations,
                              clip.channel("spine_01").rotations)

    def test_constant_pose_unchanged(self, regions):
        angles = np.full(len(grid()), 0.25)
        clip = build_clip([channel("right_lower_leg", angles)])
        out = apply_shifting_relations(clip, regions, 0.7)
        assert clips_equal(out, clip, tol=1e-12)

    def test_delay_budget_is_configurable(self, regions):
        clip = self.legs_clip()
        out = apply_shifting_relations(clip, regions, 1.0, delay_max=0.25)
        src = clip.channel("left_upper_leg")
        shifted = out.channel("left_upper_leg")
        i = int(1.0 * RATE)  # t = 1.0 s
        ref = src.sample_rotation(1.0 - 0.25)
        assert np.max(np.abs(shifted.rotations[i] - ref)) <= 1e-6


class TestApplyAll:
    def full_clip(self):
        t = grid()
        tr = np.column_stack([0.1 * np.sin(2 * math.pi * 0.25 * t),
                              np.full(len(t), 0.95),
                              0.1 * np.cos(2 * math.pi * 0.2 * t)])
        chans = [channel("root", sine(0.05, freq=0.3), axis=(0, 1, 0), translations=tr)]
        for jid, phase in [("spine_01", 0.3), ("head", 0.9),
                           ("left_upper_arm", 1.2), ("right_upper_arm", 0.4),
                           ("left_upper_leg", 2.0), ("right_upper_leg", 0.7)]:
            chans.append(channel(jid, sine(0.25, phase=phase)))
        return build_clip(chans)

    def test_neutral_identity_bitwise(self, skeleton, regions):
        clip = self.full_clip()
        out = apply_all(clip, NEUTRAL, skeleton, regions)
        assert out.to_json() == clip.to_json()

    def test_single_stage_matches_direct_call(self, skeleton, regions):
        clip = self.full_clip()
        adj = SixElementsAdjustment(energy={"left_leg": 0.3, "right_leg": 0.3})
        combined = apply_all(clip, adj, skeleton, regions)
        direct = apply_energy(clip, regions, {"left_leg": 0.3, "right_leg": 0.3})
        assert combined.to_json() == direct.to_json()

    def test_stage_order_matters(self, skeleton, regions):
        clip = self.full_clip()
        adj_energy = {"left_leg": 1.8, "right_leg": 1.8}
        spec_order = apply_energy(
            apply_circles_curves(clip, 1.0), regions, adj_energy)
        reversed_order = apply_circles_curves(
            apply_energy(clip, regions, adj_energy), 1.0)
        assert not clips_equal(spec_order, reversed_order, tol=1e-6)

    def test_structure_preserved(self, skeleton, regions):
        clip = self.full_clip()
        adj = SixElementsAdjustment(
            energy={"left_leg": 0.5},
            circles_curves=0.6,
            axis_point=AxisPoint("left_foot", 0.8),
            synchronous_limbs=0.4,
            external_body_spaces=1.5,
            shifting_relations=0.5,
        )
        out = apply_all(clip, adj, skeleton, regions)
        assert out.duration == clip.duration
        assert out.sample_rate == clip.sample_rate
        assert out.uniform
        assert sorted(out.joint_ids) == sorted(clip.joint_ids)
        for c in out.channels:
            norms = np.linalg.norm(c.rotations, axis=1)
            assert np.max(np.abs(norms - 1.0)) <= 1e-6
            assert np.min(c.rotations[:, 0]) >= 0.0

    def test_determinism(self, skeleton, regions):
        clip = self.full_clip()
        adj = SixElementsAdjustment(energy={"torso": 1.4}, circles_curves=0.8,
                                    shifting_relations=0.3)
        a = apply_all(clip, adj, skeleton, regions).to_json()
        b = apply_all(clip, adj, skeleton, regions).to_json()
        assert a == b


class TestAdjustmentType:
    def test_defaults_are_neutral(self):
        assert NEUTRAL.is_neutral
        assert SixElementsAdjustment().is_neutral
        assert NEUTRAL.to_json_dict() == {}

    def test_round_trip_json(self):
        adj = SixElementsAdjustment(
            energy={"left_leg": 0.7, "right_leg": 0.7},
            circles_curves=0.25,
            axis_point=AxisPoint("left_foot", 1.0),
            external_body_spaces=1.5,
        )
        again = SixElementsAdjustment.from_json_dict(adj.to_json_dict())
        assert again == adj

    def test_omitted_fields_mean_neutral(self):
        adj = SixElementsAdjustment.from_json_dict({})
        assert adj.is_neutral

    def test_range_violations_rejected(self):
        with pytest.raises(ParameterRangeError):
            SixElementsAdjustment(energy={"left_leg": 3.5})
        with pytest.raises(ParameterRangeError):
            SixElementsAdjustment(circles_curves=-0.1)
        with pytest.raises(ParameterRangeError):
            SixElementsAdjustment.from_json_dict({"bogus_field": 1})
        with pytest.raises(ParameterRangeError):
            AxisPoint("left_foot", 1.5)

    def test_region_partition(self, skeleton, regions):
        regions.validate_against(skeleton)
        all_joints = set()
        for joints in regions.regions.values():
            all_joints.update(joints)
        assert all_joints == set(skeleton.joint_ids) - {"root"}

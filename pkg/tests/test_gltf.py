import math

import numpy as np
import pytest

from storydance import quat
from storydance.gltf import GltfError, pack_glb, read_glb, write_glb
from storydance.motion import AnimationClip, ClipChannel, Joint, Skeleton

from gltf_oracle import oracle_parse_glb, oracle_write_glb
from helpers import axis_quat


@pytest.fixture
def mini_skeleton():
    return Skeleton(joints=(
        Joint("hips", None, np.array([0.0, 1.0, 0.0]), quat.IDENTITY),
        Joint("arm", 0, np.array([0.4, 0.0, 0.0]), quat.IDENTITY),
    ))


IDENTITY_MAP = {"hips": "hips", "arm": "arm"}


def fixture_glb(interpolation="LINEAR"):
    """Single-joint 2-key clip: identity -> 90 degrees about X over 1 s."""
    q0 = [0.0, 0.0, 0.0, 1.0]                 # xyzw identity
    s, c = math.sin(math.pi / 4), math.cos(math.pi / 4)
    q1 = [s, 0.0, 0.0, c]
    return oracle_write_glb(
        node_names=["hips", "arm"],
        keyframes={"arm": ([0.0, 1.0], [q0, q1])},
        parents={"arm": "hips"},
        interpolation=interpolation,
    ), q1


class TestIngest:
    def test_minimal_fixture(self, mini_skeleton):
        data, q1 = fixture_glb()
        clip = read_glb(data, IDENTITY_MAP, mini_skeleton)
        assert clip.duration == 1.0
        assert clip.joint_ids == ("arm",)
        chan = clip.channels[0]
        assert len(chan.times) == 2
        # wxyz order with hemisphere fixed
        assert np.allclose(chan.rotations[1], [q1[3], q1[0], q1[1], q1[2]], atol=1e-7)

    def test_expected_keys_match_oracle_parser(self, mini_skeleton):
        data, _ = fixture_glb()
        clip = read_glb(data, IDENTITY_MAP, mini_skeleton)
        oracle = oracle_parse_glb(data)
        times, xyzw = oracle[("arm", "rotation")]
        chan = clip.channels[0]
        assert np.allclose(chan.times, times, atol=1e-6)
        wxyz = np.column_stack([xyzw[:, 3], xyzw[:, 0], xyzw[:, 1], xyzw[:, 2]])
        assert np.allclose(chan.rotations, wxyz, atol=1e-6)

    def test_no_animation_rejected(self, mini_skeleton):
        empty = pack_glb({"asset": {"version": "2.0"}, "nodes": [{"name": "hips"}]}, b"")
        with pytest.raises(GltfError, match="no animations"):
            read_glb(empty, IDENTITY_MAP, mini_skeleton)

    def test_bad_magic_rejected(self, mini_skeleton):
        with pytest.raises(GltfError, match="magic"):
            read_glb(b"nope" + b"\x00" * 20, IDENTITY_MAP, mini_skeleton)

    def test_cubicspline_rejected(self, mini_skeleton):
        data, _ = fixture_glb(interpolation="CUBICSPLINE")
        with pytest.raises(GltfError, match="CUBICSPLINE"):
            read_glb(data, IDENTITY_MAP, mini_skeleton)

    def test_step_sampler_accepted(self, mini_skeleton):
        data, _ = fixture_glb(interpolation="STEP")
        clip = read_glb(data, IDENTITY_MAP, mini_skeleton)
        assert len(clip.channels[0].times) == 2

    def test_zero_mapped_joints_rejected(self, mini_skeleton):
        data, _ = fixture_glb()
        with pytest.raises(GltfError, match="no channels map"):
            read_glb(data, {"unrelated": "hips"}, mini_skeleton)

    def test_unmapped_node_recorded_as_warning(self, mini_skeleton):
        data, _ = fixture_glb()
        warnings: list[str] = []
        read_glb(data, {"arm": "arm"}, mini_skeleton, warnings=warnings)
        assert not warnings  # hips has no animation channel in the fixture
        q0 = [0.0, 0.0, 0.0, 1.0]
        data2 = oracle_write_glb(["hips", "extra"],
                                 {"hips": ([0.0, 1.0], [q0, q0]),
                                  "extra": ([0.0, 1.0], [q0, q0])})
        warnings2: list[str] = []
        read_glb(data2, {"hips": "hips"}, mini_skeleton, warnings=warnings2)
        assert any("extra" in w for w in warnings2)

    def test_ingest_is_deterministic(self, mini_skeleton):
        data, _ = fixture_glb()
        a = read_glb(data, IDENTITY_MAP, mini_skeleton).to_json()
        b = read_glb(data, IDENTITY_MAP, mini_skeleton).to_json()
        assert a == b

    def test_uniform_times_snap_to_exact_grid(self, mini_skeleton):
        rate = 30.0
        times = (np.arange(121) / rate).astype(np.float32).tolist()
        q0 = [0.0, 0.0, 0.0, 1.0]
        data = oracle_write_glb(["hips"], {"hips": (times, [q0] * 121)})
        clip = read_glb(data, {"hips": "hips"}, mini_skeleton)
        assert clip.sample_rate == 30.0
        assert np.array_equal(clip.channels[0].times, np.arange(121) / rate)
        assert clip.uniform


class TestExportRoundTrip:
    def make_clip(self):
        t = np.arange(31) / 30.0
        ang = np.deg2rad(25.0) * np.sin(2 * math.pi * 0.5 * t)
        rots = np.stack([axis_quat([0, 1, 0], a) for a in ang])
        arm = ClipChannel("arm", t, rots)
        hips = ClipChannel(
            "hips", t, np.tile(quat.IDENTITY, (31, 1)),
            translations=np.column_stack([0.1 * np.sin(t), np.full(31, 1.0), 0.05 * t]))
        return AnimationClip("wave", 1.0, 30.0, (hips, arm))

    def test_round_trip_within_1e6(self, mini_skeleton):
        clip = self.make_clip()
        blob = write_glb(clip, mini_skeleton)
        again = read_glb(blob, IDENTITY_MAP, mini_skeleton)
        blob2 = write_glb(again, mini_skeleton)
        final = read_glb(blob2, IDENTITY_MAP, mini_skeleton)
        assert final.duration == pytest.approx(again.duration, abs=1e-9)
        for c1, c2 in zip(again.channels, final.channels):
            assert c1.joint_id == c2.joint_id
            assert np.max(np.abs(c1.times - c2.times)) <= 1e-6
            assert np.max(np.abs(c1.rotations - c2.rotations)) <= 1e-6
            if c1.translations is not None:
                assert np.max(np.abs(c1.translations - c2.translations)) <= 1e-6

    def test_export_is_deterministic(self, mini_skeleton):
        clip = self.make_clip()
        assert write_glb(clip, mini_skeleton) == write_glb(clip, mini_skeleton)

    def test_exported_values_via_oracle_parser(self, mini_skeleton):
        clip = self.make_clip()
        tracks = oracle_parse_glb(write_glb(clip, mini_skeleton))
        times, xyzw = tracks[("arm", "rotation")]
        assert np.allclose(times, clip.channel("arm").times, atol=1e-6)
        wxyz = np.column_stack([xyzw[:, 3], xyzw[:, 0], xyzw[:, 1], xyzw[:, 2]])
        assert np.allclose(wxyz, clip.channel("arm").rotations, atol=1e-6)
        ttimes, tvals = tracks[("hips", "translation")]
        assert np.allclose(tvals, clip.channel("hips").translations, atol=1e-6)

    def test_empty_clip_rejected(self, mini_skeleton):
        with pytest.raises(GltfError):
            write_glb(AnimationClip("empty", 1.0, 30.0, ()), mini_skeleton)

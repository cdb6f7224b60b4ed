"""Binary glTF (.glb) ingestion and export for animation clips.

Only the animation surface of glTF is handled: node hierarchies, rotation
samplers, and the root node's translation sampler. The exporter emits a
standards-conformant container with LINEAR samplers and float32 accessors;
the reader accepts LINEAR and STEP (cubic spline input is rejected).
"""
from __future__ import annotations

import json
import struct
from typing import Mapping

import numpy as np

from . import quat
from .motion import AnimationClip, ClipChannel, Skeleton

GLB_MAGIC = 0x46546C67
CHUNK_JSON = 0x4E4F534A
CHUNK_BIN = 0x004E4942

COMPONENT_DTYPES = {
    5120: np.int8,
    5121: np.uint8,
    5122: np.int16,
    5123: np.uint16,
    5125: np.uint32,
    5126: np.float32,
}
NORMALIZED_SCALE = {5120: 127.0, 5121: 255.0, 5122: 32767.0, 5123: 65535.0}
ELEMENT_COUNTS = {"SCALAR": 1, "VEC2": 2, "VEC3": 3, "VEC4": 4}

#: Keyframe grids are snapped to exact i/rate when within this many seconds,
#: which absorbs the float32 storage of times.
GRID_SNAP_TOL = 1e-4


class GltfError(ValueError):
    """Malformed container or unsupported glTF feature."""


# ---------------------------------------------------------------------------
# Reading


def _read_chunks(data: bytes) -> tuple[dict, bytes]:
    if len(data) < 12:
        raise GltfError("truncated glb header")
    magic, version, length = struct.unpack_from("<III", data, 0)
    if magic != GLB_MAGIC:
        raise GltfError("not a glb container (bad magic)")
    if version != 2:
        raise GltfError(f"unsupported glb version {version}")
    if length > len(data):
        raise GltfError("glb length field exceeds payload")
    offset = 12
    doc = None
    blob = b""
    while offset + 8 <= length:
        chunk_len, chunk_type = struct.unpack_from("<II", data, offset)
        offset += 8
        if offset + chunk_len > length:
            raise GltfError("chunk overruns container")
        chunk = data[offset:offset + chunk_len]
        offset += chunk_len
        if chunk_type == CHUNK_JSON:
            try:
                doc = json.loads(chunk.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as e:
                raise GltfError(f"bad JSON chunk: {e}") from e
        elif chunk_type == CHUNK_BIN:
            blob = bytes(chunk)
    if doc is None:
        raise GltfError("missing JSON chunk")
    return doc, blob


def _read_accessor(doc: dict, blob: bytes, index: int) -> np.ndarray:
    try:
        acc = doc["accessors"][index]
    except (KeyError, IndexError) as e:
        raise GltfError(f"missing accessor {index}") from e
    if "sparse" in acc:
        raise GltfError("sparse accessors not supported")
    ctype = acc.get("componentType")
    if ctype not in COMPONENT_DTYPES:
        raise GltfError(f"unsupported componentType {ctype}")
    width = ELEMENT_COUNTS.get(acc.get("type"))
    if width is None:
        raise GltfError(f"unsupported accessor type {acc.get('type')}")
    count = int(acc["count"])
    view = doc["bufferViews"][acc["bufferView"]]
    if "byteStride" in view:
        raise GltfError("strided animation buffer views not supported")
    if view.get("buffer", 0) != 0:
        raise GltfError("external buffers not supported in glb")
    start = view.get("byteOffset", 0) + acc.get("byteOffset", 0)
    dtype = COMPONENT_DTYPES[ctype]
    nbytes = count * width * np.dtype(dtype).itemsize
    if start + nbytes > len(blob):
        raise GltfError("accessor overruns binary chunk")
    raw = np.frombuffer(blob, dtype=dtype, count=count * width, offset=start)
    arr = raw.reshape(count, width).astype(np.float64)
    if acc.get("normalized") and ctype in NORMALIZED_SCALE:
        arr = arr / NORMALIZED_SCALE[ctype]
        if ctype in (5120, 5122):  # signed: clamp the asymmetric minimum
            arr = np.maximum(arr, -1.0)
    return arr[:, 0] if width == 1 else arr


def _snap_uniform(times: np.ndarray) -> tuple[np.ndarray, float | None]:
    """If times sit on an i/rate grid within float32 wobble, return exact
    float64 grid times and the rate; otherwise the input and None."""
    n = len(times)
    if n < 2 or times[0] > GRID_SNAP_TOL:
        return times, None
    dt = (times[-1] - times[0]) / (n - 1)
    if dt <= 0:
        return times, None
    rate = 1.0 / dt
    if abs(rate - round(rate)) < 1e-3 * rate:
        rate = float(round(rate))
    grid = np.arange(n, dtype=np.float64) / rate
    if np.max(np.abs(times - grid)) <= GRID_SNAP_TOL:
        return grid, rate
    return times, None


def read_glb(data: bytes, joint_map: Mapping[str, str], skeleton: Skeleton,
             warnings: list[str] | None = None) -> AnimationClip:
    """Convert the first animation of a .glb into a clip.

    Node names are mapped through joint_map; unmapped nodes are skipped with
    a warning record. Quaternions are normalized and hemisphere-fixed; times
    on a uniform grid are snapped to exact grid values.
    """
    sink = warnings if warnings is not None else []
    doc, blob = _read_chunks(data)
    animations = doc.get("animations") or []
    if not animations:
        raise GltfError("file contains no animations")
    anim = animations[0]
    nodes = doc.get("nodes", [])
    samplers = anim.get("samplers", [])

    known_joints = set(skeleton.joint_ids)
    rotations: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    root_translation: tuple[np.ndarray, np.ndarray] | None = None

    for chan in anim.get("channels", []):
        target = chan.get("target", {})
        path = target.get("path")
        node_idx = target.get("node")
        if node_idx is None or path not in ("rotation", "translation", "scale", "weights"):
            continue
        name = nodes[node_idx].get("name") if node_idx < len(nodes) else None
        if not name:
            sink.append(f"channel targets unnamed node {node_idx}; skipped")
            continue
        joint = joint_map.get(name)
        if joint is None:
            sink.append(f"node '{name}' not in joint map; skipped")
            continue
        if joint not in known_joints:
            raise GltfError(f"joint map target '{joint}' not in skeleton")
        sampler = samplers[chan["sampler"]]
        interp = sampler.get("interpolation", "LINEAR")
        if interp == "CUBICSPLINE":
            raise GltfError("CUBICSPLINE samplers not supported")
        if interp not in ("LINEAR", "STEP"):
            raise GltfError(f"unsupported sampler interpolation {interp!r}")
        times = np.atleast_1d(_read_accessor(doc, blob, sampler["input"]))
        values = _read_accessor(doc, blob, sampler["output"])
        if path == "rotation":
            if values.ndim != 2 or values.shape[1] != 4:
                raise GltfError("rotation output accessor is not VEC4")
            if joint in rotations:
                raise GltfError(f"duplicate rotation channel for joint {joint}")
            wxyz = np.column_stack([values[:, 3], values[:, 0], values[:, 1], values[:, 2]])
            rotations[joint] = (times, quat.canonical_unit(wxyz))
        elif path == "translation":
            if joint == skeleton.root_id:
                root_translation = (times, values)
            else:
                sink.append(f"translation channel on non-root joint {joint}; ignored")
        else:
            sink.append(f"{path} channel on joint {joint}; ignored")

    if not rotations and root_translation is None:
        raise GltfError("no channels map onto the skeleton")

    rates = []
    channels = []
    for joint_id in skeleton.joint_ids:  # deterministic order
        rot = rotations.get(joint_id)
        is_root = joint_id == skeleton.root_id
        trans = root_translation if is_root else None
        if rot is None and trans is None:
            continue
        if rot is None:
            rest = skeleton.joints[skeleton.index_of(joint_id)].rest_rotation
            times = trans[0]
            rot = (times, np.tile(rest, (len(times), 1)))
        times, quats = rot
        translations = None
        if trans is not None:
            ttimes, tvalues = trans
            if len(ttimes) == len(times) and np.allclose(ttimes, times, atol=1e-9):
                translations = tvalues
            else:
                # Merge onto the union grid so one channel carries both tracks.
                union = np.union1d(times, ttimes)
                tmp = ClipChannel(joint_id, times, quats)
                quats = tmp.sample_rotation(union)
                translations = np.column_stack(
                    [np.interp(union, ttimes, tvalues[:, k]) for k in range(3)])
                times = union
        times, rate = _snap_uniform(np.asarray(times, dtype=np.float64))
        if rate is not None:
            rates.append(rate)
        try:
            channels.append(ClipChannel(joint_id=joint_id, times=times,
                                        rotations=quats, translations=translations))
        except ValueError as e:
            raise GltfError(f"invalid keyframes for joint {joint_id}: {e}") from e

    duration = max(float(c.times[-1]) for c in channels)
    if duration <= 0:
        raise GltfError("animation has zero duration")
    if rates:
        sample_rate = rates[0]
    else:
        longest = max(channels, key=lambda c: len(c.times))
        if len(longest.times) > 1 and longest.times[-1] > longest.times[0]:
            sample_rate = (len(longest.times) - 1) / float(
                longest.times[-1] - longest.times[0])
        else:
            sample_rate = 30.0
    name = anim.get("name") or "animation"
    return AnimationClip(name=str(name), duration=duration,
                         sample_rate=sample_rate, channels=tuple(channels))


# ---------------------------------------------------------------------------
# Writing


class _BufferBuilder:
    def __init__(self):
        self.blob = bytearray()
        self.views: list[dict] = []
        self.accessors: list[dict] = []
        self._dedupe: dict[bytes, int] = {}

    def add(self, array: np.ndarray, gltf_type: str, minmax: bool = False) -> int:
        data = np.ascontiguousarray(array, dtype=np.float32)
        raw = data.tobytes()
        key = raw + gltf_type.encode()
        if key in self._dedupe:
            return self._dedupe[key]
        while len(self.blob) % 4:
            self.blob.append(0)
        view = {"buffer": 0, "byteOffset": len(self.blob), "byteLength": len(raw)}
        self.blob.extend(raw)
        self.views.append(view)
        acc = {
            "bufferView": len(self.views) - 1,
            "componentType": 5126,
            "count": int(data.shape[0]),
            "type": gltf_type,
        }
        if minmax:
            flat = data.reshape(data.shape[0], -1)
            acc["min"] = [float(v) for v in flat.min(axis=0)]
            acc["max"] = [float(v) for v in flat.max(axis=0)]
        self.accessors.append(acc)
        index = len(self.accessors) - 1
        self._dedupe[key] = index
        return index


def write_glb(clip: AnimationClip, skeleton: Skeleton) -> bytes:
    """Serialize the clip as a .glb whose nodes carry the skeleton hierarchy."""
    if not clip.channels:
        raise GltfError("clip has no channels to export")
    buf = _BufferBuilder()
    node_index = {j.joint_id: i for i, j in enumerate(skeleton.joints)}

    nodes = []
    for j in skeleton.joints:
        node: dict = {"name": j.joint_id}
        if np.any(j.rest_translation != 0.0):
            node["translation"] = [float(v) for v in j.rest_translation]
        if not np.array_equal(j.rest_rotation, quat.IDENTITY):
            w, x, y, z = (float(v) for v in j.rest_rotation)
            node["rotation"] = [x, y, z, w]
        nodes.append(node)
    for i, j in enumerate(skeleton.joints):
        if j.parent is not None:
            nodes[j.parent].setdefault("children", []).append(i)

    samplers = []
    channels = []
    for c in clip.channels:
        if c.joint_id not in node_index:
            raise GltfError(f"channel joint {c.joint_id} not in skeleton")
        t_acc = buf.add(c.times[:, None], "SCALAR", minmax=True)
        xyzw = np.column_stack([c.rotations[:, 1], c.rotations[:, 2],
                                c.rotations[:, 3], c.rotations[:, 0]])
        r_acc = buf.add(xyzw, "VEC4")
        samplers.append({"input": t_acc, "output": r_acc, "interpolation": "LINEAR"})
        channels.append({
            "sampler": len(samplers) - 1,
            "target": {"node": node_index[c.joint_id], "path": "rotation"},
        })
        if c.translations is not None:
            tr_acc = buf.add(c.translations, "VEC3")
            samplers.append({"input": t_acc, "output": tr_acc,
                             "interpolation": "LINEAR"})
            channels.append({
                "sampler": len(samplers) - 1,
                "target": {"node": node_index[c.joint_id], "path": "translation"},
            })

    doc = {
        "asset": {"version": "2.0", "generator": "storydance"},
        "scene": 0,
        "scenes": [{"nodes": [0]}],
        "nodes": nodes,
        "animations": [{
            "name": clip.name,
            "samplers": samplers,
            "channels": channels,
        }],
        "buffers": [{"byteLength": len(buf.blob)}],
        "bufferViews": buf.views,
        "accessors": buf.accessors,
    }
    return pack_glb(doc, bytes(buf.blob))


def pack_glb(doc: dict, blob: bytes) -> bytes:
    payload = json.dumps(doc, separators=(",", ":"), sort_keys=False).encode("utf-8")
    payload += b" " * ((4 - len(payload) % 4) % 4)
    blob = blob + b"\x00" * ((4 - len(blob) % 4) % 4)
    total = 12 + 8 + len(payload) + 8 + len(blob)
    out = bytearray()
    out += struct.pack("<III", GLB_MAGIC, 2, total)
    out += struct.pack("<II", len(payload), CHUNK_JSON)
    out += payload
    out += struct.pack("<II", len(blob), CHUNK_BIN)
    out += blob
    return bytes(out)

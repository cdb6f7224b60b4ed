"""Unit-quaternion math on numpy arrays.

Quaternions are float64 arrays with shape (..., 4) in (w, x, y, z) order.
Every function that returns rotations normalizes them and fixes the sign of
the hemisphere (w >= 0), so serialized values are deterministic under the
double cover.
"""
from __future__ import annotations

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

#: Tolerance on | ||q|| - 1 | accepted as "unit" by consumers of this module.
UNIT_TOL = 1e-6


class DegenerateMeanError(ValueError):
    """The component sum of the inputs is too close to zero to average."""


def normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n < 1e-12):
        raise ValueError("cannot normalize a near-zero quaternion")
    return q / n


def canonicalize(q: np.ndarray) -> np.ndarray:
    """Flip sign so w >= 0; ties on w == 0 break toward positive x, y, z."""
    q = np.asarray(q, dtype=np.float64)
    w = q[..., 0]
    flip = w < 0.0
    on_equator = w == 0.0
    if np.any(on_equator):
        x, y, z = q[..., 1], q[..., 2], q[..., 3]
        flip = flip | (on_equator & (x < 0.0))
        flip = flip | (on_equator & (x == 0.0) & (y < 0.0))
        flip = flip | (on_equator & (x == 0.0) & (y == 0.0) & (z < 0.0))
    return np.where(flip[..., None], -q, q)


def canonical_unit(q: np.ndarray) -> np.ndarray:
    return canonicalize(normalize(q))


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product, broadcasting over leading axes."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def conjugate(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def rotate_vector(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate 3-vectors v by unit quaternions q (broadcasting)."""
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    u = q[..., 1:]
    w = q[..., 0:1]
    t = 2.0 * np.cross(u, v)
    return v + w * t + np.cross(u, t)


def log_map(q: np.ndarray) -> np.ndarray:
    """Rotation vector (axis * angle, radians) of unit quaternions.

    The shorter representative is used, so the returned angle is in [0, pi].
    """
    q = np.asarray(q, dtype=np.float64)
    q = np.where(q[..., 0:1] < 0.0, -q, q)
    v = q[..., 1:]
    s = np.linalg.norm(v, axis=-1)
    w = np.clip(q[..., 0], -1.0, 1.0)
    half = np.arctan2(s, w)
    # sin(half) = s; angle/|v| = 2*half/s, with the small-angle limit 2.
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(s > 1e-12, 2.0 * half / np.where(s > 1e-12, s, 1.0), 2.0)
    return v * scale[..., None]


def exp_map(rv: np.ndarray) -> np.ndarray:
    """Unit quaternion for rotation vectors (axis * angle, radians)."""
    rv = np.asarray(rv, dtype=np.float64)
    angle = np.linalg.norm(rv, axis=-1)
    half = 0.5 * angle
    with np.errstate(invalid="ignore", divide="ignore"):
        k = np.where(angle > 1e-12, np.sin(half) / np.where(angle > 1e-12, angle, 1.0), 0.5)
    w = np.cos(half)
    xyz = rv * k[..., None]
    return np.concatenate([w[..., None], xyz], axis=-1)


def slerp(q0: np.ndarray, q1: np.ndarray, t) -> np.ndarray:
    """Shortest-arc spherical interpolation; t may broadcast, and may lie
    outside [0, 1] for geodesic extrapolation. Endpoints are returned exactly
    for scalar t == 0 or t == 1."""
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    if np.isscalar(t) or np.ndim(t) == 0:
        if t == 0.0:
            return canonicalize(q0.copy())
        if t == 1.0:
            return canonicalize(q1.copy())
    t = np.asarray(t, dtype=np.float64)
    rel = mul(conjugate(q0), q1)
    rv = log_map(rel)
    out = mul(q0, exp_map(t[..., None] * rv))
    return canonical_unit(out)


def angle_between(q0: np.ndarray, q1: np.ndarray) -> np.ndarray:
    """Geodesic rotation angle in radians, in [0, pi], sign-insensitive."""
    rel = mul(conjugate(normalize(q0)), normalize(q1))
    s = np.linalg.norm(rel[..., 1:], axis=-1)
    w = np.abs(rel[..., 0])
    return 2.0 * np.arctan2(s, w)


def scale_about(center: np.ndarray, q: np.ndarray, factor: float,
                max_angle: float = np.deg2rad(179.0)) -> np.ndarray:
    """Scale the geodesic offset of q from center by factor.

    factor 0 collapses to center, 1 is the identity map, > 1 extrapolates
    along the geodesic with the resulting angle clamped to max_angle.
    """
    center = np.asarray(center, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if factor == 1.0:
        return canonicalize(q.copy())
    rv = log_map(mul(conjugate(center), q))
    ang = np.linalg.norm(rv, axis=-1)
    scaled = factor * ang
    over = scaled > max_angle
    eff = np.where(over & (ang > 1e-12), max_angle / np.where(ang > 1e-12, ang, 1.0), factor)
    return canonical_unit(mul(center, exp_map(eff[..., None] * rv)))


def mirror_sagittal(q: np.ndarray) -> np.ndarray:
    """Reflect rotations across the sagittal (x-normal) plane:
    (w, x, y, z) -> (w, x, -y, -z)."""
    q = np.asarray(q, dtype=np.float64)
    return canonicalize(q * np.array([1.0, 1.0, -1.0, -1.0]))


def chordal_mean(qs: np.ndarray) -> np.ndarray:
    """Sign-aligned normalized component average of unit quaternions.

    Each quaternion is flipped to the hemisphere of the first entry before
    averaging, which keeps the result deterministic and well-defined for
    keyframe tracks that stay clear of 180-degree spreads.
    """
    qs = np.asarray(qs, dtype=np.float64)
    if qs.ndim == 1:
        qs = qs[None, :]
    if qs.shape[0] == 0:
        raise ValueError("mean of empty rotation set")
    signs = np.where(qs @ qs[0] < 0.0, -1.0, 1.0)
    m = np.mean(qs * signs[:, None], axis=0)
    n = np.linalg.norm(m)
    if n < 1e-8:
        raise DegenerateMeanError("rotation components cancel; mean undefined")
    return canonicalize(m / n)


def from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    return exp_map(axis * float(angle))


def is_unit(q: np.ndarray, tol: float = UNIT_TOL) -> bool:
    n = np.linalg.norm(np.asarray(q, dtype=np.float64), axis=-1)
    return bool(np.all(np.abs(n - 1.0) <= tol))

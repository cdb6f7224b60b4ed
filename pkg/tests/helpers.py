"""Shared fixture builders and independent oracles used across the suite.

Oracles here are deliberately written against the math, not the library
internals, so they stay meaningful as checks.
"""
from __future__ import annotations

import math

import numpy as np

from storydance.motion import AnimationClip, ClipChannel


def axis_quat(axis, angle_rad: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    h = 0.5 * angle_rad
    return np.concatenate([[math.cos(h)], axis * math.sin(h)])


def signed_axis_angle(q: np.ndarray, axis) -> float:
    """Signed rotation angle of q about the given (assumed) axis."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    s = float(np.dot(q[1:], axis))
    return 2.0 * math.atan2(s, float(q[0]))


def geodesic_angle(q0: np.ndarray, q1: np.ndarray) -> float:
    """Independent geodesic distance: angle of the relative rotation.

    Uses the 4D chord length, which stays accurate near zero where the
    acos-of-dot form loses half the mantissa.
    """
    chord = min(float(np.linalg.norm(q1 - q0)), float(np.linalg.norm(q1 + q0)))
    return 4.0 * math.asin(min(1.0, 0.5 * chord))


def single_axis_clip(angles_deg, rate: float = 30.0, axis=(1.0, 0.0, 0.0),
                     joint_id: str = "root", name: str = "fixture",
                     translations=None) -> AnimationClip:
    """Clip with one channel rotating about a fixed axis; one key per angle."""
    n = len(angles_deg)
    times = np.arange(n, dtype=np.float64) / rate
    rots = np.stack([axis_quat(axis, math.radians(a)) for a in angles_deg])
    chan = ClipChannel(joint_id=joint_id, times=times, rotations=rots,
                       translations=None if translations is None
                       else np.asarray(translations, dtype=np.float64))
    duration = times[-1] if n > 1 else 1.0 / rate
    return AnimationClip(name=name, duration=float(duration), sample_rate=rate,
                         channels=(chan,))


def sine_angles_deg(amplitude_deg: float, freq_hz: float, duration_s: float,
                    rate: float, phase: float = 0.0) -> np.ndarray:
    t = np.arange(int(round(duration_s * rate)) + 1) / rate
    return amplitude_deg * np.sin(2.0 * math.pi * freq_hz * t + phase)


def polyline_length(points: np.ndarray) -> float:
    """Arc length of a 3D polyline; oracle for path-scaling checks."""
    d = np.diff(np.asarray(points, dtype=np.float64), axis=0)
    return float(np.sum(np.linalg.norm(d, axis=1)))


def max_frame_step_rad(rotations: np.ndarray) -> float:
    """Largest geodesic angle between consecutive keys (finite differences)."""
    worst = 0.0
    for i in range(1, len(rotations)):
        worst = max(worst, geodesic_angle(rotations[i - 1], rotations[i]))
    return worst


def brute_force_geodesic_mean_angle(key_angles_rad, axis=(1.0, 0.0, 0.0),
                                    steps: int = 20001) -> float:
    """Grid-minimize the sum of squared geodesic distances over the axis.

    Independent of the library's chordal mean; used to pin its expected value
    for single-axis keyframe sets.
    """
    keys = [axis_quat(axis, a) for a in key_angles_rad]
    lo, hi = min(key_angles_rad), max(key_angles_rad)
    grid = np.linspace(lo, hi, steps)
    best_angle, best_cost = grid[0], float("inf")
    for theta in grid:
        cand = axis_quat(axis, theta)
        cost = sum(geodesic_angle(cand, k) ** 2 for k in keys)
        if cost < best_cost:
            best_cost, best_angle = cost, theta
    return float(best_angle)

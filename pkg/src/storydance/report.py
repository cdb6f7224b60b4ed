"""Render analysis figures and a delimited segment table for a performance.

Consumes the frames-json export, so reports can be produced for anything the
service or CLI emitted without recompiling.
"""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from . import quat  # noqa: E402

CONTINUITY_BUDGET_RAD = 0.05


def _frame_rotations(doc: dict) -> np.ndarray:
    frames = np.asarray(doc["frames"], dtype=np.float64)
    return frames[:, 3:].reshape(len(frames), -1, 4)


def _root_path(doc: dict) -> np.ndarray:
    frames = np.asarray(doc["frames"], dtype=np.float64)
    return frames[:, :3]


def angular_step_profile(doc: dict) -> np.ndarray:
    """Max per-joint geodesic step between consecutive frames, in radians."""
    rots = _frame_rotations(doc)
    steps = quat.angle_between(rots[:-1], rots[1:])
    return steps.max(axis=1)


def write_segments_csv(doc: dict, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "movement_id", "start_s", "end_s",
                         "frame_start", "frame_end"])
        for seg in doc["segments"]:
            writer.writerow([seg["index"], seg["movement_id"], seg["start"],
                             seg["end"], seg["frame_start"], seg["frame_end"]])


def plot_angular_speed(doc: dict, path: Path) -> None:
    steps = angular_step_profile(doc)
    rate = doc["rate"]
    t = (np.arange(len(steps)) + 1) / rate
    fig, ax = plt.subplots(figsize=(8, 3.2), dpi=120)
    ax.plot(t, steps, lw=0.9, color="#29577a")
    ax.axhline(CONTINUITY_BUDGET_RAD, color="#b0413e", ls="--", lw=0.8,
               label=f"continuity budget {CONTINUITY_BUDGET_RAD} rad/frame")
    for seg in doc["segments"][1:]:
        ax.axvline(seg["start"], color="0.6", ls=":", lw=0.8)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("max joint step [rad/frame]")
    ax.set_title("Inter-frame angular step")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_root_path(doc: dict, path: Path) -> None:
    pos = _root_path(doc)
    fig, ax = plt.subplots(figsize=(4.5, 4.5), dpi=120)
    sc = ax.scatter(pos[:, 0], pos[:, 2], c=np.arange(len(pos)) / doc["rate"],
                    s=4, cmap="viridis")
    ax.plot(pos[0, 0], pos[0, 2], "o", color="#b0413e", ms=7, label="start")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("z [m]")
    ax.set_title("Root path (top view)")
    ax.set_aspect("equal", adjustable="datalim")
    fig.colorbar(sc, ax=ax, label="time [s]", shrink=0.8)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_report(doc: dict, out_dir: Path | str,
                  stem: str = "performance") -> list[Path]:
    """Write segments CSV plus the two figures; returns the created paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{stem}_segments.csv",
             out / f"{stem}_angular_speed.png",
             out / f"{stem}_root_path.png"]
    write_segments_csv(doc, paths[0])
    plot_angular_speed(doc, paths[1])
    plot_root_path(doc, paths[2])
    return paths

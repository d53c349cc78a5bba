"""Odometry error metrics and trajectory export.

Drift follows the usual benchmark recipe: errors of subsegments starting
every ``stride`` frames and spanning 100 m to 800 m of ground-truth path,
normalized by segment length and averaged. The relative-pose metric is the
RMSE of per-step translation errors. Both compare relative motions only,
so they are invariant to a rigid transform applied to both trajectories.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import SE3, euler_to_rotation, relative, rotation_angle, rotation_to_euler

__all__ = [
    "EvaluationError",
    "SEGMENT_LENGTHS",
    "kitti_drift",
    "rpe_rmse",
    "write_trajectory_csv",
    "load_trajectory_csv",
    "write_trajectory_svg",
    "export_trajectory",
]

SEGMENT_LENGTHS = (100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0)


class EvaluationError(ValueError):
    """Trajectories unsuitable for the requested metric."""


def _path_distances(traj: Sequence[SE3]) -> np.ndarray:
    pos = np.stack([p.translation for p in traj])
    steps = np.linalg.norm(np.diff(pos, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def kitti_drift(
    gt: Sequence[SE3],
    pred: Sequence[SE3],
    lengths: Sequence[float] = SEGMENT_LENGTHS,
    stride: int = 10,
) -> tuple[float, float]:
    """(translation drift %, rotation drift in deg per 100 m).

    For every start frame on the stride grid and every target length, the
    segment ends at the first frame whose ground-truth path length reaches
    the target. The error transform between the ground-truth and predicted
    relative motions is normalized by the segment's ground-truth length.
    """
    if len(gt) != len(pred):
        raise EvaluationError(f"trajectory lengths differ: {len(gt)} vs {len(pred)}")
    if len(gt) < 2:
        raise EvaluationError("need at least two poses")
    dist = _path_distances(gt)
    t_errs: list[float] = []
    r_errs: list[float] = []
    for first in range(0, len(gt), stride):
        for target in lengths:
            last = int(np.searchsorted(dist, dist[first] + target, side="left"))
            if last >= len(gt):
                continue
            seg_len = dist[last] - dist[first]
            if seg_len <= 0:
                continue
            delta_gt = relative(gt[first], gt[last])
            delta_pred = relative(pred[first], pred[last])
            error = relative(delta_gt, delta_pred)
            t_errs.append(float(np.linalg.norm(error.translation)) / seg_len)
            r_errs.append(rotation_angle(error.rotation) / seg_len)
    if not t_errs:
        raise EvaluationError(
            "trajectory too short: no segment reaches "
            f"{min(lengths):g} m (max available length {dist[-1]:.3f} m)"
        )
    t_rel = float(np.mean(t_errs)) * 100.0
    r_rel = float(np.mean(r_errs)) * (180.0 / np.pi) * 100.0
    return t_rel, r_rel


def rpe_rmse(gt: Sequence[SE3], pred: Sequence[SE3], delta: int = 1) -> float:
    """RMSE of relative-pose translation errors over a frame offset."""
    if delta < 1:
        raise EvaluationError(f"delta must be >= 1, got {delta}")
    if len(gt) != len(pred):
        raise EvaluationError(f"trajectory lengths differ: {len(gt)} vs {len(pred)}")
    if len(gt) < delta + 1:
        raise EvaluationError(f"need at least {delta + 1} poses, got {len(gt)}")
    sq = 0.0
    n = len(gt) - delta
    for i in range(n):
        delta_gt = relative(gt[i], gt[i + delta])
        delta_pred = relative(pred[i], pred[i + delta])
        err = relative(delta_gt, delta_pred).translation
        sq += float(err @ err)
    return float(np.sqrt(sq / n))


# -- trajectory files ----------------------------------------------------


def write_trajectory_csv(traj: Sequence[SE3], path) -> None:
    """One line per pose: index,x,y,z,roll,pitch,yaw (9 significant digits)."""
    lines = []
    for i, pose in enumerate(traj):
        euler = rotation_to_euler(pose.rotation)
        x, y, z = pose.translation
        # + 0.0 turns IEEE negative zero into plain 0
        fields = [str(i)] + [f"{v + 0.0:.9g}" for v in (x, y, z, *euler)]
        lines.append(",".join(fields))
    Path(path).write_text("\n".join(lines) + "\n")


def load_trajectory_csv(path) -> list[SE3]:
    from .datasets import DataError

    poses = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 7:
            raise DataError(f"{path}:{lineno}: expected 7 comma-separated fields, got {len(fields)}")
        try:
            vals = [float(f) for f in fields[1:]]
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if not all(np.isfinite(v) for v in vals):
            raise DataError(f"{path}:{lineno}: non-finite value")
        poses.append(SE3(euler_to_rotation(vals[3:6]), np.array(vals[0:3])))
    if not poses:
        raise DataError(f"{path}: no trajectory entries found")
    return poses


# -- SVG plotting ---------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def _tick_values(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** np.floor(np.log10(raw))
    step = float(min(s for s in (mag, 2 * mag, 5 * mag, 10 * mag) if s >= raw))
    first = np.ceil(lo / step) * step
    return [float(first + i * step) for i in range(int((hi - first) / step) + 1)]


def write_trajectory_svg(
    trajectories: Sequence[Sequence[SE3]],
    labels: Sequence[str],
    path,
    size: int = 640,
) -> None:
    """Top-down (x, y) overlay of one or more trajectories, with axes."""
    if len(trajectories) != len(labels):
        raise EvaluationError("one label per trajectory required")
    if not trajectories:
        raise EvaluationError("nothing to plot")
    margin = 60.0
    pts = np.concatenate([np.stack([p.translation[:2] for p in t]) for t in trajectories])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    scale = (size - 2 * margin) / span.max()

    def sx(x):
        return margin + (x - lo[0]) * scale

    def sy(y):  # svg y grows downward
        return size - margin - (y - lo[1]) * scale

    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=str(size),
        height=str(size),
        viewBox=f"0 0 {size} {size}",
    )
    ET.SubElement(svg, "rect", x="0", y="0", width=str(size), height=str(size), fill="white")
    axis_style = {"stroke": "#333333", "stroke-width": "1"}
    x0, y0 = margin, size - margin
    x1, y1 = size - margin, margin
    ET.SubElement(svg, "line", x1=str(x0), y1=str(y0), x2=str(x1), y2=str(y0), **axis_style)
    ET.SubElement(svg, "line", x1=str(x0), y1=str(y0), x2=str(x0), y2=str(y1), **axis_style)
    for tx in _tick_values(lo[0], lo[0] + span.max()):
        px = sx(tx)
        if px > size - margin + 1:
            continue
        ET.SubElement(svg, "line", x1=str(px), y1=str(y0), x2=str(px), y2=str(y0 + 5), **axis_style)
        label = ET.SubElement(svg, "text", x=str(px), y=str(y0 + 18))
        label.set("font-size", "11")
        label.set("text-anchor", "middle")
        label.text = f"{tx:g}"
    for ty in _tick_values(lo[1], lo[1] + span.max()):
        py = sy(ty)
        if py < margin - 1:
            continue
        ET.SubElement(svg, "line", x1=str(x0 - 5), y1=str(py), x2=str(x0), y2=str(py), **axis_style)
        label = ET.SubElement(svg, "text", x=str(x0 - 8), y=str(py + 4))
        label.set("font-size", "11")
        label.set("text-anchor", "end")
        label.text = f"{ty:g}"
    for i, (traj, name) in enumerate(zip(trajectories, labels)):
        color = _COLORS[i % len(_COLORS)]
        points = " ".join(f"{sx(p.translation[0]):.2f},{sy(p.translation[1]):.2f}" for p in traj)
        ET.SubElement(
            svg, "polyline", points=points, fill="none", stroke=color
        ).set("stroke-width", "1.5")
        ly = margin + 18 * i
        ET.SubElement(
            svg, "line", x1=str(size - margin - 110), y1=str(ly), x2=str(size - margin - 90),
            y2=str(ly), stroke=color
        ).set("stroke-width", "2")
        text = ET.SubElement(svg, "text", x=str(size - margin - 84), y=str(ly + 4))
        text.set("font-size", "12")
        text.text = str(name)
    ET.ElementTree(svg).write(path, encoding="utf-8", xml_declaration=True)


def export_trajectory(traj: Sequence[SE3], path, fmt: str = "csv", label: str = "trajectory") -> None:
    """Write a trajectory as CSV or as a top-down SVG plot."""
    if fmt == "csv":
        write_trajectory_csv(traj, path)
    elif fmt == "svg":
        write_trajectory_svg([traj], [label], path)
    else:
        raise EvaluationError(f"unknown export format {fmt!r}")

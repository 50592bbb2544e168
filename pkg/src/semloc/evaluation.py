"""Trajectory files and estimated-vs-ground-truth metrics.

Trajectory files are plain text: '#'-prefixed header lines, then one pose
per line as "t x y theta"; estimated trajectories append the row-major 3x3
covariance, the effective sample size and the number of injected particles.
"""

from __future__ import annotations

import math

import numpy as np

from .detlog import read_detection_log
from .errors import EmptyOverlapError, ParseError


class EvalMetrics:
    def __init__(self, ate_rmse, convergence_time, success, final_error):
        self.ate_rmse = float(ate_rmse)
        self.convergence_time = None if convergence_time is None else float(convergence_time)
        self.success = bool(success)
        self.final_error = float(final_error)

    def __repr__(self):
        return (
            f"EvalMetrics(ate_rmse={self.ate_rmse:.4f}, convergence_time={self.convergence_time}, "
            f"success={self.success}, final_error={self.final_error:.4f})"
        )


def _as_array(trajectory) -> np.ndarray:
    """Accept [(t, Pose2D)], StepRecord lists, or (k, >=4) arrays."""
    if isinstance(trajectory, np.ndarray):
        return trajectory[:, :4].astype(float)
    rows = []
    for entry in trajectory:
        if isinstance(entry, tuple):
            t, pose = entry
            rows.append((float(t), pose.x, pose.y, pose.theta))
        else:
            rows.append((float(entry.t), float(entry.x), float(entry.y), float(entry.theta)))
    if not rows:
        return np.empty((0, 4))
    return np.asarray(rows, dtype=float)


def align_by_time(est, gt) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nearest-neighbor timestamp association within half the gt time step.

    Returns (times, position errors, est/gt index pairs are folded away);
    raises EmptyOverlapError when nothing aligns.
    """
    est = _as_array(est)
    gt = _as_array(gt)
    if est.shape[0] == 0 or gt.shape[0] == 0:
        raise EmptyOverlapError("empty trajectory")
    gt_t = gt[:, 0]
    dt = float(np.median(np.diff(gt_t))) if gt_t.size > 1 else math.inf
    tol = dt / 2.0 + 1e-9
    idx = np.searchsorted(gt_t, est[:, 0])
    idx = np.clip(idx, 0, gt_t.size - 1)
    left = np.maximum(idx - 1, 0)
    pick = np.where(np.abs(gt_t[left] - est[:, 0]) <= np.abs(gt_t[idx] - est[:, 0]), left, idx)
    ok = np.abs(gt_t[pick] - est[:, 0]) <= tol
    if not ok.any():
        raise EmptyOverlapError("no time-aligned pose pairs")
    e = est[ok]
    g = gt[pick[ok]]
    errors = np.hypot(e[:, 1] - g[:, 1], e[:, 2] - g[:, 2])
    return e[:, 0], errors, g


def evaluate(est, gt, success_radius: float, hold: float) -> EvalMetrics:
    """ATE plus a convergence/success verdict.

    convergence_time is the first aligned timestamp after which the position
    error stays below success_radius through the end of the run, provided at
    least `hold` seconds remain at that point; otherwise None. success
    requires a convergence time and a final error below the radius.
    """
    times, errors, _ = align_by_time(est, gt)
    ate = float(np.sqrt(np.mean(np.square(errors))))
    final_error = float(errors[-1])

    bad = np.flatnonzero(errors >= success_radius)
    if bad.size == 0:
        candidate = 0
    elif bad[-1] + 1 < errors.size:
        candidate = int(bad[-1] + 1)
    else:
        candidate = None
    convergence = None
    if candidate is not None and times[-1] - times[candidate] >= hold:
        convergence = float(times[candidate])
    success = convergence is not None and final_error < success_radius
    return EvalMetrics(ate, convergence, success, final_error)


def write_trajectory(path, records, header: dict | None = None) -> None:
    """Write StepRecords (or (t, Pose2D) tuples) with optional '#' header."""
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(header or {}):
            fh.write(f"# {key} = {header[key]}\n")
        for rec in records:
            if isinstance(rec, tuple):
                t, pose = rec
                fh.write(f"{t!r} {pose.x!r} {pose.y!r} {pose.theta!r}\n")
            else:
                cov = " ".join(repr(float(v)) for v in np.asarray(rec.cov).ravel())
                fh.write(
                    f"{rec.t!r} {rec.x!r} {rec.y!r} {rec.theta!r} {cov} {rec.ess!r} {rec.n_injected}\n"
                )


def read_trajectory(path) -> np.ndarray:
    """Read '# comment' + 't x y theta [...]' lines into a (k, 4) array."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 4:
                raise ParseError(f"trajectory line {lineno} needs at least t x y theta")
            try:
                rows.append([float(parts[0]), float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError as exc:
                raise ParseError(f"bad trajectory line {lineno}: {exc}") from exc
    return np.asarray(rows, dtype=float).reshape(-1, 4)


def read_reference(path) -> np.ndarray:
    """Ground truth from either a trajectory file or a detection log."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
    if first.startswith("{"):
        frames = read_detection_log(path)
        rows = [
            (f.t, f.gt_pose.x, f.gt_pose.y, f.gt_pose.theta) for f in frames if f.gt_pose is not None
        ]
        if not rows:
            raise ParseError("detection log has no ground-truth poses")
        return np.asarray(rows, dtype=float)
    return read_trajectory(path)

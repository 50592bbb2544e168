"""Detection log: the replay interface between simulator and localizer.

Newline-delimited JSON. The first line is a header {"detlog_version": 1,
"scan_angles": [...], "range_max": ...}; each following line is one frame
{t, odometry?, scan?, objects?, texts?, gt}. Ground-truth poses ride along
for evaluation only -- the localizer never reads them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError
from .geometry import Pose2D
from .sensor_models import ObjectDetection, RangeScan, TextDetection

DETLOG_VERSION = 1


@dataclass
class OdometryDelta:
    """Odometry decomposition: rotate rot1, translate trans, rotate rot2."""

    rot1: float
    trans: float
    rot2: float


@dataclass
class LogFrame:
    t: float
    odometry: OdometryDelta | None = None
    scan: RangeScan | None = None
    object_detections: list[ObjectDetection] = field(default_factory=list)
    text_detections: list[TextDetection] = field(default_factory=list)
    gt_pose: Pose2D | None = None

    def is_empty(self) -> bool:
        return (
            self.odometry is None
            and self.scan is None
            and not self.object_detections
            and not self.text_detections
        )


def write_detection_log(path, frames, scan_angles=None, range_max=None) -> None:
    header = {"detlog_version": DETLOG_VERSION}
    if scan_angles is not None:
        header["scan_angles"] = [float(a) for a in scan_angles]
        header["range_max"] = float(range_max)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for frame in frames:
            rec = {"t": frame.t}
            if frame.odometry is not None:
                o = frame.odometry
                rec["odometry"] = [o.rot1, o.trans, o.rot2]
            if frame.scan is not None:
                rec["scan"] = [float(r) for r in frame.scan.ranges]
            if frame.object_detections:
                rec["objects"] = [
                    {"class": d.class_label, "bearing": d.bearing, "confidence": d.confidence}
                    for d in frame.object_detections
                ]
            if frame.text_detections:
                rec["texts"] = [{"raw": d.raw_text, "confidence": d.confidence} for d in frame.text_detections]
            if frame.gt_pose is not None:
                rec["gt"] = [frame.gt_pose.x, frame.gt_pose.y, frame.gt_pose.theta]
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_detection_log(path) -> list[LogFrame]:
    frames: list[LogFrame] = []
    scan_angles = None
    range_max = None
    last_t = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad log line {lineno}: {exc}") from exc
            if lineno == 1:
                if rec.get("detlog_version") != DETLOG_VERSION:
                    raise ParseError(f"unsupported detlog_version {rec.get('detlog_version')!r}")
                scan_angles = np.asarray(rec.get("scan_angles", []), dtype=float)
                range_max = rec.get("range_max")
                continue
            try:
                frame = LogFrame(t=float(rec["t"]))
                if "odometry" in rec:
                    r1, tr, r2 = rec["odometry"]
                    frame.odometry = OdometryDelta(float(r1), float(tr), float(r2))
                if "scan" in rec:
                    if range_max is None:
                        raise ParseError("log frame carries a scan but the header has no scan spec")
                    frame.scan = RangeScan(angles=scan_angles, ranges=rec["scan"], range_max=float(range_max))
                for od in rec.get("objects", []):
                    frame.object_detections.append(
                        ObjectDetection(od["class"], float(od["bearing"]), float(od.get("confidence", 1.0)))
                    )
                for td in rec.get("texts", []):
                    frame.text_detections.append(TextDetection(td["raw"], float(td.get("confidence", 1.0))))
                if "gt" in rec:
                    gx, gy, gth = rec["gt"]
                    frame.gt_pose = Pose2D(float(gx), float(gy), float(gth))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad log frame at line {lineno}: {exc}") from exc
            if last_t is not None and frame.t <= last_t:
                raise ParseError(f"log timestamps must be strictly increasing (line {lineno})")
            last_t = frame.t
            frames.append(frame)
    return frames

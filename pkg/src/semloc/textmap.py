"""Text likelihood map construction.

Posed text observations are accumulated into per-tag 2D histograms of
attempts and successes; cells whose detection rate clears the threshold are
enclosed in the tightest axis-aligned bounding box of their centers. The
likelihood inside the box is uniform by design -- no per-cell shading.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import ParseError, ValidationError
from .geometry import Pose2D, Rect
from .semmap import AbstractSemanticMap, TextBox, validate_map


@dataclass(frozen=True)
class PosedTextObservation:
    pose: Pose2D
    attempted_tags: tuple[str, ...]
    detected_tags: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "attempted_tags", tuple(self.attempted_tags))
        object.__setattr__(self, "detected_tags", tuple(self.detected_tags))
        missing = set(self.detected_tags) - set(self.attempted_tags)
        if missing:
            raise ValueError(f"detected tags {sorted(missing)} were never attempted")


@dataclass
class TagHistogram:
    """Sparse 2D histogram over square cells anchored at the world origin.

    counts maps (col, row) -> [attempts, successes] with
    col = floor(x / resolution), row = floor(y / resolution).
    """

    tag: str
    resolution: float
    counts: dict = field(default_factory=dict)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (math.floor(x / self.resolution), math.floor(y / self.resolution))

    def cell_center(self, col: int, row: int) -> tuple[float, float]:
        return ((col + 0.5) * self.resolution, (row + 0.5) * self.resolution)

    def add(self, x: float, y: float, detected: bool) -> None:
        key = self.cell_of(x, y)
        entry = self.counts.setdefault(key, [0, 0])
        entry[0] += 1
        if detected:
            entry[1] += 1


def accumulate(observations, hist_resolution: float = 0.25) -> dict[str, TagHistogram]:
    """Build per-tag attempt/success histograms from an observation stream.

    Pure counting, so the result is independent of observation order and
    shards can be accumulated separately and summed.
    """
    if hist_resolution <= 0.0:
        raise ValueError("hist_resolution must be > 0")
    hists: dict[str, TagHistogram] = {}
    for obs in observations:
        detected = set(obs.detected_tags)
        for tag in obs.attempted_tags:
            hist = hists.setdefault(tag, TagHistogram(tag=tag, resolution=hist_resolution))
            hist.add(obs.pose.x, obs.pose.y, tag in detected)
    return hists


def build_text_box(hist: TagHistogram, tau: float = 0.5, min_attempts: int = 3) -> TextBox | None:
    """Tightest box around cell centers whose detection rate clears tau.

    A cell qualifies when attempts >= min_attempts and
    successes / attempts >= tau. Returns None when nothing qualifies;
    support_count records how many cells back the box.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must lie in (0, 1]")
    if min_attempts < 1:
        raise ValueError("min_attempts must be >= 1")
    xs = []
    ys = []
    count = 0
    for (col, row), (attempts, successes) in hist.counts.items():
        if attempts >= min_attempts and successes / attempts >= tau:
            cx, cy = hist.cell_center(col, row)
            xs.append(cx)
            ys.append(cy)
            count += 1
    if count == 0:
        return None
    return TextBox(
        tag=hist.tag,
        rect=Rect(min(xs), min(ys), max(xs), max(ys)),
        support_count=count,
    )


def merge_into_map(semmap: AbstractSemanticMap, boxes) -> AbstractSemanticMap:
    """New map with the given text boxes replacing same-tag entries.

    Tags not present yet are appended in input order. Duplicate tags in the
    input are rejected before any merging happens.
    """
    boxes = list(boxes)
    tags = [b.tag for b in boxes]
    if len(set(tags)) != len(tags):
        raise ValueError("duplicate tags in text boxes to merge")
    incoming = {b.tag: b for b in boxes}
    merged = [incoming.pop(b.tag, b) for b in semmap.text_boxes]
    merged.extend(b for b in boxes if b.tag in incoming)
    out = semmap.with_text_boxes(merged)
    violations = validate_map(out)
    if violations:
        raise ValidationError(violations)
    return out


def read_observation_log(path) -> list[PosedTextObservation]:
    """Read newline-delimited observation records.

    Each line is a JSON object {t, x, y, theta, attempted: [...], detected: [...]}.
    """
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                obs = PosedTextObservation(
                    pose=Pose2D(float(rec["x"]), float(rec["y"]), float(rec.get("theta", 0.0))),
                    attempted_tags=tuple(rec["attempted"]),
                    detected_tags=tuple(rec["detected"]),
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise ParseError(f"bad observation record at line {lineno}: {exc}") from exc
            out.append(obs)
    return out


def write_observation_log(path, observations) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for obs in observations:
            fh.write(
                json.dumps(
                    {
                        "x": obs.pose.x,
                        "y": obs.pose.y,
                        "theta": obs.pose.theta,
                        "attempted": list(obs.attempted_tags),
                        "detected": list(obs.detected_tags),
                    },
                    sort_keys=True,
                )
                + "\n"
            )

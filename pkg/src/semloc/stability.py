"""Semantic class stability from multi-session object observations.

Instances of a class are associated between consecutive sessions by greedy
nearest-neighbor matching; a matched pair that traveled farther than
delta_move counts as a move. A class's stability score is the fraction of
cross-session matches that stayed put -- long-lasting classes score near 1
and belong in the map, transient ones near 0 and should be left out.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import ParseError, TooFewSessionsError

MATCH_STAYED = "stayed"
MATCH_MOVED = "moved"
APPEARED = "appeared"
DISAPPEARED = "disappeared"


@dataclass(frozen=True)
class Instance:
    class_label: str
    x: float
    y: float
    evidence: int = 1  # detections backing this instance; metadata only


@dataclass
class SessionObservation:
    session_id: int
    instances: list[Instance] = field(default_factory=list)


@dataclass(frozen=True)
class Association:
    kind: str  # stayed | moved | appeared | disappeared
    class_label: str
    prev_index: int | None
    curr_index: int | None
    distance: float | None


@dataclass
class ClassStability:
    observations: int  # matched pairs over all transitions
    moves: int

    @property
    def score(self) -> float:
        return 1.0 - self.moves / self.observations


@dataclass
class StabilityReport:
    per_class: dict[str, ClassStability]
    delta_move: float

    def score(self, class_label: str) -> float | None:
        entry = self.per_class.get(class_label)
        if entry is None or entry.observations == 0:
            return None
        return entry.score


def associate_instances(
    prev: SessionObservation, curr: SessionObservation, delta_move: float
) -> list[Association]:
    """Greedy per-class nearest-neighbor association between two sessions.

    Candidate pairs are taken in ascending distance order, ties broken by
    (prev index, curr index), so instance order within a session never
    changes the outcome. Unmatched instances appear/disappear rather than
    count as moves -- an occluded object is not a moved object.
    """
    if delta_move <= 0.0:
        raise ValueError("delta_move must be > 0")
    labels = {i.class_label for i in prev.instances} | {i.class_label for i in curr.instances}
    out: list[Association] = []
    for label in sorted(labels):
        p_idx = [i for i, inst in enumerate(prev.instances) if inst.class_label == label]
        c_idx = [j for j, inst in enumerate(curr.instances) if inst.class_label == label]
        pairs = []
        for i in p_idx:
            pi = prev.instances[i]
            for j in c_idx:
                cj = curr.instances[j]
                pairs.append((math.hypot(pi.x - cj.x, pi.y - cj.y), i, j))
        pairs.sort()
        used_p = set()
        used_c = set()
        for dist, i, j in pairs:
            if i in used_p or j in used_c:
                continue
            used_p.add(i)
            used_c.add(j)
            kind = MATCH_STAYED if dist <= delta_move else MATCH_MOVED
            out.append(Association(kind, label, i, j, dist))
        for i in p_idx:
            if i not in used_p:
                out.append(Association(DISAPPEARED, label, i, None, None))
        for j in c_idx:
            if j not in used_c:
                out.append(Association(APPEARED, label, None, j, None))
    return out


def stability_scores(sessions, delta_move: float = 0.5) -> StabilityReport:
    """Accumulate per-class matched/moved counts over consecutive sessions.

    Classes that never produce a cross-session match are absent from the
    report (their score is undefined, not zero).
    """
    sessions = sorted(sessions, key=lambda s: s.session_id)
    if len(sessions) < 2:
        raise TooFewSessionsError("stability analysis needs at least 2 sessions")
    per_class: dict[str, ClassStability] = {}
    for prev, curr in zip(sessions, sessions[1:]):
        for assoc in associate_instances(prev, curr, delta_move):
            if assoc.kind not in (MATCH_STAYED, MATCH_MOVED):
                continue
            entry = per_class.setdefault(assoc.class_label, ClassStability(0, 0))
            entry.observations += 1
            if assoc.kind == MATCH_MOVED:
                entry.moves += 1
    return StabilityReport(per_class=per_class, delta_move=delta_move)


def select_stable_classes(report: StabilityReport, threshold: float) -> list[str]:
    """Classes worth keeping in a long-term map: score >= threshold with at
    least 3 matched observations; sorted by score desc, then name."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    picked = [
        (label, entry.score)
        for label, entry in report.per_class.items()
        if entry.observations >= 3 and entry.score >= threshold
    ]
    picked.sort(key=lambda ls: (-ls[1], ls[0]))
    return [label for label, _ in picked]


def read_session_log(path) -> list[SessionObservation]:
    """Read newline-delimited {session, class, x, y[, count]} records."""
    sessions: dict[int, SessionObservation] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                sid = int(rec["session"])
                inst = Instance(
                    class_label=str(rec["class"]),
                    x=float(rec["x"]),
                    y=float(rec["y"]),
                    evidence=int(rec.get("count", 1)),
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise ParseError(f"bad session record at line {lineno}: {exc}") from exc
            sessions.setdefault(sid, SessionObservation(session_id=sid)).instances.append(inst)
    return [sessions[sid] for sid in sorted(sessions)]


def write_session_log(path, sessions) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for session in sorted(sessions, key=lambda s: s.session_id):
            for inst in session.instances:
                fh.write(
                    json.dumps(
                        {
                            "session": session.session_id,
                            "class": inst.class_label,
                            "x": inst.x,
                            "y": inst.y,
                            "count": inst.evidence,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )


def report_to_document(report: StabilityReport) -> dict:
    return {
        "delta_move": report.delta_move,
        "classes": {
            label: {
                "observations": entry.observations,
                "moves": entry.moves,
                "score": entry.score,
            }
            for label, entry in sorted(report.per_class.items())
        },
    }


def format_report_table(report: StabilityReport) -> str:
    lines = [f"{'class':<16} {'observations':>12} {'moves':>8} {'score':>8}"]
    for label, entry in sorted(report.per_class.items(), key=lambda kv: (-kv[1].score, kv[0])):
        lines.append(f"{label:<16} {entry.observations:>12d} {entry.moves:>8d} {entry.score:>8.3f}")
    return "\n".join(lines)

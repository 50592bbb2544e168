"""Abstract semantic map: occupancy grid overlaid with semantic object
rectangles, room segmentation, text likelihood boxes and optional per-class
stability scores.

Maps are immutable after construction; edits build a new map. validate_map is
the single gatekeeper for every model invariant -- constructors stay
permissive so that loaders can report violations as data instead of crashing.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Rect
from .grid import FREE, OCCUPIED, UNKNOWN, OccupancyGrid

ROOM_OVERLAP_TOLERANCE = 1e-9  # m^2


@dataclass(frozen=True)
class SemanticObject:
    id: str
    class_label: str
    rect: Rect


@dataclass(frozen=True)
class Room:
    id: str
    rects: tuple[Rect, ...]  # rect_union covering the room footprint
    category: str
    name: str | None = None  # text tag on the door sign, if any
    object_ids: tuple[str, ...] = ()

    def contains(self, x: float, y: float) -> bool:
        return any(r.contains(x, y) for r in self.rects)

    @property
    def area(self) -> float:
        return sum(r.area for r in self.rects)


@dataclass(frozen=True)
class TextBox:
    tag: str
    rect: Rect
    support_count: int = 0  # qualifying histogram cells; 0 for manual annotation


@dataclass(frozen=True)
class Violation:
    rule: str
    entities: tuple[str, ...]
    message: str

    def __str__(self):
        who = ",".join(self.entities)
        return f"{self.rule} [{who}]: {self.message}"


@dataclass(frozen=True)
class AbstractSemanticMap:
    grid: OccupancyGrid
    objects: tuple[SemanticObject, ...] = ()
    rooms: tuple[Room, ...] = ()
    text_boxes: tuple[TextBox, ...] = ()
    class_stability: dict[str, float] | None = None
    floorplan_image: str | None = None  # editor backdrop, opaque to the core

    _object_index: dict = field(default=None, repr=False, compare=False)

    def object_by_id(self, object_id: str) -> SemanticObject | None:
        if self._object_index is None:
            object.__setattr__(self, "_object_index", {o.id: o for o in self.objects})
        return self._object_index.get(object_id)

    def objects_of_class(self, class_label: str) -> list[SemanticObject]:
        """All objects with the given class, in stable order by id."""
        return sorted((o for o in self.objects if o.class_label == class_label), key=lambda o: o.id)

    def room_containing(self, x: float, y: float) -> Room | None:
        """The room whose rect_union contains the point, or None.

        Boundary points can touch several rooms; the one with the
        lexicographically smallest id wins, which keeps the answer
        deterministic.
        """
        hit = None
        for room in self.rooms:
            if room.contains(x, y) and (hit is None or room.id < hit.id):
                hit = room
        return hit

    def text_box(self, tag: str) -> TextBox | None:
        for box in self.text_boxes:
            if box.tag == tag:
                return box
        return None

    def rooms_of_category(self, category: str) -> list[Room]:
        return sorted((r for r in self.rooms if r.category == category), key=lambda r: r.id)

    def with_text_boxes(self, text_boxes) -> "AbstractSemanticMap":
        return replace(self, text_boxes=tuple(text_boxes), _object_index=None)

    def with_objects(self, objects) -> "AbstractSemanticMap":
        return replace(self, objects=tuple(objects), _object_index=None)

    def with_class_stability(self, scores: dict[str, float]) -> "AbstractSemanticMap":
        return replace(self, class_stability=dict(scores), _object_index=None)


def validate_map(semmap: AbstractSemanticMap) -> list[Violation]:
    """Check every model invariant; violations are data, not errors."""
    out: list[Violation] = []
    grid = semmap.grid

    if not grid.resolution > 0.0:
        out.append(Violation("grid.resolution_positive", ("grid",), f"resolution {grid.resolution} must be > 0"))
    bad = ~np.isin(grid.cells, (FREE, OCCUPIED, UNKNOWN))
    if bad.any():
        out.append(Violation("grid.cell_values", ("grid",), "cells must be FREE, OCCUPIED or UNKNOWN"))
    elif not (grid.cells == FREE).any():
        out.append(Violation("grid.has_free_cell", ("grid",), "map has no FREE cell"))

    seen = set()
    for obj in semmap.objects:
        if obj.id in seen:
            out.append(Violation("object.id_unique", (obj.id,), "duplicate object id"))
        seen.add(obj.id)
        if not obj.class_label:
            out.append(Violation("object.class_label_nonempty", (obj.id,), "object class_label is empty"))
        if not (obj.rect.x_min < obj.rect.x_max and obj.rect.y_min < obj.rect.y_max):
            out.append(
                Violation(
                    "object.rect_nondegenerate",
                    (obj.id,),
                    f"object rect must satisfy x_min < x_max and y_min < y_max, got {obj.rect.as_tuple()}",
                )
            )

    seen_rooms = set()
    for room in semmap.rooms:
        if room.id in seen_rooms:
            out.append(Violation("room.id_unique", (room.id,), "duplicate room id"))
        seen_rooms.add(room.id)
        if not room.rects:
            out.append(Violation("room.rect_nondegenerate", (room.id,), "room has no rectangles"))
        for r in room.rects:
            if not (r.x_min < r.x_max and r.y_min < r.y_max):
                out.append(Violation("room.rect_nondegenerate", (room.id,), f"degenerate room rect {r.as_tuple()}"))
        for oid in room.object_ids:
            obj = semmap.object_by_id(oid)
            if obj is None:
                out.append(Violation("room.object_ids_resolve", (room.id, oid), "object id does not resolve"))
            elif not room.contains(*obj.rect.center):
                out.append(
                    Violation(
                        "room.object_center_inside",
                        (room.id, oid),
                        "object rectangle center lies outside the room",
                    )
                )

    rooms = semmap.rooms
    for i in range(len(rooms)):
        for j in range(i + 1, len(rooms)):
            area = sum(ra.intersection_area(rb) for ra in rooms[i].rects for rb in rooms[j].rects)
            if area > ROOM_OVERLAP_TOLERANCE:
                out.append(
                    Violation(
                        "room.no_overlap",
                        (rooms[i].id, rooms[j].id),
                        f"rooms overlap by {area:.3g} m^2",
                    )
                )

    seen_tags = set()
    for box in semmap.text_boxes:
        if box.tag in seen_tags:
            out.append(Violation("textbox.tag_unique", (box.tag,), "duplicate text box tag"))
        seen_tags.add(box.tag)
        if not (box.rect.x_min <= box.rect.x_max and box.rect.y_min <= box.rect.y_max):
            out.append(Violation("textbox.rect_ordered", (box.tag,), f"inverted text box rect {box.rect.as_tuple()}"))
        if box.support_count < 0:
            out.append(Violation("textbox.support_count_nonnegative", (box.tag,), "negative support_count"))

    for room in semmap.rooms:
        if room.name is not None:
            matches = [b.tag for b in semmap.text_boxes if b.tag == room.name]
            if len(matches) > 1:
                out.append(
                    Violation(
                        "room.name_matches_at_most_one_textbox",
                        (room.id, room.name),
                        "room name matches multiple text boxes",
                    )
                )

    if semmap.class_stability is not None:
        for label, score in semmap.class_stability.items():
            if not (0.0 <= float(score) <= 1.0):
                out.append(
                    Violation("map.class_stability_range", (label,), f"stability score {score} outside [0, 1]")
                )

    return out

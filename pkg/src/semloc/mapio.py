"""Map document serialization.

A map is a single UTF-8 JSON file with a "semmap_version": 1 field. Grid
cells are run-length encoded (pairs of bytes: value, run length 1..255, cells
row-major from row 0) and base64-wrapped. Lengths are meters, angles radians.
Saving is canonical (sorted keys, fixed indentation) so load+save round-trips
are byte-identical.
"""

from __future__ import annotations

import base64
import binascii
import json

import numpy as np

from .errors import ParseError, ValidationError
from .geometry import Rect
from .grid import OccupancyGrid
from .semmap import AbstractSemanticMap, Room, SemanticObject, TextBox, validate_map

SEMMAP_VERSION = 1


def rle_encode(cells: np.ndarray) -> bytes:
    """Run-length encode a flat row-major cell array as (value, count) byte pairs."""
    flat = np.asarray(cells, dtype=np.uint8).ravel()
    out = bytearray()
    n = flat.size
    if n:
        breaks = np.flatnonzero(np.diff(flat)) + 1
        starts = np.concatenate(([0], breaks))
        ends = np.concatenate((breaks, [n]))
        for s, e in zip(starts, ends):
            value = int(flat[s])
            run = int(e - s)
            while run > 255:
                out.append(value)
                out.append(255)
                run -= 255
            out.append(value)
            out.append(run)
    return bytes(out)


def rle_decode(blob: bytes, expected: int | None = None) -> np.ndarray:
    if len(blob) % 2 != 0:
        raise ParseError("RLE stream has odd length")
    pairs = np.frombuffer(blob, dtype=np.uint8).reshape(-1, 2)
    if pairs.size and (pairs[:, 1] == 0).any():
        raise ParseError("RLE run length of zero")
    flat = np.repeat(pairs[:, 0], pairs[:, 1])
    if expected is not None and flat.size != expected:
        raise ParseError(f"RLE decodes to {flat.size} cells, expected {expected}")
    return flat


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ParseError(f"missing key '{key}' in {where}")
    return doc[key]


def _rect(seq, where: str) -> Rect:
    if not isinstance(seq, (list, tuple)) or len(seq) != 4:
        raise ParseError(f"rect in {where} must be [x_min, y_min, x_max, y_max]")
    try:
        return Rect.from_seq(seq)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"non-numeric rect in {where}: {exc}") from exc


def load_map(data: bytes | str) -> AbstractSemanticMap:
    """Parse and validate a map document.

    Raises ParseError for malformed documents and ValidationError (naming the
    first violated rule) when the parsed map breaks a model invariant.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("map document must be a JSON object")
    version = _require(doc, "semmap_version", "map document")
    if version != SEMMAP_VERSION:
        raise ParseError(f"unsupported semmap_version {version!r}")

    gdoc = _require(doc, "grid", "map document")
    width = int(_require(gdoc, "width", "grid"))
    height = int(_require(gdoc, "height", "grid"))
    resolution = float(_require(gdoc, "resolution", "grid"))
    origin = _require(gdoc, "origin", "grid")
    if not isinstance(origin, (list, tuple)) or len(origin) != 2:
        raise ParseError("grid origin must be [x, y]")
    try:
        blob = base64.b64decode(_require(gdoc, "cells_rle_b64", "grid"), validate=True)
    except (binascii.Error, ValueError, TypeError) as exc:
        raise ParseError(f"grid cells are not valid base64: {exc}") from exc
    if width <= 0 or height <= 0:
        raise ParseError(f"grid dimensions must be positive, got {width}x{height}")
    flat = rle_decode(blob, expected=width * height)
    grid = OccupancyGrid(resolution=resolution, origin=(float(origin[0]), float(origin[1])),
                         cells=flat.reshape(height, width))

    objects = []
    for odoc in doc.get("objects", []):
        objects.append(
            SemanticObject(
                id=str(_require(odoc, "id", "object")),
                class_label=str(_require(odoc, "class_label", "object")),
                rect=_rect(_require(odoc, "rect", "object"), "object"),
            )
        )

    rooms = []
    for rdoc in doc.get("rooms", []):
        rid = str(_require(rdoc, "id", "room"))
        rects = _require(rdoc, "rects", f"room {rid}")
        if not isinstance(rects, list) or not rects:
            raise ParseError(f"room {rid} needs a non-empty rects list")
        rooms.append(
            Room(
                id=rid,
                rects=tuple(_rect(r, f"room {rid}") for r in rects),
                category=str(_require(rdoc, "category", f"room {rid}")),
                name=None if rdoc.get("name") is None else str(rdoc["name"]),
                object_ids=tuple(str(v) for v in rdoc.get("object_ids", [])),
            )
        )

    boxes = []
    for bdoc in doc.get("text_boxes", []):
        boxes.append(
            TextBox(
                tag=str(_require(bdoc, "tag", "text box")),
                rect=_rect(_require(bdoc, "rect", "text box"), "text box"),
                support_count=int(bdoc.get("support_count", 0)),
            )
        )

    stability = doc.get("class_stability")
    if stability is not None:
        if not isinstance(stability, dict):
            raise ParseError("class_stability must be an object of class -> score")
        stability = {str(k): float(v) for k, v in stability.items()}

    semmap = AbstractSemanticMap(
        grid=grid,
        objects=tuple(objects),
        rooms=tuple(rooms),
        text_boxes=tuple(boxes),
        class_stability=stability,
        floorplan_image=doc.get("floorplan_image"),
    )
    violations = validate_map(semmap)
    if violations:
        raise ValidationError(violations)
    return semmap


def map_to_document(semmap: AbstractSemanticMap) -> dict:
    doc = {
        "semmap_version": SEMMAP_VERSION,
        "grid": {
            "resolution": semmap.grid.resolution,
            "origin": [semmap.grid.origin[0], semmap.grid.origin[1]],
            "width": semmap.grid.width,
            "height": semmap.grid.height,
            "cells_rle_b64": base64.b64encode(rle_encode(semmap.grid.cells)).decode("ascii"),
        },
        "objects": [
            {"id": o.id, "class_label": o.class_label, "rect": list(o.rect.as_tuple())}
            for o in semmap.objects
        ],
        "rooms": [
            {
                "id": r.id,
                "rects": [list(rect.as_tuple()) for rect in r.rects],
                "category": r.category,
                "name": r.name,
                "object_ids": list(r.object_ids),
            }
            for r in semmap.rooms
        ],
        "text_boxes": [
            {"tag": b.tag, "rect": list(b.rect.as_tuple()), "support_count": b.support_count}
            for b in semmap.text_boxes
        ],
    }
    if semmap.class_stability is not None:
        doc["class_stability"] = dict(sorted(semmap.class_stability.items()))
    if semmap.floorplan_image is not None:
        doc["floorplan_image"] = semmap.floorplan_image
    return doc


def save_map(semmap: AbstractSemanticMap) -> bytes:
    """Serialize canonically; refuses to write an invalid map."""
    violations = validate_map(semmap)
    if violations:
        raise ValidationError(violations)
    return (json.dumps(map_to_document(semmap), sort_keys=True, indent=2) + "\n").encode("utf-8")

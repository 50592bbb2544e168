/**
 * Client-side re-statement of the map model invariants. Rule names match the
 * core toolkit so an editor refusal reads the same as a CLI rejection; the
 * shared fixture corpus keeps the two implementations aligned.
 */

import {
  MapDocument,
  Rect,
  rectCenter,
  rectContains,
  rectIntersectionArea,
} from "./model.js";
import { FREE, OCCUPIED, UNKNOWN, decodeCells } from "./rle.js";

export const ROOM_OVERLAP_TOLERANCE = 1e-9; // m^2

export interface Violation {
  rule: string;
  entities: string[];
  message: string;
}

function violation(rule: string, entities: string[], message: string): Violation {
  return { rule, entities, message };
}

export function formatViolation(v: Violation): string {
  return `${v.rule} [${v.entities.join(",")}]: ${v.message}`;
}

function roomContains(room: { rects: Rect[] }, x: number, y: number): boolean {
  return room.rects.some((r) => rectContains(r, x, y));
}

export function validateMap(doc: MapDocument): Violation[] {
  const out: Violation[] = [];
  const grid = doc.grid;

  if (!(grid.resolution > 0)) {
    out.push(violation("grid.resolution_positive", ["grid"], `resolution ${grid.resolution} must be > 0`));
  }
  let cells: Uint8Array | null = null;
  try {
    cells = decodeCells(grid.cells_rle_b64, grid.width * grid.height);
  } catch (err) {
    out.push(violation("grid.cell_count", ["grid"], err instanceof Error ? err.message : String(err)));
  }
  if (cells !== null) {
    let hasFree = false;
    let badValue = false;
    for (const v of cells) {
      if (v === FREE) hasFree = true;
      else if (v !== OCCUPIED && v !== UNKNOWN) badValue = true;
    }
    if (badValue) {
      out.push(violation("grid.cell_values", ["grid"], "cells must be FREE, OCCUPIED or UNKNOWN"));
    } else if (!hasFree) {
      out.push(violation("grid.has_free_cell", ["grid"], "map has no FREE cell"));
    }
  }

  const objectById = new Map<string, { rect: Rect }>();
  const seenObjects = new Set<string>();
  for (const obj of doc.objects) {
    if (seenObjects.has(obj.id)) {
      out.push(violation("object.id_unique", [obj.id], "duplicate object id"));
    }
    seenObjects.add(obj.id);
    objectById.set(obj.id, obj);
    if (!obj.class_label) {
      out.push(violation("object.class_label_nonempty", [obj.id], "object class_label is empty"));
    }
    if (!(obj.rect[0] < obj.rect[2] && obj.rect[1] < obj.rect[3])) {
      out.push(
        violation(
          "object.rect_nondegenerate",
          [obj.id],
          `object rect must satisfy x_min < x_max and y_min < y_max, got [${obj.rect.join(", ")}]`,
        ),
      );
    }
  }

  const seenRooms = new Set<string>();
  for (const room of doc.rooms) {
    if (seenRooms.has(room.id)) {
      out.push(violation("room.id_unique", [room.id], "duplicate room id"));
    }
    seenRooms.add(room.id);
    if (room.rects.length === 0) {
      out.push(violation("room.rect_nondegenerate", [room.id], "room has no rectangles"));
    }
    for (const r of room.rects) {
      if (!(r[0] < r[2] && r[1] < r[3])) {
        out.push(violation("room.rect_nondegenerate", [room.id], `degenerate room rect [${r.join(", ")}]`));
      }
    }
    for (const oid of room.object_ids) {
      const obj = objectById.get(oid);
      if (obj === undefined) {
        out.push(violation("room.object_ids_resolve", [room.id, oid], "object id does not resolve"));
      } else {
        const [cx, cy] = rectCenter(obj.rect);
        if (!roomContains(room, cx, cy)) {
          out.push(
            violation("room.object_center_inside", [room.id, oid], "object rectangle center lies outside the room"),
          );
        }
      }
    }
  }

  for (let i = 0; i < doc.rooms.length; i++) {
    for (let j = i + 1; j < doc.rooms.length; j++) {
      let area = 0;
      for (const ra of doc.rooms[i].rects) {
        for (const rb of doc.rooms[j].rects) {
          area += rectIntersectionArea(ra, rb);
        }
      }
      if (area > ROOM_OVERLAP_TOLERANCE) {
        out.push(
          violation(
            "room.no_overlap",
            [doc.rooms[i].id, doc.rooms[j].id],
            `rooms overlap by ${area.toPrecision(3)} m^2`,
          ),
        );
      }
    }
  }

  const seenTags = new Set<string>();
  for (const box of doc.text_boxes) {
    if (seenTags.has(box.tag)) {
      out.push(violation("textbox.tag_unique", [box.tag], "duplicate text box tag"));
    }
    seenTags.add(box.tag);
    if (!(box.rect[0] <= box.rect[2] && box.rect[1] <= box.rect[3])) {
      out.push(violation("textbox.rect_ordered", [box.tag], `inverted text box rect [${box.rect.join(", ")}]`));
    }
    if (box.support_count < 0) {
      out.push(violation("textbox.support_count_nonnegative", [box.tag], "negative support_count"));
    }
  }

  for (const room of doc.rooms) {
    if (room.name !== null) {
      const matches = doc.text_boxes.filter((b) => b.tag === room.name).length;
      if (matches > 1) {
        out.push(
          violation(
            "room.name_matches_at_most_one_textbox",
            [room.id, room.name],
            "room name matches multiple text boxes",
          ),
        );
      }
    }
  }

  if (doc.class_stability !== undefined) {
    for (const [label, score] of Object.entries(doc.class_stability)) {
      if (!(score >= 0 && score <= 1)) {
        out.push(violation("map.class_stability_range", [label], `stability score ${score} outside [0, 1]`));
      }
    }
  }

  return out;
}

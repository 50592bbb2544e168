/**
 * Editing session: the current document plus undo/redo stacks. Every edit
 * snapshots the prior document, so undo -> redo restores the exact state
 * (structural identity) and a failed edit leaves the session untouched.
 */

import {
  Layer,
  MapDocument,
  MapParseError,
  Rect,
  cloneDocument,
  parseMapDocument,
  serializeMapDocument,
} from "./model.js";
import { Violation, formatViolation, validateMap } from "./validate.js";

export class EditRejected extends Error {
  constructor(message: string) {
    super(message);
    this.name = "EditRejected";
  }
}

export class SaveRejected extends Error {
  violations: Violation[];

  constructor(violations: Violation[]) {
    super(`map has ${violations.length} violation(s):\n` + violations.map(formatViolation).join("\n"));
    this.name = "SaveRejected";
    this.violations = violations;
  }
}

export interface ViewTransform {
  panX: number;
  panY: number;
  scale: number; // pixels per meter
}

export interface Selection {
  layer: Layer;
  id: string; // object id, room id or text box tag
}

export const MIN_EXTENT_CELLS = 1; // a shape may not shrink below one grid cell

export class EditorSession {
  doc: MapDocument;
  undoStack: MapDocument[] = [];
  redoStack: MapDocument[] = [];
  selection: Selection | null = null;
  view: ViewTransform = { panX: 0, panY: 0, scale: 60 };
  snapEnabled = true;

  constructor(doc: MapDocument) {
    this.doc = doc;
  }

  get minExtent(): number {
    return MIN_EXTENT_CELLS * this.doc.grid.resolution;
  }

  /** Snap a meter coordinate to the grid-cell lattice when snapping is on. */
  snap(value: number): number {
    if (!this.snapEnabled) {
      return value;
    }
    const res = this.doc.grid.resolution;
    return Math.round(value / res) * res;
  }

  snapRect(rect: Rect): Rect {
    return [this.snap(rect[0]), this.snap(rect[1]), this.snap(rect[2]), this.snap(rect[3])];
  }

  private edit(mutate: (doc: MapDocument) => void): void {
    const before = cloneDocument(this.doc);
    const next = cloneDocument(this.doc);
    mutate(next); // throws EditRejected without touching session state
    this.undoStack.push(before);
    this.redoStack.length = 0;
    this.doc = next;
  }

  undo(): boolean {
    const prev = this.undoStack.pop();
    if (prev === undefined) {
      return false;
    }
    this.redoStack.push(this.doc);
    this.doc = prev;
    return true;
  }

  redo(): boolean {
    const next = this.redoStack.pop();
    if (next === undefined) {
      return false;
    }
    this.undoStack.push(this.doc);
    this.doc = next;
    return true;
  }

  private normalizeRect(rect: Rect, degenerateOk: boolean): Rect {
    const [x0, y0, x1, y1] = [
      Math.min(rect[0], rect[2]),
      Math.min(rect[1], rect[3]),
      Math.max(rect[0], rect[2]),
      Math.max(rect[1], rect[3]),
    ];
    if (!degenerateOk && (x1 - x0 < this.minExtent || y1 - y0 < this.minExtent)) {
      throw new EditRejected(`rectangle smaller than the minimum extent (${this.minExtent} m)`);
    }
    return [x0, y0, x1, y1];
  }

  private freshId(prefix: string, taken: Set<string>): string {
    let k = 1;
    while (taken.has(`${prefix}${k}`)) {
      k++;
    }
    return `${prefix}${k}`;
  }

  createObject(rect: Rect, classLabel: string, id?: string): string {
    const norm = this.normalizeRect(this.snapRect(rect), false);
    if (!classLabel) {
      throw new EditRejected("object needs a non-empty class label");
    }
    const taken = new Set(this.doc.objects.map((o) => o.id));
    const objectId = id ?? this.freshId("obj_", taken);
    if (taken.has(objectId)) {
      throw new EditRejected(`object id ${objectId} already exists`);
    }
    this.edit((doc) => {
      doc.objects.push({ id: objectId, class_label: classLabel, rect: norm });
    });
    return objectId;
  }

  createRoom(rect: Rect, category: string, name: string | null = null, id?: string): string {
    const norm = this.normalizeRect(this.snapRect(rect), false);
    if (!category) {
      throw new EditRejected("room needs a category");
    }
    const taken = new Set(this.doc.rooms.map((r) => r.id));
    const roomId = id ?? this.freshId("room_", taken);
    if (taken.has(roomId)) {
      throw new EditRejected(`room id ${roomId} already exists`);
    }
    this.edit((doc) => {
      doc.rooms.push({ id: roomId, rects: [norm], category, name, object_ids: [] });
    });
    return roomId;
  }

  createTextBox(rect: Rect, tag: string): string {
    const snapped = this.snapRect(rect);
    const norm: Rect = [
      Math.min(snapped[0], snapped[2]),
      Math.min(snapped[1], snapped[3]),
      Math.max(snapped[0], snapped[2]),
      Math.max(snapped[1], snapped[3]),
    ]; // degenerate text boxes are legal
    if (!tag) {
      throw new EditRejected("text box needs a tag");
    }
    if (this.doc.text_boxes.some((b) => b.tag === tag)) {
      throw new EditRejected(`text box tag ${tag} already exists`);
    }
    this.edit((doc) => {
      doc.text_boxes.push({ tag, rect: norm, support_count: 0 });
    });
    return tag;
  }

  moveShape(layer: Layer, id: string, dx: number, dy: number): void {
    const sdx = this.snap(dx);
    const sdy = this.snap(dy);
    const shift = (r: Rect): Rect => [r[0] + sdx, r[1] + sdy, r[2] + sdx, r[3] + sdy];
    this.edit((doc) => {
      if (layer === "objects") {
        const obj = doc.objects.find((o) => o.id === id);
        if (!obj) throw new EditRejected(`no object ${id}`);
        obj.rect = shift(obj.rect);
      } else if (layer === "rooms") {
        const room = doc.rooms.find((r) => r.id === id);
        if (!room) throw new EditRejected(`no room ${id}`);
        room.rects = room.rects.map(shift);
      } else {
        const box = doc.text_boxes.find((b) => b.tag === id);
        if (!box) throw new EditRejected(`no text box ${id}`);
        box.rect = shift(box.rect);
      }
    });
  }

  resizeShape(layer: Layer, id: string, rect: Rect, rectIndex = 0): void {
    this.edit((doc) => {
      if (layer === "objects") {
        const obj = doc.objects.find((o) => o.id === id);
        if (!obj) throw new EditRejected(`no object ${id}`);
        obj.rect = this.normalizeRect(this.snapRect(rect), false);
      } else if (layer === "rooms") {
        const room = doc.rooms.find((r) => r.id === id);
        if (!room) throw new EditRejected(`no room ${id}`);
        if (rectIndex < 0 || rectIndex >= room.rects.length) {
          throw new EditRejected(`room ${id} has no rect #${rectIndex}`);
        }
        room.rects[rectIndex] = this.normalizeRect(this.snapRect(rect), false);
      } else {
        const box = doc.text_boxes.find((b) => b.tag === id);
        if (!box) throw new EditRejected(`no text box ${id}`);
        const snapped = this.snapRect(rect);
        box.rect = [
          Math.min(snapped[0], snapped[2]),
          Math.min(snapped[1], snapped[3]),
          Math.max(snapped[0], snapped[2]),
          Math.max(snapped[1], snapped[3]),
        ];
      }
    });
  }

  deleteShape(layer: Layer, id: string): void {
    this.edit((doc) => {
      if (layer === "objects") {
        if (!doc.objects.some((o) => o.id === id)) throw new EditRejected(`no object ${id}`);
        doc.objects = doc.objects.filter((o) => o.id !== id);
        for (const room of doc.rooms) {
          room.object_ids = room.object_ids.filter((oid) => oid !== id);
        }
      } else if (layer === "rooms") {
        if (!doc.rooms.some((r) => r.id === id)) throw new EditRejected(`no room ${id}`);
        doc.rooms = doc.rooms.filter((r) => r.id !== id);
      } else {
        if (!doc.text_boxes.some((b) => b.tag === id)) throw new EditRejected(`no text box ${id}`);
        doc.text_boxes = doc.text_boxes.filter((b) => b.tag !== id);
      }
    });
  }

  retagObject(id: string, classLabel: string): void {
    if (!classLabel) {
      throw new EditRejected("object needs a non-empty class label");
    }
    this.edit((doc) => {
      const obj = doc.objects.find((o) => o.id === id);
      if (!obj) throw new EditRejected(`no object ${id}`);
      obj.class_label = classLabel;
    });
  }

  retagRoom(id: string, category: string, name: string | null): void {
    if (!category) {
      throw new EditRejected("room needs a category");
    }
    this.edit((doc) => {
      const room = doc.rooms.find((r) => r.id === id);
      if (!room) throw new EditRejected(`no room ${id}`);
      room.category = category;
      room.name = name;
    });
  }

  /**
   * Change a text box tag; when a room's name points at the old tag, the
   * caller passes updateLinkedRoom=true (after user confirmation) to keep
   * the room name in sync.
   */
  retagTextBox(oldTag: string, newTag: string, updateLinkedRoom: boolean): void {
    if (!newTag) {
      throw new EditRejected("text box needs a tag");
    }
    if (newTag !== oldTag && this.doc.text_boxes.some((b) => b.tag === newTag)) {
      throw new EditRejected(`text box tag ${newTag} already exists`);
    }
    this.edit((doc) => {
      const box = doc.text_boxes.find((b) => b.tag === oldTag);
      if (!box) throw new EditRejected(`no text box ${oldTag}`);
      box.tag = newTag;
      if (updateLinkedRoom) {
        for (const room of doc.rooms) {
          if (room.name === oldTag) {
            room.name = newTag;
          }
        }
      }
    });
  }

  assignObjectToRoom(objectId: string, roomId: string | null): void {
    this.edit((doc) => {
      if (!doc.objects.some((o) => o.id === objectId)) {
        throw new EditRejected(`no object ${objectId}`);
      }
      for (const room of doc.rooms) {
        room.object_ids = room.object_ids.filter((oid) => oid !== objectId);
      }
      if (roomId !== null) {
        const room = doc.rooms.find((r) => r.id === roomId);
        if (!room) throw new EditRejected(`no room ${roomId}`);
        room.object_ids.push(objectId);
      }
    });
  }
}

export function openMap(text: string): EditorSession {
  const doc = parseMapDocument(text);
  return new EditorSession(doc);
}

/** Serialize the session's document; refuses while violations remain. */
export function saveMap(session: EditorSession): string {
  const violations = validateMap(session.doc);
  if (violations.length > 0) {
    throw new SaveRejected(violations);
  }
  return serializeMapDocument(session.doc);
}

export { MapParseError };

/**
 * Map document model, mirroring the core map format ("semmap_version": 1).
 * The editor talks to the localization toolkit only through this format.
 */

export const SEMMAP_VERSION = 1;

export type Rect = [number, number, number, number]; // x_min, y_min, x_max, y_max

export interface GridDoc {
  resolution: number;
  origin: [number, number];
  width: number;
  height: number;
  cells_rle_b64: string;
}

export interface ObjectDoc {
  id: string;
  class_label: string;
  rect: Rect;
}

export interface RoomDoc {
  id: string;
  rects: Rect[];
  category: string;
  name: string | null;
  object_ids: string[];
}

export interface TextBoxDoc {
  tag: string;
  rect: Rect;
  support_count: number;
}

export interface MapDocument {
  semmap_version: number;
  grid: GridDoc;
  objects: ObjectDoc[];
  rooms: RoomDoc[];
  text_boxes: TextBoxDoc[];
  class_stability?: Record<string, number>;
  floorplan_image?: string;
}

export type Layer = "objects" | "rooms" | "text";

export class MapParseError extends Error {
  line: number | null;

  constructor(message: string, line: number | null = null) {
    super(line === null ? message : `${message} (line ${line})`);
    this.name = "MapParseError";
    this.line = line;
  }
}

function lineOfPosition(text: string, position: number): number {
  return text.slice(0, position).split("\n").length;
}

/**
 * Locate the first JSON syntax error ourselves: engines differ in whether
 * JSON.parse reports a position, and the editor promises line context.
 * Returns the character offset of the offending token, or null if the text
 * scans clean (then the engine's message stands on its own).
 */
export function findJsonSyntaxError(text: string): number | null {
  let i = 0;
  const n = text.length;
  const ws = () => {
    while (i < n && (text[i] === " " || text[i] === "\t" || text[i] === "\n" || text[i] === "\r")) i++;
  };
  const fail = { at: -1 };
  const error = (): false => {
    if (fail.at < 0) fail.at = Math.min(i, n - 1);
    return false;
  };
  const literal = (word: string): boolean => {
    if (text.startsWith(word, i)) {
      i += word.length;
      return true;
    }
    return error();
  };
  const string = (): boolean => {
    if (text[i] !== '"') return error();
    i++;
    while (i < n) {
      if (text[i] === "\\") i += 2;
      else if (text[i] === '"') {
        i++;
        return true;
      } else if (text[i] === "\n") return error();
      else i++;
    }
    return error();
  };
  const number = (): boolean => {
    const start = i;
    if (text[i] === "-") i++;
    while (i < n && text[i] >= "0" && text[i] <= "9") i++;
    if (text[i] === ".") {
      i++;
      while (i < n && text[i] >= "0" && text[i] <= "9") i++;
    }
    if (text[i] === "e" || text[i] === "E") {
      i++;
      if (text[i] === "+" || text[i] === "-") i++;
      while (i < n && text[i] >= "0" && text[i] <= "9") i++;
    }
    return i > start && /^-?\d/.test(text.slice(start, i)) ? true : error();
  };
  const value = (): boolean => {
    ws();
    const c = text[i];
    if (c === "{") {
      i++;
      ws();
      if (text[i] === "}") {
        i++;
        return true;
      }
      for (;;) {
        ws();
        if (!string()) return false;
        ws();
        if (text[i] !== ":") return error();
        i++;
        if (!value()) return false;
        ws();
        if (text[i] === ",") {
          i++;
          continue;
        }
        if (text[i] === "}") {
          i++;
          return true;
        }
        return error();
      }
    }
    if (c === "[") {
      i++;
      ws();
      if (text[i] === "]") {
        i++;
        return true;
      }
      for (;;) {
        if (!value()) return false;
        ws();
        if (text[i] === ",") {
          i++;
          continue;
        }
        if (text[i] === "]") {
          i++;
          return true;
        }
        return error();
      }
    }
    if (c === '"') return string();
    if (c === "t") return literal("true");
    if (c === "f") return literal("false");
    if (c === "n") return literal("null");
    return number();
  };
  if (!value()) return fail.at;
  ws();
  if (i < n) return i; // trailing garbage
  return null;
}

function need<T>(value: T | undefined, what: string): T {
  if (value === undefined || value === null) {
    throw new MapParseError(`missing ${what}`);
  }
  return value;
}

function asRect(value: unknown, where: string): Rect {
  if (!Array.isArray(value) || value.length !== 4 || value.some((v) => typeof v !== "number")) {
    throw new MapParseError(`rect in ${where} must be [x_min, y_min, x_max, y_max]`);
  }
  return [value[0], value[1], value[2], value[3]];
}

/** Parse raw file text into a document; errors carry the offending line when
 * the JSON itself is broken. */
export function parseMapDocument(text: string): MapDocument {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    const position = findJsonSyntaxError(text);
    const line = position === null ? null : lineOfPosition(text, position);
    throw new MapParseError(`not valid JSON: ${message}`, line);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new MapParseError("map document must be a JSON object");
  }
  const doc = raw as Record<string, unknown>;
  if (doc.semmap_version !== SEMMAP_VERSION) {
    throw new MapParseError(`unsupported semmap_version ${String(doc.semmap_version)}`);
  }
  const grid = need(doc.grid, "grid") as Record<string, unknown>;
  const origin = grid.origin;
  if (!Array.isArray(origin) || origin.length !== 2) {
    throw new MapParseError("grid origin must be [x, y]");
  }
  const out: MapDocument = {
    semmap_version: SEMMAP_VERSION,
    grid: {
      resolution: Number(need(grid.resolution, "grid.resolution")),
      origin: [Number(origin[0]), Number(origin[1])],
      width: Number(need(grid.width, "grid.width")),
      height: Number(need(grid.height, "grid.height")),
      cells_rle_b64: String(need(grid.cells_rle_b64, "grid.cells_rle_b64")),
    },
    objects: [],
    rooms: [],
    text_boxes: [],
  };
  for (const o of (doc.objects as unknown[]) ?? []) {
    const rec = o as Record<string, unknown>;
    out.objects.push({
      id: String(need(rec.id, "object.id")),
      class_label: String(need(rec.class_label, "object.class_label")),
      rect: asRect(need(rec.rect, "object.rect"), "object"),
    });
  }
  for (const r of (doc.rooms as unknown[]) ?? []) {
    const rec = r as Record<string, unknown>;
    const rects = need(rec.rects, "room.rects");
    if (!Array.isArray(rects) || rects.length === 0) {
      throw new MapParseError(`room ${String(rec.id)} needs a non-empty rects list`);
    }
    out.rooms.push({
      id: String(need(rec.id, "room.id")),
      rects: rects.map((x) => asRect(x, `room ${String(rec.id)}`)),
      category: String(need(rec.category, "room.category")),
      name: rec.name === undefined || rec.name === null ? null : String(rec.name),
      object_ids: ((rec.object_ids as unknown[]) ?? []).map(String),
    });
  }
  for (const b of (doc.text_boxes as unknown[]) ?? []) {
    const rec = b as Record<string, unknown>;
    out.text_boxes.push({
      tag: String(need(rec.tag, "text box tag")),
      rect: asRect(need(rec.rect, "text box rect"), "text box"),
      support_count: rec.support_count === undefined ? 0 : Number(rec.support_count),
    });
  }
  if (doc.class_stability !== undefined && doc.class_stability !== null) {
    const stability = doc.class_stability as Record<string, unknown>;
    out.class_stability = {};
    for (const [key, value] of Object.entries(stability)) {
      out.class_stability[key] = Number(value);
    }
  }
  if (doc.floorplan_image !== undefined && doc.floorplan_image !== null) {
    out.floorplan_image = String(doc.floorplan_image);
  }
  return out;
}

/** Serialize with a stable key layout; structural content is what matters
 * for the round-trip contract with the core loader. */
export function serializeMapDocument(doc: MapDocument): string {
  const body: Record<string, unknown> = {
    semmap_version: doc.semmap_version,
    grid: {
      resolution: doc.grid.resolution,
      origin: doc.grid.origin,
      width: doc.grid.width,
      height: doc.grid.height,
      cells_rle_b64: doc.grid.cells_rle_b64,
    },
    objects: doc.objects.map((o) => ({ id: o.id, class_label: o.class_label, rect: o.rect })),
    rooms: doc.rooms.map((r) => ({
      id: r.id,
      rects: r.rects,
      category: r.category,
      name: r.name,
      object_ids: r.object_ids,
    })),
    text_boxes: doc.text_boxes.map((b) => ({ tag: b.tag, rect: b.rect, support_count: b.support_count })),
  };
  if (doc.class_stability !== undefined) {
    body.class_stability = doc.class_stability;
  }
  if (doc.floorplan_image !== undefined) {
    body.floorplan_image = doc.floorplan_image;
  }
  return JSON.stringify(body, null, 2) + "\n";
}

export function cloneDocument(doc: MapDocument): MapDocument {
  return JSON.parse(JSON.stringify(doc)) as MapDocument;
}

export function rectCenter(rect: Rect): [number, number] {
  return [(rect[0] + rect[2]) / 2, (rect[1] + rect[3]) / 2];
}

export function rectContains(rect: Rect, x: number, y: number): boolean {
  return rect[0] <= x && x <= rect[2] && rect[1] <= y && y <= rect[3];
}

export function rectIntersectionArea(a: Rect, b: Rect): number {
  const w = Math.min(a[2], b[2]) - Math.max(a[0], b[0]);
  const h = Math.min(a[3], b[3]) - Math.max(a[1], b[1]);
  return w <= 0 || h <= 0 ? 0 : w * h;
}

import { describe, expect, it } from "vitest";

import { parseMapDocument, MapParseError } from "../src/model.js";
import { encodeCells } from "../src/rle.js";
import { validateMap } from "../src/validate.js";
import { smallDocument } from "./fixtures.js";

describe("validateMap", () => {
  it("accepts the fixture document", () => {
    expect(validateMap(smallDocument())).toEqual([]);
  });

  it("flags degenerate object rects", () => {
    const doc = smallDocument();
    doc.objects[0].rect = [1.0, 0.5, 1.0, 1.25];
    const rules = validateMap(doc).map((v) => v.rule);
    expect(rules).toContain("object.rect_nondegenerate");
  });

  it("flags empty class labels", () => {
    const doc = smallDocument();
    doc.objects[0].class_label = "";
    expect(validateMap(doc).map((v) => v.rule)).toContain("object.class_label_nonempty");
  });

  it("flags overlapping rooms citing both ids", () => {
    const doc = smallDocument();
    doc.rooms[1].rects = [[1.0, 0.5, 4.5, 3.5]];
    const hits = validateMap(doc).filter((v) => v.rule === "room.no_overlap");
    expect(hits).toHaveLength(1);
    expect(hits[0].entities.sort()).toEqual(["ra", "rb"]);
  });

  it("ignores zero-area room contact", () => {
    const doc = smallDocument();
    doc.rooms[1].rects = [[2.25, 0.25, 4.5, 1.75]]; // shares an edge with ra
    doc.rooms[1].object_ids = []; // o2 stayed behind at the old location
    expect(validateMap(doc)).toEqual([]);
  });

  it("flags dangling object ids", () => {
    const doc = smallDocument();
    doc.rooms[0].object_ids = ["missing"];
    expect(validateMap(doc).map((v) => v.rule)).toContain("room.object_ids_resolve");
  });

  it("flags object centers outside their room", () => {
    const doc = smallDocument();
    doc.objects[0].rect = [3.0, 2.5, 3.75, 3.25]; // o1 now sits in rb, still listed in ra
    expect(validateMap(doc).map((v) => v.rule)).toContain("room.object_center_inside");
  });

  it("flags duplicate ids and tags", () => {
    const doc = smallDocument();
    doc.objects.push({ ...doc.objects[0] });
    doc.text_boxes.push({ ...doc.text_boxes[0] });
    const rules = validateMap(doc).map((v) => v.rule);
    expect(rules).toContain("object.id_unique");
    expect(rules).toContain("textbox.tag_unique");
  });

  it("allows degenerate text boxes but not inverted ones", () => {
    const doc = smallDocument();
    doc.text_boxes[0].rect = [1.0, 2.0, 1.0, 2.0];
    expect(validateMap(doc)).toEqual([]);
    doc.text_boxes[0].rect = [2.0, 2.0, 1.0, 2.5];
    expect(validateMap(doc).map((v) => v.rule)).toContain("textbox.rect_ordered");
  });

  it("flags an all-occupied grid", () => {
    const doc = smallDocument();
    doc.grid.cells_rle_b64 = encodeCells(new Uint8Array(doc.grid.width * doc.grid.height).fill(1));
    expect(validateMap(doc).map((v) => v.rule)).toContain("grid.has_free_cell");
  });

  it("flags stability scores outside [0, 1]", () => {
    const doc = smallDocument();
    doc.class_stability = { desk: 1.5 };
    expect(validateMap(doc).map((v) => v.rule)).toContain("map.class_stability_range");
  });
});

describe("parseMapDocument", () => {
  it("reports the line of a JSON syntax error", () => {
    const text = '{\n  "semmap_version": 1,\n  "grid": oops\n}';
    try {
      parseMapDocument(text);
      expect.unreachable("should have thrown");
    } catch (err) {
      expect(err).toBeInstanceOf(MapParseError);
      expect((err as MapParseError).line).toBe(3);
    }
  });

  it("rejects wrong versions", () => {
    expect(() => parseMapDocument(JSON.stringify({ semmap_version: 2 }))).toThrow(/semmap_version/);
  });

  it("round-trips through serialize + parse", async () => {
    const { serializeMapDocument } = await import("../src/model.js");
    const doc = smallDocument();
    const again = parseMapDocument(serializeMapDocument(doc));
    expect(again).toEqual(doc);
  });
});

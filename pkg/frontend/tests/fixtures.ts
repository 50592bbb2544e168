import { MapDocument } from "../src/model.js";
import { encodeCells, FREE, OCCUPIED } from "../src/rle.js";

/** 20x16 cells at 0.25 m: occupied border, free interior. */
export function smallDocument(): MapDocument {
  const width = 20;
  const height = 16;
  const cells = new Uint8Array(width * height).fill(FREE);
  for (let col = 0; col < width; col++) {
    cells[col] = OCCUPIED;
    cells[(height - 1) * width + col] = OCCUPIED;
  }
  for (let row = 0; row < height; row++) {
    cells[row * width] = OCCUPIED;
    cells[row * width + width - 1] = OCCUPIED;
  }
  return {
    semmap_version: 1,
    grid: {
      resolution: 0.25,
      origin: [0, 0],
      width,
      height,
      cells_rle_b64: encodeCells(cells),
    },
    objects: [
      { id: "o1", class_label: "desk", rect: [0.5, 0.5, 1.5, 1.25] },
      { id: "o2", class_label: "sink", rect: [3.0, 2.5, 3.75, 3.25] },
    ],
    rooms: [
      { id: "ra", rects: [[0.25, 0.25, 2.25, 1.75]], category: "office", name: "101", object_ids: ["o1"] },
      { id: "rb", rects: [[2.5, 2.0, 4.5, 3.5]], category: "kitchen", name: null, object_ids: ["o2"] },
    ],
    text_boxes: [{ tag: "101", rect: [0.5, 2.0, 1.5, 2.75], support_count: 0 }],
  };
}

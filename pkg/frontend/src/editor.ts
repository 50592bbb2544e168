/**
 * Canvas editor app: rendering, mouse interaction and file handling around
 * an EditorSession. All document logic lives in session.ts/validate.ts; this
 * file is DOM glue.
 */

import { Layer, MapDocument, Rect } from "./model.js";
import { FREE, OCCUPIED, decodeCells } from "./rle.js";
import { EditRejected, EditorSession, SaveRejected, openMap, saveMap } from "./session.js";
import { formatViolation } from "./validate.js";

type Tool = "select" | "objects" | "rooms" | "text";

const LAYER_COLORS: Record<Layer, string> = {
  objects: "#1a9c4b",
  rooms: "#2563c9",
  text: "#d97708",
};

const HANDLE_PX = 7;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

class EditorApp {
  session: EditorSession | null = null;
  fileName = "map.json";
  backdrop: HTMLImageElement | null = null;
  gridImage: HTMLCanvasElement | null = null;
  tool: Tool = "select";
  visible: Record<Layer, boolean> = { objects: true, rooms: true, text: true };

  canvas = el<HTMLCanvasElement>("canvas");
  ctx = this.canvas.getContext("2d")!;
  status = el<HTMLElement>("status");
  violationsPanel = el<HTMLElement>("violations");

  drag: null | {
    kind: "draw" | "move" | "resize" | "pan";
    startX: number;
    startY: number;
    lastX: number;
    lastY: number;
    rect?: Rect;
    corner?: number;
  } = null;

  constructor() {
    this.bindToolbar();
    this.bindCanvas();
    this.resize();
    window.addEventListener("resize", () => this.resize());
    this.draw();
  }

  // ---- coordinate transforms ------------------------------------------------

  toScreen(x: number, y: number): [number, number] {
    const v = this.session!.view;
    return [v.panX + x * v.scale, this.canvas.height - (v.panY + y * v.scale)];
  }

  toWorld(px: number, py: number): [number, number] {
    const v = this.session!.view;
    return [(px - v.panX) / v.scale, (this.canvas.height - py - v.panY) / v.scale];
  }

  // ---- setup ---------------------------------------------------------------

  bindToolbar(): void {
    el<HTMLInputElement>("open-map").addEventListener("change", (ev) => {
      const file = (ev.target as HTMLInputElement).files?.[0];
      if (file) void this.openFile(file);
    });
    el<HTMLInputElement>("open-image").addEventListener("change", (ev) => {
      const file = (ev.target as HTMLInputElement).files?.[0];
      if (file) void this.openBackdrop(file);
    });
    el<HTMLButtonElement>("save").addEventListener("click", () => this.save());
    el<HTMLButtonElement>("undo").addEventListener("click", () => this.withSession((s) => s.undo()));
    el<HTMLButtonElement>("redo").addEventListener("click", () => this.withSession((s) => s.redo()));
    el<HTMLButtonElement>("retag").addEventListener("click", () => this.retagSelection());
    el<HTMLButtonElement>("delete").addEventListener("click", () => this.deleteSelection());
    el<HTMLInputElement>("snap").addEventListener("change", (ev) => {
      if (this.session) this.session.snapEnabled = (ev.target as HTMLInputElement).checked;
    });
    for (const layer of ["objects", "rooms", "text"] as Layer[]) {
      el<HTMLInputElement>(`show-${layer}`).addEventListener("change", (ev) => {
        this.visible[layer] = (ev.target as HTMLInputElement).checked;
        this.draw();
      });
    }
    for (const tool of ["select", "objects", "rooms", "text"] as Tool[]) {
      el<HTMLInputElement>(`tool-${tool}`).addEventListener("change", () => {
        this.tool = tool;
      });
    }
    document.addEventListener("keydown", (ev) => {
      if (ev.target instanceof HTMLInputElement) return;
      if ((ev.ctrlKey || ev.metaKey) && ev.key.toLowerCase() === "z" && !ev.shiftKey) {
        ev.preventDefault();
        this.withSession((s) => s.undo());
      } else if ((ev.ctrlKey || ev.metaKey) && (ev.key.toLowerCase() === "y" || (ev.key.toLowerCase() === "z" && ev.shiftKey))) {
        ev.preventDefault();
        this.withSession((s) => s.redo());
      } else if (ev.key === "Delete" || ev.key === "Backspace") {
        this.deleteSelection();
      }
    });
  }

  withSession(fn: (s: EditorSession) => unknown): void {
    if (!this.session) return;
    try {
      fn(this.session);
    } catch (err) {
      this.report(err instanceof Error ? err.message : String(err));
    }
    this.draw();
  }

  async openFile(file: File): Promise<void> {
    const text = await file.text();
    try {
      this.session = openMap(text);
    } catch (err) {
      this.report(err instanceof Error ? err.message : String(err));
      return;
    }
    this.fileName = file.name;
    this.gridImage = null;
    this.violationsPanel.textContent = "";
    this.fitView();
    this.report(`opened ${file.name}: ${this.session.doc.objects.length} objects, ` +
      `${this.session.doc.rooms.length} rooms, ${this.session.doc.text_boxes.length} text boxes`);
    this.draw();
  }

  async openBackdrop(file: File): Promise<void> {
    const url = URL.createObjectURL(file);
    const image = new Image();
    image.onload = () => {
      this.backdrop = image;
      this.draw();
    };
    image.src = url;
  }

  save(): void {
    if (!this.session) return;
    let text: string;
    try {
      text = saveMap(this.session);
    } catch (err) {
      if (err instanceof SaveRejected) {
        this.violationsPanel.textContent =
          "refusing to save:\n" + err.violations.map(formatViolation).join("\n");
      } else {
        this.report(err instanceof Error ? err.message : String(err));
      }
      return;
    }
    this.violationsPanel.textContent = "";
    const blob = new Blob([text], { type: "application/json" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = this.fileName;
    link.click();
    URL.revokeObjectURL(link.href);
    this.report(`saved ${this.fileName}`);
  }

  fitView(): void {
    if (!this.session) return;
    const grid = this.session.doc.grid;
    const worldW = grid.width * grid.resolution;
    const worldH = grid.height * grid.resolution;
    const scale = Math.min(this.canvas.width / worldW, this.canvas.height / worldH) * 0.95;
    this.session.view = {
      scale,
      panX: (this.canvas.width - worldW * scale) / 2 - grid.origin[0] * scale,
      panY: (this.canvas.height - worldH * scale) / 2 - grid.origin[1] * scale,
    };
  }

  resize(): void {
    const rect = this.canvas.parentElement!.getBoundingClientRect();
    this.canvas.width = rect.width;
    this.canvas.height = rect.height - 4;
    this.draw();
  }

  report(message: string): void {
    this.status.textContent = message;
  }

  // ---- interaction -----------------------------------------------------------

  bindCanvas(): void {
    this.canvas.addEventListener("mousedown", (ev) => this.onDown(ev));
    this.canvas.addEventListener("mousemove", (ev) => this.onMove(ev));
    window.addEventListener("mouseup", () => this.onUp());
    this.canvas.addEventListener("wheel", (ev) => {
      if (!this.session) return;
      ev.preventDefault();
      const factor = ev.deltaY < 0 ? 1.15 : 1 / 1.15;
      const [wx, wy] = this.toWorld(ev.offsetX, ev.offsetY);
      const v = this.session.view;
      v.scale *= factor;
      const [sx, sy] = this.toScreen(wx, wy);
      v.panX += ev.offsetX - sx;
      v.panY -= ev.offsetY - sy;
      this.draw();
    });
  }

  selectionRect(): Rect | null {
    const s = this.session;
    if (!s || !s.selection) return null;
    const { layer, id } = s.selection;
    if (layer === "objects") return s.doc.objects.find((o) => o.id === id)?.rect ?? null;
    if (layer === "rooms") return s.doc.rooms.find((r) => r.id === id)?.rects[0] ?? null;
    return s.doc.text_boxes.find((b) => b.tag === id)?.rect ?? null;
  }

  hitShape(x: number, y: number): { layer: Layer; id: string } | null {
    const doc = this.session!.doc;
    const order: Layer[] = ["objects", "text", "rooms"]; // smallest things first
    for (const layer of order) {
      if (!this.visible[layer]) continue;
      if (layer === "objects") {
        for (const o of doc.objects) {
          if (o.rect[0] <= x && x <= o.rect[2] && o.rect[1] <= y && y <= o.rect[3]) {
            return { layer, id: o.id };
          }
        }
      } else if (layer === "text") {
        for (const b of doc.text_boxes) {
          const pad = 2 / this.session!.view.scale;
          if (b.rect[0] - pad <= x && x <= b.rect[2] + pad && b.rect[1] - pad <= y && y <= b.rect[3] + pad) {
            return { layer, id: b.tag };
          }
        }
      } else {
        for (const r of doc.rooms) {
          if (r.rects.some((rc) => rc[0] <= x && x <= rc[2] && rc[1] <= y && y <= rc[3])) {
            return { layer, id: r.id };
          }
        }
      }
    }
    return null;
  }

  cornerAt(x: number, y: number): number | null {
    const rect = this.selectionRect();
    if (!rect) return null;
    const tol = HANDLE_PX / this.session!.view.scale;
    const corners: [number, number][] = [
      [rect[0], rect[1]],
      [rect[2], rect[1]],
      [rect[2], rect[3]],
      [rect[0], rect[3]],
    ];
    for (let i = 0; i < 4; i++) {
      if (Math.abs(corners[i][0] - x) <= tol && Math.abs(corners[i][1] - y) <= tol) {
        return i;
      }
    }
    return null;
  }

  onDown(ev: MouseEvent): void {
    if (!this.session) return;
    const [x, y] = this.toWorld(ev.offsetX, ev.offsetY);
    if (ev.button === 1 || ev.shiftKey) {
      this.drag = { kind: "pan", startX: ev.offsetX, startY: ev.offsetY, lastX: ev.offsetX, lastY: ev.offsetY };
      return;
    }
    if (this.tool === "select") {
      const corner = this.cornerAt(x, y);
      if (corner !== null) {
        this.drag = { kind: "resize", startX: x, startY: y, lastX: x, lastY: y, corner, rect: this.selectionRect()! };
        return;
      }
      const hit = this.hitShape(x, y);
      this.session.selection = hit;
      this.draw();
      if (hit) {
        this.drag = { kind: "move", startX: x, startY: y, lastX: x, lastY: y };
      }
    } else {
      this.drag = { kind: "draw", startX: x, startY: y, lastX: x, lastY: y };
    }
  }

  onMove(ev: MouseEvent): void {
    if (!this.session) return;
    const [x, y] = this.toWorld(ev.offsetX, ev.offsetY);
    this.report(`(${x.toFixed(2)}, ${y.toFixed(2)}) m`);
    if (!this.drag) return;
    if (this.drag.kind === "pan") {
      this.session.view.panX += ev.offsetX - this.drag.lastX;
      this.session.view.panY -= ev.offsetY - this.drag.lastY;
      this.drag.lastX = ev.offsetX;
      this.drag.lastY = ev.offsetY;
    } else {
      this.drag.lastX = x;
      this.drag.lastY = y;
    }
    this.draw();
  }

  onUp(): void {
    if (!this.session || !this.drag) return;
    const drag = this.drag;
    this.drag = null;
    const s = this.session;
    try {
      if (drag.kind === "draw") {
        const rect: Rect = [drag.startX, drag.startY, drag.lastX, drag.lastY];
        if (this.tool === "objects") {
          const id = s.createObject(rect, el<HTMLInputElement>("palette-class").value);
          s.selection = { layer: "objects", id };
        } else if (this.tool === "rooms") {
          const name = el<HTMLInputElement>("palette-name").value || null;
          const id = s.createRoom(rect, el<HTMLInputElement>("palette-category").value, name);
          s.selection = { layer: "rooms", id };
        } else if (this.tool === "text") {
          const id = s.createTextBox(rect, el<HTMLInputElement>("palette-tag").value);
          s.selection = { layer: "text", id };
        }
      } else if (drag.kind === "move" && s.selection) {
        const dx = drag.lastX - drag.startX;
        const dy = drag.lastY - drag.startY;
        if (Math.abs(dx) > 1e-9 || Math.abs(dy) > 1e-9) {
          s.moveShape(s.selection.layer, s.selection.id, dx, dy);
        }
      } else if (drag.kind === "resize" && s.selection && drag.rect && drag.corner !== undefined) {
        const rect: Rect = [...drag.rect];
        const xi = drag.corner === 0 || drag.corner === 3 ? 0 : 2;
        const yi = drag.corner === 0 || drag.corner === 1 ? 1 : 3;
        rect[xi] = drag.lastX;
        rect[yi] = drag.lastY;
        s.resizeShape(s.selection.layer, s.selection.id, rect);
      }
    } catch (err) {
      if (err instanceof EditRejected) {
        this.report(err.message);
      } else {
        throw err;
      }
    }
    this.draw();
  }

  retagSelection(): void {
    const s = this.session;
    if (!s || !s.selection) return;
    const { layer, id } = s.selection;
    this.withSession((session) => {
      if (layer === "objects") {
        session.retagObject(id, el<HTMLInputElement>("palette-class").value);
      } else if (layer === "rooms") {
        session.retagRoom(
          id,
          el<HTMLInputElement>("palette-category").value,
          el<HTMLInputElement>("palette-name").value || null,
        );
      } else {
        const newTag = el<HTMLInputElement>("palette-tag").value;
        const linked = session.doc.rooms.some((r) => r.name === id);
        const follow = linked && window.confirm(`update room name "${id}" to "${newTag}" as well?`);
        session.retagTextBox(id, newTag, follow);
        session.selection = { layer: "text", id: newTag };
      }
    });
  }

  deleteSelection(): void {
    const s = this.session;
    if (!s || !s.selection) return;
    const { layer, id } = s.selection;
    this.withSession((session) => {
      session.deleteShape(layer, id);
      session.selection = null;
    });
  }

  // ---- rendering --------------------------------------------------------------

  renderGridImage(doc: MapDocument): HTMLCanvasElement {
    const { width, height } = doc.grid;
    const cells = decodeCells(doc.grid.cells_rle_b64, width * height);
    const off = document.createElement("canvas");
    off.width = width;
    off.height = height;
    const octx = off.getContext("2d")!;
    const image = octx.createImageData(width, height);
    for (let row = 0; row < height; row++) {
      for (let col = 0; col < width; col++) {
        const v = cells[row * width + col];
        // canvas y grows downward; grid row 0 is the bottom
        const at = ((height - 1 - row) * width + col) * 4;
        const shade = v === FREE ? 255 : v === OCCUPIED ? 0 : 176;
        image.data[at] = shade;
        image.data[at + 1] = shade;
        image.data[at + 2] = shade;
        image.data[at + 3] = this.backdrop ? 140 : 255;
      }
    }
    octx.putImageData(image, 0, 0);
    return off;
  }

  drawRect(rect: Rect, color: string, label: string | null, selected: boolean): void {
    const [x0, y0] = this.toScreen(rect[0], rect[3]);
    const [x1, y1] = this.toScreen(rect[2], rect[1]);
    this.ctx.strokeStyle = color;
    this.ctx.lineWidth = selected ? 3 : 1.5;
    this.ctx.strokeRect(x0, y0, Math.max(x1 - x0, 1), Math.max(y1 - y0, 1));
    this.ctx.fillStyle = color + "22";
    this.ctx.fillRect(x0, y0, Math.max(x1 - x0, 1), Math.max(y1 - y0, 1));
    if (label) {
      this.ctx.fillStyle = color;
      this.ctx.font = "12px sans-serif";
      this.ctx.fillText(label, x0 + 3, y0 + 13);
    }
    if (selected) {
      this.ctx.fillStyle = color;
      for (const [cx, cy] of [
        [x0, y0],
        [x1, y0],
        [x1, y1],
        [x0, y1],
      ]) {
        this.ctx.fillRect(cx - HANDLE_PX / 2, cy - HANDLE_PX / 2, HANDLE_PX, HANDLE_PX);
      }
    }
  }

  draw(): void {
    const ctx = this.ctx;
    ctx.fillStyle = "#20242b";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    const s = this.session;
    if (!s) {
      ctx.fillStyle = "#9aa3af";
      ctx.font = "14px sans-serif";
      ctx.fillText("open a map document to begin", 24, 36);
      return;
    }
    const grid = s.doc.grid;
    const [gx0, gy0] = this.toScreen(grid.origin[0], grid.origin[1] + grid.height * grid.resolution);
    const w = grid.width * grid.resolution * s.view.scale;
    const h = grid.height * grid.resolution * s.view.scale;
    if (this.backdrop) {
      ctx.drawImage(this.backdrop, gx0, gy0, w, h); // aligned to the grid extents
    }
    if (!this.gridImage) {
      this.gridImage = this.renderGridImage(s.doc);
    }
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(this.gridImage, gx0, gy0, w, h);

    const sel = s.selection;
    if (this.visible.rooms) {
      for (const room of s.doc.rooms) {
        const selected = sel?.layer === "rooms" && sel.id === room.id;
        room.rects.forEach((rect, i) =>
          this.drawRect(rect, LAYER_COLORS.rooms, i === 0 ? `${room.id}: ${room.category}${room.name ? " " + room.name : ""}` : null, selected),
        );
      }
    }
    if (this.visible.objects) {
      for (const obj of s.doc.objects) {
        const selected = sel?.layer === "objects" && sel.id === obj.id;
        this.drawRect(obj.rect, LAYER_COLORS.objects, obj.class_label, selected);
      }
    }
    if (this.visible.text) {
      for (const box of s.doc.text_boxes) {
        const selected = sel?.layer === "text" && sel.id === box.tag;
        this.drawRect(box.rect, LAYER_COLORS.text, box.tag, selected);
      }
    }
    if (this.drag?.kind === "draw") {
      const layer = this.tool === "select" ? "objects" : (this.tool as Layer);
      this.drawRect(
        [
          Math.min(this.drag.startX, this.drag.lastX),
          Math.min(this.drag.startY, this.drag.lastY),
          Math.max(this.drag.startX, this.drag.lastX),
          Math.max(this.drag.startY, this.drag.lastY),
        ],
        LAYER_COLORS[layer],
        null,
        false,
      );
    }
  }
}

// invalidate the cached grid raster whenever the document is replaced wholesale
const app = new EditorApp();
const redraw = () => {
  app.gridImage = null;
  app.draw();
};
el<HTMLButtonElement>("undo").addEventListener("click", redraw);
el<HTMLButtonElement>("redo").addEventListener("click", redraw);

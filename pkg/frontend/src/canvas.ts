/** Canvas rendering. The drawing surface is structurally typed to the small
 * subset of CanvasRenderingContext2D the scene needs, so tests can pass a
 * recording stub instead of a real browser context.
 */

import { rectFromDrag, DragCorners } from "./geometry.js";
import { CanvasBox } from "./session.js";

export interface Canvas2D {
  lineWidth: number;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  setLineDash(segments: number[]): void;
  drawImage(image: CanvasImageSource, x: number, y: number, w: number, h: number): void;
}

export interface SceneView {
  width: number;
  height: number;
  image: CanvasImageSource | null;
  boxes: CanvasBox[];
  draft: DragCorners | null;
}

const PALETTE = ["#4ec9b0", "#dcdcaa", "#c586c0", "#9cdcfe", "#ce9178", "#b5cea8"];
const DELETED = "#6b6b6b";
const BACKDROP = "#1b1f24";

export function classColor(id: number): string {
  return PALETTE[((id % PALETTE.length) + PALETTE.length) % PALETTE.length]!;
}

export function boxLabel(box: CanvasBox, name: string): string {
  return box.confidence === undefined ? name : `${name} ${box.confidence.toFixed(2)}`;
}

export function drawScene(
  ctx: Canvas2D,
  view: SceneView,
  nameOf: (id: number) => string,
): void {
  ctx.clearRect(0, 0, view.width, view.height);
  if (view.image !== null) {
    ctx.drawImage(view.image, 0, 0, view.width, view.height);
  } else {
    ctx.fillStyle = BACKDROP;
    ctx.fillRect(0, 0, view.width, view.height);
  }
  ctx.font = "12px sans-serif";
  for (const box of view.boxes) {
    const color = box.state === "deleted" ? DELETED : classColor(box.classId);
    ctx.setLineDash(box.state === "deleted" ? [4, 4] : []);
    ctx.lineWidth = 2;
    ctx.strokeStyle = color;
    ctx.strokeRect(box.rect.x, box.rect.y, box.rect.w, box.rect.h);
    if (box.state === "kept") {
      ctx.fillStyle = color;
      ctx.fillText(
        boxLabel(box, box.className ?? nameOf(box.classId)),
        box.rect.x + 2,
        Math.max(box.rect.y - 4, 10),
      );
    }
  }
  if (view.draft !== null) {
    const r = rectFromDrag(view.draft);
    ctx.setLineDash([6, 4]);
    ctx.lineWidth = 1;
    ctx.strokeStyle = "#ffffff";
    ctx.strokeRect(r.x, r.y, r.w, r.h);
  }
  ctx.setLineDash([]);
}

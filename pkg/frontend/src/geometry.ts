/** Pixel-space box geometry for the annotation canvas.
 *
 * Boxes live in two coordinate systems: image pixels (top-left origin, what
 * the canvas draws) and the wire's normalized center format (cx, cy, w, h as
 * fractions of the frame). Conversions are exact float arithmetic, so a
 * round trip stays well under the 1 px budget at any resolution.
 */

export const MIN_DRAG_PX = 4;

export interface PixelRect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface NormalizedBox {
  class_id: number;
  cx: number;
  cy: number;
  w: number;
  h: number;
}

export interface DragCorners {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export function rectFromDrag(d: DragCorners): PixelRect {
  const x = Math.min(d.x0, d.x1);
  const y = Math.min(d.y0, d.y1);
  return { x, y, w: Math.abs(d.x1 - d.x0), h: Math.abs(d.y1 - d.y0) };
}

/** Clip a rect to the frame; a rect fully outside collapses to zero size. */
export function clampRect(r: PixelRect, width: number, height: number): PixelRect {
  const x0 = Math.min(Math.max(r.x, 0), width);
  const y0 = Math.min(Math.max(r.y, 0), height);
  const x1 = Math.min(Math.max(r.x + r.w, 0), width);
  const y1 = Math.min(Math.max(r.y + r.h, 0), height);
  return { x: x0, y: y0, w: x1 - x0, h: y1 - y0 };
}

/** Accidental-click filter: drags under the threshold in either dimension. */
export function tooSmall(r: PixelRect): boolean {
  return r.w < MIN_DRAG_PX || r.h < MIN_DRAG_PX;
}

export function pixelToNormalized(
  r: PixelRect,
  classId: number,
  width: number,
  height: number,
): NormalizedBox {
  return {
    class_id: classId,
    cx: (r.x + r.w / 2) / width,
    cy: (r.y + r.h / 2) / height,
    w: r.w / width,
    h: r.h / height,
  };
}

export function normalizedToPixel(
  b: { cx: number; cy: number; w: number; h: number },
  width: number,
  height: number,
): PixelRect {
  const w = b.w * width;
  const h = b.h * height;
  return { x: b.cx * width - w / 2, y: b.cy * height - h / 2, w, h };
}

export function containsPoint(r: PixelRect, x: number, y: number): boolean {
  return x >= r.x && x <= r.x + r.w && y >= r.y && y <= r.y + r.h;
}

// Brush-stroke region masks rasterized at the image's intrinsic resolution.
// A pixel is inside a stroke when its distance to the stroke polyline is at
// most the brush radius (inclusive), matching a per-pixel distance oracle.

import { encodeGrayPng } from "./png.js";

export class EmptyMaskError extends Error {
  constructor() {
    super("mask has no strokes");
  }
}

export interface StrokePoint {
  x: number;
  y: number;
}

export interface Stroke {
  radius: number;
  points: StrokePoint[];
}

export interface CanvasMask {
  width: number;
  height: number;
  strokes: Stroke[];
}

function distanceToSegmentSquared(px: number, py: number, a: StrokePoint, b: StrokePoint): number {
  const dx = b.x - a.x;
  const dy = b.y - a.y;
  const lengthSq = dx * dx + dy * dy;
  let t = 0;
  if (lengthSq > 0) {
    t = Math.max(0, Math.min(1, ((px - a.x) * dx + (py - a.y) * dy) / lengthSq));
  }
  const cx = a.x + t * dx;
  const cy = a.y + t * dy;
  return (px - cx) * (px - cx) + (py - cy) * (py - cy);
}

function paintStroke(raster: Uint8Array, width: number, height: number, stroke: Stroke): void {
  const r = stroke.radius;
  const rSq = r * r;
  const segments: [StrokePoint, StrokePoint][] = [];
  if (stroke.points.length === 1) {
    segments.push([stroke.points[0], stroke.points[0]]);
  } else {
    for (let i = 0; i + 1 < stroke.points.length; i++) {
      segments.push([stroke.points[i], stroke.points[i + 1]]);
    }
  }
  for (const [a, b] of segments) {
    const x0 = Math.max(0, Math.floor(Math.min(a.x, b.x) - r));
    const x1 = Math.min(width - 1, Math.ceil(Math.max(a.x, b.x) + r));
    const y0 = Math.max(0, Math.floor(Math.min(a.y, b.y) - r));
    const y1 = Math.min(height - 1, Math.ceil(Math.max(a.y, b.y) + r));
    for (let y = y0; y <= y1; y++) {
      for (let x = x0; x <= x1; x++) {
        if (distanceToSegmentSquared(x, y, a, b) <= rSq) {
          raster[y * width + x] = 255;
        }
      }
    }
  }
}

/** Render the strokes to a binary raster (0 outside, 255 inside). */
export function rasterizeMask(mask: CanvasMask): Uint8Array {
  const raster = new Uint8Array(mask.width * mask.height);
  for (const stroke of mask.strokes) {
    if (stroke.points.length === 0) continue;
    paintStroke(raster, mask.width, mask.height, stroke);
  }
  return raster;
}

/** Export as a single-channel PNG at image resolution; requires >= 1 stroke. */
export function exportMask(mask: CanvasMask): Uint8Array {
  if (mask.strokes.filter((s) => s.points.length > 0).length === 0) {
    throw new EmptyMaskError();
  }
  return encodeGrayPng(mask.width, mask.height, rasterizeMask(mask));
}

/** One stroke whose disc sweep covers the whole raster. */
export function fullCoverageStroke(width: number, height: number): Stroke {
  const radius = Math.hypot(width, height); // reaches every pixel from the center line
  return { radius, points: [{ x: 0, y: height / 2 }, { x: width - 1, y: height / 2 }] };
}

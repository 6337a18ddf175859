import { describe, expect, it } from "vitest";

import {
  EmptyMaskError,
  exportMask,
  fullCoverageStroke,
  rasterizeMask,
  type CanvasMask,
  type Stroke,
} from "../src/mask.js";
import { decodeGrayPng, readPngHeader } from "../src/png.js";

function distanceToSegment(px: number, py: number, a: { x: number; y: number }, b: { x: number; y: number }): number {
  const dx = b.x - a.x;
  const dy = b.y - a.y;
  const lengthSq = dx * dx + dy * dy;
  const t = lengthSq === 0 ? 0 : Math.max(0, Math.min(1, ((px - a.x) * dx + (py - a.y) * dy) / lengthSq));
  return Math.hypot(px - (a.x + t * dx), py - (a.y + t * dy));
}

/** Independent per-pixel oracle: a pixel is set iff some stroke covers it. */
function oracleCount(width: number, height: number, strokes: Stroke[]): number {
  let count = 0;
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      let inside = false;
      for (const stroke of strokes) {
        const pts = stroke.points;
        if (pts.length === 1 && Math.hypot(x - pts[0].x, y - pts[0].y) <= stroke.radius) inside = true;
        for (let i = 0; i + 1 < pts.length && !inside; i++) {
          if (distanceToSegment(x, y, pts[i], pts[i + 1]) <= stroke.radius) inside = true;
        }
        if (inside) break;
      }
      if (inside) count++;
    }
  }
  return count;
}

describe("canvas mask export", () => {
  it("zero strokes raise EmptyMaskError", () => {
    const mask: CanvasMask = { width: 64, height: 64, strokes: [] };
    expect(() => exportMask(mask)).toThrow(EmptyMaskError);
  });

  it("full-coverage stroke yields all-255", () => {
    const mask: CanvasMask = { width: 64, height: 64, strokes: [fullCoverageStroke(64, 64)] };
    const decoded = decodeGrayPng(exportMask(mask));
    expect(decoded.width).toBe(64);
    expect(decoded.height).toBe(64);
    expect(decoded.pixels.every((v) => v === 255)).toBe(true);
  });

  it("disc at (10,10) radius 5 matches the per-pixel distance oracle", () => {
    const strokes: Stroke[] = [{ radius: 5, points: [{ x: 10, y: 10 }] }];
    const raster = rasterizeMask({ width: 64, height: 64, strokes });
    let set = 0;
    raster.forEach((v) => {
      if (v === 255) set++;
    });
    expect(set).toBe(oracleCount(64, 64, strokes));
    expect(set).toBeGreaterThan(60); // pi * 25 ≈ 78 lattice points, clipped none
  });

  it("polyline stroke matches the oracle", () => {
    const strokes: Stroke[] = [
      { radius: 3.5, points: [{ x: 8, y: 8 }, { x: 40, y: 20 }, { x: 12, y: 44 }] },
      { radius: 2, points: [{ x: 55, y: 55 }] },
    ];
    const raster = rasterizeMask({ width: 64, height: 64, strokes });
    let set = 0;
    raster.forEach((v) => {
      if (v === 255) set++;
    });
    expect(set).toBe(oracleCount(64, 64, strokes));
  });

  it("raster matches the image's intrinsic dimensions", () => {
    const mask: CanvasMask = { width: 48, height: 30, strokes: [{ radius: 4, points: [{ x: 5, y: 5 }] }] };
    const header = readPngHeader(exportMask(mask));
    expect(header.width).toBe(48);
    expect(header.height).toBe(30);
    expect(header.colorType).toBe(0); // single channel
  });

  it("strokes near the edge are clipped, not wrapped", () => {
    const strokes: Stroke[] = [{ radius: 6, points: [{ x: 0, y: 0 }] }];
    const raster = rasterizeMask({ width: 32, height: 32, strokes });
    let set = 0;
    raster.forEach((v) => {
      if (v === 255) set++;
    });
    expect(set).toBe(oracleCount(32, 32, strokes));
    expect(raster[31]).toBe(0); // far corner of the first row untouched
  });
});

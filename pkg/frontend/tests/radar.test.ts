import { describe, expect, it } from "vitest";

import { buildRadarSvg } from "../src/radar.js";

describe("score radar", () => {
  it("draws ten axes with labels and a threshold ring", () => {
    const svg = buildRadarSvg([7.5, 8.5, 8, 8, 8, 8, 6, 6.5, 8, 8], 8.0);
    expect(svg.startsWith("<svg")).toBe(true);
    expect((svg.match(/radar-axis/g) ?? []).length).toBe(10);
    expect((svg.match(/<text/g) ?? []).length).toBe(10);
    expect(svg).toContain("radar-threshold");
    expect(svg).toContain("radar-value");
  });

  it("scales a full-score polygon to the outer ring", () => {
    const svg = buildRadarSvg(Array(10).fill(10), 8.0);
    const valuePoints = /class="radar-value"/.exec(svg);
    expect(valuePoints).not.toBeNull();
    // topmost vertex of a 10/10 polygon sits at the axis tip (center - radius)
    expect(svg).toContain("130.0,38.0");
  });

  it("rejects wrong arity", () => {
    expect(() => buildRadarSvg([1, 2, 3], 8.0)).toThrow(/expected 10 values/);
  });
});

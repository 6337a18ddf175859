// Ten-axis score radar as an SVG string, with a ring at the threshold so a
// regeneration verdict is visually obvious.

import { SCORE_KEYS } from "./types.js";

const SIZE = 260;
const CENTER = SIZE / 2;
const RADIUS = 92;

const SHORT_LABELS: Record<string, string> = {
  composition: "comp",
  color_harmony: "color",
  lighting_exposure: "light",
  focus_sharpness: "focus",
  emotional_impact: "emotion",
  uniqueness_creativity: "unique",
  main_subjects_presence: "subjects",
  spatial_accuracy: "spatial",
  style_adherence: "style",
  background_representation: "bg",
};

function point(axis: number, value: number): [number, number] {
  const angle = (Math.PI * 2 * axis) / SCORE_KEYS.length - Math.PI / 2;
  const r = (value / 10) * RADIUS;
  return [CENTER + r * Math.cos(angle), CENTER + r * Math.sin(angle)];
}

function polygon(values: number[]): string {
  return values.map((v, i) => point(i, v).map((c) => c.toFixed(1)).join(",")).join(" ");
}

export function buildRadarSvg(values: number[], threshold: number): string {
  if (values.length !== SCORE_KEYS.length) {
    throw new Error(`expected ${SCORE_KEYS.length} values, got ${values.length}`);
  }
  const axes = SCORE_KEYS.map((key, i) => {
    const [x, y] = point(i, 10);
    const [lx, ly] = point(i, 12.3);
    return (
      `<line x1="${CENTER}" y1="${CENTER}" x2="${x.toFixed(1)}" y2="${y.toFixed(1)}" class="radar-axis"/>` +
      `<text x="${lx.toFixed(1)}" y="${ly.toFixed(1)}" class="radar-label">${SHORT_LABELS[key]}</text>`
    );
  }).join("");
  const rings = [2.5, 5, 7.5, 10]
    .map((r) => `<polygon points="${polygon(values.map(() => r))}" class="radar-ring"/>`)
    .join("");
  const thresholdRing = `<polygon points="${polygon(values.map(() => threshold))}" class="radar-threshold"/>`;
  const valuePolygon = `<polygon points="${polygon(values)}" class="radar-value"/>`;
  return (
    `<svg viewBox="0 0 ${SIZE} ${SIZE}" class="radar">` +
    rings + axes + thresholdRing + valuePolygon +
    `</svg>`
  );
}

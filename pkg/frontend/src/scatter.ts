/** Scatter projection of chain samples over two parameters.
 *
 * Pure helpers (decimation, projection, coloring, hit-testing) are separated
 * from the canvas drawing so they test without a DOM.  Axis ranges come from
 * the model manifest's truncation bounds; points are colored by negative log
 * posterior, low values warm.
 */

import { ContinuousParamInfo, Manifest, SampleRecord } from "./types.js";

export interface ProjectedPoint {
  x: number;        // parameter units
  y: number;
  nlp: number;
  index: number;    // index into the loaded sample list
}

export const DECIMATION_THRESHOLD = 20_000;

/** Stride-decimate above the threshold, always retaining the min-nlp point. */
export function decimate(points: ProjectedPoint[],
                         threshold: number = DECIMATION_THRESHOLD): ProjectedPoint[] {
  if (points.length <= threshold) return points;
  const stride = Math.ceil(points.length / threshold);
  let best = 0;
  points.forEach((p, i) => {
    if (p.nlp < points[best].nlp) best = i;
  });
  const kept = points.filter((_, i) => i % stride === 0);
  if (best % stride !== 0) {
    kept.push(points[best]);
  }
  return kept;
}

export function project(samples: SampleRecord[], manifest: Manifest,
                        xName: string, yName: string): ProjectedPoint[] {
  const xi = paramIndex(manifest, xName);
  const yi = paramIndex(manifest, yName);
  return samples.map((s, index) => ({
    x: s.theta_c[xi],
    y: s.theta_c[yi],
    nlp: s.nlp,
    index,
  }));
}

export function paramIndex(manifest: Manifest, name: string): number {
  const i = manifest.continuous.findIndex((p) => p.name === name);
  if (i < 0) throw new Error(`unknown parameter name '${name}'`);
  return i;
}

export function paramInfo(manifest: Manifest, name: string): ContinuousParamInfo {
  return manifest.continuous[paramIndex(manifest, name)];
}

/** Map nlp onto [0, 1] where 0 = lowest nlp (drawn warm). */
export function nlpToUnit(nlp: number, lo: number, hi: number): number {
  if (!(hi > lo)) return 0;
  return Math.min(1, Math.max(0, (nlp - lo) / (hi - lo)));
}

/** Warm (low nlp) to cold (high nlp) color ramp. */
export function heatColor(unit: number): string {
  const r = Math.round(255 * (1 - unit * 0.75));
  const g = Math.round(90 + 60 * (1 - unit));
  const b = Math.round(40 + 215 * unit);
  return `rgb(${r},${g},${b})`;
}

export interface PlotTransform {
  toPx(x: number, y: number): [number, number];
  fromPx(px: number, py: number): [number, number];
}

export function makeTransform(xInfo: ContinuousParamInfo, yInfo: ContinuousParamInfo,
                              width: number, height: number,
                              margin = 40): PlotTransform {
  const sx = (width - 2 * margin) / (xInfo.high - xInfo.low);
  const sy = (height - 2 * margin) / (yInfo.high - yInfo.low);
  return {
    toPx: (x, y) => [
      margin + (x - xInfo.low) * sx,
      height - margin - (y - yInfo.low) * sy,
    ],
    fromPx: (px, py) => [
      xInfo.low + (px - margin) / sx,
      yInfo.low + (height - margin - py) / sy,
    ],
  };
}

/** Nearest projected point within `radius` pixels, or null. */
export function hitTest(points: ProjectedPoint[], t: PlotTransform,
                        px: number, py: number, radius = 8): ProjectedPoint | null {
  let best: ProjectedPoint | null = null;
  let bestD = radius * radius;
  for (const p of points) {
    const [qx, qy] = t.toPx(p.x, p.y);
    const d = (qx - px) * (qx - px) + (qy - py) * (qy - py);
    if (d <= bestD) {
      bestD = d;
      best = p;
    }
  }
  return best;
}

export function drawScatter(ctx: CanvasRenderingContext2D, points: ProjectedPoint[],
                            xInfo: ContinuousParamInfo, yInfo: ContinuousParamInfo,
                            selected: number | null): PlotTransform {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  const t = makeTransform(xInfo, yInfo, width, height);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(40, 40, width - 80, height - 80);
  ctx.fillStyle = "#ccc";
  ctx.font = "12px sans-serif";
  ctx.fillText(xInfo.name, width / 2 - 20, height - 12);
  ctx.save();
  ctx.translate(14, height / 2 + 20);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(yInfo.name, 0, 0);
  ctx.restore();

  let lo = Infinity;
  let hi = -Infinity;
  for (const p of points) {
    if (p.nlp < lo) lo = p.nlp;
    if (p.nlp > hi) hi = p.nlp;
  }
  for (const p of points) {
    const [px, py] = t.toPx(p.x, p.y);
    ctx.fillStyle = heatColor(nlpToUnit(p.nlp, lo, hi));
    ctx.fillRect(px - 1.5, py - 1.5, 3, 3);
  }
  if (selected !== null) {
    const p = points.find((q) => q.index === selected);
    if (p) {
      const [px, py] = t.toPx(p.x, p.y);
      ctx.strokeStyle = "#fff";
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.arc(px, py, 6, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
  return t;
}

/** Per-parameter and nlp trace plots with the burn-in prefix shaded. */

import { Manifest, SampleRecord } from "./types.js";

export interface TraceSeries {
  name: string;
  t: number[];
  values: number[];
}

export function buildTraces(samples: SampleRecord[], manifest: Manifest,
                            stride: number = 1): TraceSeries[] {
  if (stride < 1) throw new Error("stride must be >= 1");
  const picked = samples.filter((_, i) => i % stride === 0);
  const series: TraceSeries[] = manifest.continuous.map((p, i) => ({
    name: p.name,
    t: picked.map((s) => s.t),
    values: picked.map((s) => s.theta_c[i]),
  }));
  series.push({
    name: "nlp",
    t: picked.map((s) => s.t),
    values: picked.map((s) => s.nlp),
  });
  return series;
}

export function minNlp(samples: SampleRecord[]): number {
  return samples.reduce((m, s) => Math.min(m, s.nlp), Infinity);
}

export function drawTrace(ctx: CanvasRenderingContext2D, series: TraceSeries,
                          burnIn: number): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  if (series.t.length === 0) return;
  const tMax = Math.max(series.t[series.t.length - 1], 1);
  let lo = Math.min(...series.values);
  let hi = Math.max(...series.values);
  if (hi === lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const toX = (t: number) => (t / tMax) * (width - 50) + 45;
  const toY = (v: number) => height - 18 - ((v - lo) / (hi - lo)) * (height - 30);

  if (burnIn > 0 && series.t[0] < burnIn) {
    ctx.fillStyle = "rgba(255, 200, 80, 0.12)";
    ctx.fillRect(toX(series.t[0]), 0, toX(Math.min(burnIn, tMax)) - toX(series.t[0]), height);
  }
  ctx.strokeStyle = "#6cf";
  ctx.lineWidth = 1;
  ctx.beginPath();
  series.t.forEach((t, i) => {
    const x = toX(t);
    const y = toY(series.values[i]);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.fillStyle = "#ccc";
  ctx.font = "11px sans-serif";
  ctx.fillText(series.name, 6, 12);
  ctx.fillText(hi.toPrecision(4), 6, 24);
  ctx.fillText(lo.toPrecision(4), 6, height - 6);
}

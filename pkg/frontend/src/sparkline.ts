// Minimal SVG sparkline: pure string builder, trivially testable.

import type { HistoryPoint } from "./store";

export function sparklinePath(
  points: HistoryPoint[],
  width: number,
  height: number,
  yMin?: number,
  yMax?: number,
): string {
  if (points.length === 0) return "";
  const values = points.map((p) => p.value);
  const lo = yMin ?? Math.min(...values);
  const hi = yMax ?? Math.max(...values);
  const span = hi - lo || 1;
  const t0 = points[0]!.t;
  const t1 = points[points.length - 1]!.t;
  const tSpan = t1 - t0 || 1;
  return points
    .map((p, index) => {
      const x = ((p.t - t0) / tSpan) * width;
      const y = height - ((p.value - lo) / span) * height;
      return `${index === 0 ? "M" : "L"}${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
}

export function sparklineSvg(
  points: HistoryPoint[],
  width = 220,
  height = 48,
  yMin?: number,
  yMax?: number,
): string {
  const path = sparklinePath(points, width, height, yMin, yMax);
  return (
    `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" ` +
    `preserveAspectRatio="none"><path d="${path}" fill="none" stroke="currentColor" ` +
    `stroke-width="1.5"/></svg>`
  );
}

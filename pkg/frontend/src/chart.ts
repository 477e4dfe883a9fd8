/** Tiny SVG line chart for the per-session metric history. Pure string
 * builders so tests can check geometry without a DOM. */

export interface ChartPoint {
  x: number;
  y: number;
}

export function chartPoints(values: number[], width: number, height: number, pad = 4): ChartPoint[] {
  if (values.length === 0) return [];
  const max = Math.max(...values, 1e-9);
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const step = values.length > 1 ? innerW / (values.length - 1) : 0;
  return values.map((v, i) => ({
    x: pad + (values.length > 1 ? i * step : innerW / 2),
    y: pad + innerH * (1 - v / max),
  }));
}

export function polylineAttr(points: ChartPoint[]): string {
  return points.map((p) => `${p.x.toFixed(1)},${p.y.toFixed(1)}`).join(" ");
}

export function renderChartSvg(values: number[], width = 280, height = 80): string {
  const points = chartPoints(values, width, height);
  const line =
    points.length > 1
      ? `<polyline fill="none" stroke="#2b6cb0" stroke-width="2" points="${polylineAttr(points)}" />`
      : "";
  const dots = points
    .map((p) => `<circle cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="3" fill="#2b6cb0" />`)
    .join("");
  return `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" role="img">${line}${dots}</svg>`;
}

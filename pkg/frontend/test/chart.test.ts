import { describe, expect, it } from "vitest";

import { chartPoints, renderChartSvg } from "../src/chart";

describe("chartPoints", () => {
  it("returns one point per value", () => {
    expect(chartPoints([0.1, 0.2, 0.3], 100, 40)).toHaveLength(3);
    expect(chartPoints([], 100, 40)).toHaveLength(0);
  });

  it("higher values sit higher on the canvas", () => {
    const [low, high] = chartPoints([0.1, 0.9], 100, 40);
    expect(high.y).toBeLessThan(low.y); // svg y grows downward
  });

  it("points stay inside the viewbox", () => {
    for (const p of chartPoints([0, 0.5, 1, 0.25], 120, 60)) {
      expect(p.x).toBeGreaterThanOrEqual(0);
      expect(p.x).toBeLessThanOrEqual(120);
      expect(p.y).toBeGreaterThanOrEqual(0);
      expect(p.y).toBeLessThanOrEqual(60);
    }
  });
});

describe("renderChartSvg", () => {
  it("draws one dot per completed session", () => {
    const svg = renderChartSvg([0.2, 0.4, 0.5]);
    expect(svg.match(/<circle/g)).toHaveLength(3);
    expect(svg).toContain("<polyline");
  });

  it("a single session gets a dot but no line", () => {
    const svg = renderChartSvg([0.3]);
    expect(svg.match(/<circle/g)).toHaveLength(1);
    expect(svg).not.toContain("<polyline");
  });
});

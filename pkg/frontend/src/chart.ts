/**
 * Rolling glare chart: before/after severity over the 9-point band zones,
 * with transmittance as a secondary trace. Geometry is pure and testable;
 * rendering writes SVG.
 */

import { BandRect, bandRects, scoreToY } from "./bands.js";

export interface GlarePoint {
  t: number;
  before: number;
  after: number;
  transmittance: number;
}

export class RollingSeries {
  private points: GlarePoint[] = [];

  constructor(readonly capacity: number = 120) {}

  push(point: GlarePoint): void {
    this.points.push(point);
    if (this.points.length > this.capacity) {
      this.points.splice(0, this.points.length - this.capacity);
    }
  }

  values(): readonly GlarePoint[] {
    return this.points;
  }

  clear(): void {
    this.points = [];
  }
}

export interface ChartGeometry {
  bands: BandRect[];
  beforePath: string;
  afterPath: string;
  transmittancePath: string;
}

function polyline(
  points: readonly GlarePoint[],
  width: number,
  height: number,
  pick: (p: GlarePoint) => number,
): string {
  if (points.length === 0) return "";
  const t0 = points[0].t;
  const span = Math.max(points[points.length - 1].t - t0, 1e-9);
  const steps = points.map((p, i) => {
    const x = points.length === 1 ? width : ((p.t - t0) / span) * width;
    const y = scoreToY(pick(p), height);
    return `${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`;
  });
  return steps.join(" ");
}

export function chartGeometry(
  points: readonly GlarePoint[],
  width: number,
  height: number,
): ChartGeometry {
  return {
    bands: bandRects(height),
    beforePath: polyline(points, width, height, (p) => p.before),
    afterPath: polyline(points, width, height, (p) => p.after),
    // transmittance is already a [0, 1] fraction; reuse the score scale
    transmittancePath: polyline(points, width, height, (p) => p.transmittance),
  };
}

const SVG_NS = "http://www.w3.org/2000/svg";

export function renderChart(svg: SVGSVGElement, points: readonly GlarePoint[]): void {
  const width = svg.viewBox.baseVal.width || svg.clientWidth || 600;
  const height = svg.viewBox.baseVal.height || svg.clientHeight || 240;
  const geometry = chartGeometry(points, width, height);

  svg.replaceChildren();
  const bandLayer = document.createElementNS(SVG_NS, "g");
  bandLayer.setAttribute("class", "bands");
  for (const band of geometry.bands) {
    const rect = document.createElementNS(SVG_NS, "rect");
    rect.setAttribute("x", "0");
    rect.setAttribute("width", String(width));
    rect.setAttribute("y", band.y.toFixed(3));
    rect.setAttribute("height", band.height.toFixed(3));
    rect.setAttribute("fill", band.color);
    rect.setAttribute("fill-opacity", "0.16");
    rect.setAttribute("data-rating", String(band.rating));
    bandLayer.appendChild(rect);
  }
  svg.appendChild(bandLayer);

  const traces: Array<[string, string]> = [
    [geometry.beforePath, "trace-before"],
    [geometry.afterPath, "trace-after"],
    [geometry.transmittancePath, "trace-trans"],
  ];
  for (const [d, cls] of traces) {
    if (!d) continue;
    const path = document.createElementNS(SVG_NS, "path");
    path.setAttribute("d", d);
    path.setAttribute("class", cls);
    path.setAttribute("fill", "none");
    svg.appendChild(path);
  }
}

import type { DataStream, SeriesPayload } from "./types";

const NS = "http://www.w3.org/2000/svg";
const WIDTH = 640;
const HEIGHT = 240;
const PAD = { left: 48, right: 12, top: 12, bottom: 24 };

function svgEl<K extends keyof SVGElementTagNameMap>(tag: K): SVGElementTagNameMap[K] {
  return document.createElementNS(NS, tag);
}

interface Extent {
  t0: number;
  t1: number;
  y0: number;
  y1: number;
}

function extentOf(points: number[][]): Extent {
  let t0 = Infinity, t1 = -Infinity, y0 = Infinity, y1 = -Infinity;
  for (const row of points) {
    t0 = Math.min(t0, row[0]);
    t1 = Math.max(t1, row[0]);
    for (const y of row.slice(1)) {
      y0 = Math.min(y0, y);
      y1 = Math.max(y1, y);
    }
  }
  if (t0 === t1) { t0 -= 1; t1 += 1; }
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  return { t0, t1, y0, y1 };
}

function scales(ext: Extent) {
  const sx = (t: number) =>
    PAD.left + ((t - ext.t0) / (ext.t1 - ext.t0)) * (WIDTH - PAD.left - PAD.right);
  const sy = (y: number) =>
    HEIGHT - PAD.bottom - ((y - ext.y0) / (ext.y1 - ext.y0)) * (HEIGHT - PAD.top - PAD.bottom);
  return { sx, sy };
}

function axes(svg: SVGSVGElement, ext: Extent): void {
  const { sx, sy } = scales(ext);
  const axis = svgEl("path");
  axis.setAttribute("class", "axes");
  axis.setAttribute(
    "d",
    `M ${sx(ext.t0)} ${sy(ext.y1)} L ${sx(ext.t0)} ${sy(ext.y0)} L ${sx(ext.t1)} ${sy(ext.y0)}`,
  );
  axis.setAttribute("fill", "none");
  svg.append(axis);
  const labels: [number, number, string][] = [
    [PAD.left - 4, sy(ext.y0), String(Math.round(ext.y0 * 100) / 100)],
    [PAD.left - 4, sy(ext.y1), String(Math.round(ext.y1 * 100) / 100)],
  ];
  for (const [x, y, text] of labels) {
    const el = svgEl("text");
    el.setAttribute("x", String(x));
    el.setAttribute("y", String(y));
    el.setAttribute("class", "axis-label");
    el.setAttribute("text-anchor", "end");
    el.textContent = text;
    svg.append(el);
  }
}

/** Declarative SVG chart for a series stream. Plain rows [t, y] render as a
 * polyline with one vertex per point; envelope rows [t, min, max] render as a
 * band polygon (2n vertices) plus a midline. An empty stream renders an
 * explicit no-data message instead of axes. */
export function renderTimeseries(stream: DataStream): HTMLElement {
  const container = document.createElement("div");
  container.className = "chart";
  const payload = stream.payload as SeriesPayload;
  const points = payload.points ?? [];

  if (points.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "no data in window";
    container.append(empty);
    return container;
  }

  const svg = svgEl("svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("role", "img");
  const ext = extentOf(points);
  const { sx, sy } = scales(ext);
  axes(svg, ext);

  const banded = points[0].length >= 3;
  if (banded) {
    const upper = points.map((p) => `${sx(p[0])},${sy(p[2])}`);
    const lower = [...points].reverse().map((p) => `${sx(p[0])},${sy(p[1])}`);
    const band = svgEl("polygon");
    band.setAttribute("class", "series-band");
    band.setAttribute("points", [...upper, ...lower].join(" "));
    svg.append(band);
    const mid = svgEl("polyline");
    mid.setAttribute("class", "series-line");
    mid.setAttribute("fill", "none");
    mid.setAttribute(
      "points",
      points.map((p) => `${sx(p[0])},${sy((p[1] + p[2]) / 2)}`).join(" "),
    );
    svg.append(mid);
  } else {
    const line = svgEl("polyline");
    line.setAttribute("class", "series-line");
    line.setAttribute("fill", "none");
    line.setAttribute("points", points.map((p) => `${sx(p[0])},${sy(p[1])}`).join(" "));
    svg.append(line);
  }

  container.append(svg);
  return container;
}

/**
 * SVG figure rendering from trace tables.
 *
 * Two modes: metric curves (y column vs iter/fevals, log-log or semilog-y)
 * and 2-D iterate trajectories (x-y path overlay). Output is a plain SVG
 * string, a pure function of the inputs.
 */

import { Table, column } from "./csv.js";
import { Scale, linearScale, logScale, tickLabel } from "./scale.js";

export type XColumn = "iter" | "fevals";
export type YColumn = "gap" | "grad_norm" | "min_grad_norm_sq" | "alpha" | "dist";
export type ScaleKind = "loglog" | "semilogy";

export interface SeriesInput {
  /** parsed trace table */
  table: Table;
  label: string;
  /** source name, for error messages */
  source: string;
}

export interface CurveOptions {
  x: XColumn;
  y: YColumn;
  scale: ScaleKind;
  title?: string;
  /** draw a dashed y ~ x^slope guide anchored at the first series */
  slopeGuide?: number;
}

export interface TrajectoryOptions {
  title?: string;
}

const W = 720;
const H = 480;
const MARGIN = { l: 70, r: 18, t: 34, b: 48 };
const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

const fmt = (v: number) => (Number.isInteger(v) ? String(v) : v.toFixed(2));

function polyline(pts: Array<[number, number]>, color: string, dash = ""): string {
  const d = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
  return `<polyline fill="none" stroke="${color}" stroke-width="1.6"${dashAttr} points="${d}"/>`;
}

function text(x: number, y: number, s: string, opts = ""): string {
  return `<text x="${fmt(x)}" y="${fmt(y)}" font-family="sans-serif" font-size="12" ${opts}>${s}</text>`;
}

function axes(xs: Scale, ys: Scale, xLog: boolean, yLog: boolean,
              xLabel: string, yLabel: string): string {
  const parts: string[] = [];
  const x0 = MARGIN.l, x1 = W - MARGIN.r, y0 = H - MARGIN.b, y1 = MARGIN.t;
  parts.push(`<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#333" stroke-width="1"/>`);
  for (const t of xs.ticks()) {
    const px = xs.map(t);
    if (px < x0 - 0.5 || px > x1 + 0.5) continue;
    parts.push(`<line x1="${fmt(px)}" y1="${y1}" x2="${fmt(px)}" y2="${y0}" stroke="#ddd" stroke-width="0.5"/>`);
    parts.push(text(px - 10, y0 + 16, tickLabel(t, xLog)));
  }
  for (const t of ys.ticks()) {
    const py = ys.map(t);
    if (py < y1 - 0.5 || py > y0 + 0.5) continue;
    parts.push(`<line x1="${x0}" y1="${fmt(py)}" x2="${x1}" y2="${fmt(py)}" stroke="#ddd" stroke-width="0.5"/>`);
    parts.push(text(x0 - 8, py + 4, tickLabel(t, yLog), 'text-anchor="end"'));
  }
  parts.push(text((x0 + x1) / 2, H - 10, xLabel, 'text-anchor="middle"'));
  parts.push(text(14, (y0 + y1) / 2, yLabel,
    `text-anchor="middle" transform="rotate(-90 14 ${fmt((y0 + y1) / 2)})"`));
  return parts.join("\n");
}

function legend(labels: string[], extra: Array<[string, string]> = []): string {
  const parts: string[] = [];
  let y = MARGIN.t + 14;
  const x = W - MARGIN.r - 180;
  const entries: Array<[string, string, string]> = labels.map(
    (l, i) => [l, PALETTE[i % PALETTE.length], ""]);
  for (const [l, color] of extra) entries.push([l, color, "4 3"]);
  for (const [label, color, dash] of entries) {
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    parts.push(`<line x1="${x}" y1="${y - 4}" x2="${x + 24}" y2="${y - 4}" stroke="${color}" stroke-width="2"${dashAttr}/>`);
    parts.push(text(x + 30, y, escapeXml(label)));
    y += 16;
  }
  return parts.join("\n");
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function document(body: string, title?: string): string {
  const t = title ? text(W / 2, 20, escapeXml(title), 'text-anchor="middle" font-size="14"') : "";
  return `<?xml version="1.0" encoding="UTF-8"?>\n` +
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">\n` +
    `<rect width="${W}" height="${H}" fill="white"/>\n${t}\n${body}\n</svg>\n`;
}

export function renderCurves(series: SeriesInput[], opts: CurveOptions): string {
  if (series.length === 0) {
    throw new Error("need at least one series");
  }
  const xLog = opts.scale === "loglog";
  const cleaned = series.map((s) => {
    const xsRaw = column(s.table, opts.x, s.source);
    const ysRaw = column(s.table, opts.y, s.source);
    const pts: Array<[number, number]> = [];
    for (let i = 0; i < xsRaw.length; i++) {
      const x = xsRaw[i], y = ysRaw[i];
      if (!Number.isFinite(x) || !Number.isFinite(y)) continue;
      if (y <= 0) continue; // log y-axis in both modes
      if (xLog && x <= 0) continue;
      pts.push([x, y]);
    }
    if (pts.length === 0) {
      throw new Error(`${s.source}: no plottable points for ${opts.y} (all empty or nonpositive)`);
    }
    return pts;
  });

  let xMin = Infinity, xMax = -Infinity, yMin = Infinity, yMax = -Infinity;
  for (const pts of cleaned) {
    for (const [x, y] of pts) {
      xMin = Math.min(xMin, x); xMax = Math.max(xMax, x);
      yMin = Math.min(yMin, y); yMax = Math.max(yMax, y);
    }
  }
  const xs = xLog
    ? logScale(xMin, xMax, MARGIN.l, W - MARGIN.r)
    : linearScale(xMin, xMax, MARGIN.l, W - MARGIN.r);
  const ys = logScale(yMin, yMax, H - MARGIN.b, MARGIN.t);

  const body: string[] = [];
  body.push(axes(xs, ys, xLog, true, opts.x, opts.y));
  cleaned.forEach((pts, i) => {
    body.push(polyline(pts.map(([x, y]) => [xs.map(x), ys.map(y)]),
      PALETTE[i % PALETTE.length]));
  });

  const extraLegend: Array<[string, string]> = [];
  if (opts.slopeGuide !== undefined) {
    if (!xLog) throw new Error("slope guide requires loglog scale");
    const [x0, y0] = cleaned[0][0];
    const guide: Array<[number, number]> = [];
    for (const x of [xMin, xMax]) {
      const y = y0 * Math.pow(x / x0, opts.slopeGuide);
      guide.push([xs.map(x), ys.map(Math.min(Math.max(y, yMin), yMax))]);
    }
    body.push(polyline(guide, "#888", "5 4"));
    extraLegend.push([`slope ${opts.slopeGuide}`, "#888"]);
  }
  body.push(legend(series.map((s) => s.label), extraLegend));
  return document(body.join("\n"), opts.title);
}

export function renderTrajectory(series: SeriesInput[], opts: TrajectoryOptions = {}): string {
  if (series.length === 0) {
    throw new Error("need at least one series");
  }
  const paths = series.map((s) => {
    const xsRaw = column(s.table, "x", s.source);
    const ysRaw = column(s.table, "y", s.source);
    const pts: Array<[number, number]> = [];
    for (let i = 0; i < xsRaw.length; i++) {
      if (Number.isFinite(xsRaw[i]) && Number.isFinite(ysRaw[i])) {
        pts.push([xsRaw[i], ysRaw[i]]);
      }
    }
    if (pts.length === 0) throw new Error(`${s.source}: no plottable trajectory points`);
    return pts;
  });

  let xMin = Infinity, xMax = -Infinity, yMin = Infinity, yMax = -Infinity;
  for (const pts of paths) {
    for (const [x, y] of pts) {
      xMin = Math.min(xMin, x); xMax = Math.max(xMax, x);
      yMin = Math.min(yMin, y); yMax = Math.max(yMax, y);
    }
  }
  // pad and fit with equal aspect
  const padX = 0.05 * (xMax - xMin || 1);
  const padY = 0.05 * (yMax - yMin || 1);
  xMin -= padX; xMax += padX; yMin -= padY; yMax += padY;
  const availW = W - MARGIN.l - MARGIN.r;
  const availH = H - MARGIN.t - MARGIN.b;
  const scale = Math.min(availW / (xMax - xMin), availH / (yMax - yMin));
  const cx = (xMin + xMax) / 2, cy = (yMin + yMax) / 2;
  const xLo = cx - availW / scale / 2, xHi = cx + availW / scale / 2;
  const yLo = cy - availH / scale / 2, yHi = cy + availH / scale / 2;
  const xs = linearScale(xLo, xHi, MARGIN.l, W - MARGIN.r);
  const ys = linearScale(yLo, yHi, H - MARGIN.b, MARGIN.t);

  const body: string[] = [];
  body.push(axes(xs, ys, false, false, "x", "y"));
  paths.forEach((pts, i) => {
    const color = PALETTE[i % PALETTE.length];
    body.push(polyline(pts.map(([x, y]) => [xs.map(x), ys.map(y)]), color));
    const [sx, sy] = pts[0];
    const [ex, ey] = pts[pts.length - 1];
    body.push(`<circle cx="${fmt(xs.map(sx))}" cy="${fmt(ys.map(sy))}" r="4" fill="${color}"/>`);
    body.push(`<circle cx="${fmt(xs.map(ex))}" cy="${fmt(ys.map(ey))}" r="4" fill="white" stroke="${color}" stroke-width="1.5"/>`);
  });
  body.push(legend(series.map((s) => s.label)));
  return document(body.join("\n"), opts.title);
}

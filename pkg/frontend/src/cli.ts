#!/usr/bin/env node
/**
 * vi-plot: render figures from vilab trace CSVs.
 *
 * Usage:
 *   vi-plot --spec spec.toml
 *   vi-plot a.csv b.csv --labels "anchored,adaptive" --y gap --scale loglog \
 *           --slope-guide -1 --out gap.svg
 *   vi-plot run.path.csv --mode trajectory --out path.svg
 *
 * Spec file (TOML):
 *   out = "gap.svg"
 *   x = "iter"            # or "fevals"
 *   y = "gap"             # gap | grad_norm | min_grad_norm_sq | alpha | dist
 *   scale = "loglog"      # or "semilogy"
 *   slope_guide = -1.0    # optional
 *   mode = "curves"       # or "trajectory"
 *   title = "..."
 *   [[series]]
 *   csv = "traces/a.csv"
 *   label = "anchored phi=2"
 */

import { readFileSync, writeFileSync } from "node:fs";
import { basename } from "node:path";
import process from "node:process";

import { parseCsv } from "./csv.js";
import { CurveOptions, SeriesInput, XColumn, YColumn, ScaleKind, renderCurves, renderTrajectory } from "./plot.js";
import { parseToml, TomlTable } from "./toml.js";

interface Job {
  series: Array<{ csv: string; label: string }>;
  mode: "curves" | "trajectory";
  out: string;
  x: XColumn;
  y: YColumn;
  scale: ScaleKind;
  slopeGuide?: number;
  title?: string;
}

function fromSpecFile(path: string): Job {
  const doc = parseToml(readFileSync(path, "utf-8"));
  const seriesRaw = (doc.series ?? []) as TomlTable[];
  if (!Array.isArray(seriesRaw) || seriesRaw.length === 0) {
    throw new Error(`${path}: spec needs at least one [[series]] entry`);
  }
  return {
    series: seriesRaw.map((s) => ({
      csv: String(s.csv),
      label: String(s.label ?? basename(String(s.csv))),
    })),
    mode: (doc.mode as Job["mode"]) ?? "curves",
    out: String(doc.out ?? "plot.svg"),
    x: (doc.x as XColumn) ?? "iter",
    y: (doc.y as YColumn) ?? "gap",
    scale: (doc.scale as ScaleKind) ?? "loglog",
    slopeGuide: doc.slope_guide === undefined ? undefined : Number(doc.slope_guide),
    title: doc.title === undefined ? undefined : String(doc.title),
  };
}

function fromArgs(argv: string[]): Job {
  const files: string[] = [];
  const job: Job = {
    series: [], mode: "curves", out: "plot.svg",
    x: "iter", y: "gap", scale: "loglog",
  };
  let labels: string[] | undefined;
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    const next = () => {
      if (i + 1 >= argv.length) throw new Error(`missing value for ${a}`);
      return argv[++i];
    };
    if (a === "--spec") return fromSpecFile(next());
    else if (a === "--labels") labels = next().split(",");
    else if (a === "--x") job.x = next() as XColumn;
    else if (a === "--y") job.y = next() as YColumn;
    else if (a === "--scale") job.scale = next() as ScaleKind;
    else if (a === "--mode") job.mode = next() as Job["mode"];
    else if (a === "--slope-guide") job.slopeGuide = Number(next());
    else if (a === "--title") job.title = next();
    else if (a === "--out") job.out = next();
    else if (a.startsWith("--")) throw new Error(`unknown flag ${a}`);
    else files.push(a);
  }
  if (files.length === 0) throw new Error("no input CSVs (positional) or --spec given");
  job.series = files.map((f, i) => ({ csv: f, label: labels?.[i] ?? basename(f) }));
  return job;
}

export function runJob(job: Job): string {
  const series: SeriesInput[] = job.series.map((s) => ({
    table: parseCsv(readFileSync(s.csv, "utf-8"), s.csv),
    label: s.label,
    source: s.csv,
  }));
  const svg = job.mode === "trajectory"
    ? renderTrajectory(series, { title: job.title })
    : renderCurves(series, {
        x: job.x, y: job.y, scale: job.scale,
        slopeGuide: job.slopeGuide, title: job.title,
      } satisfies CurveOptions);
  writeFileSync(job.out, svg);
  return job.out;
}

export function main(argv: string[]): number {
  try {
    const job = argv[0] === "--spec" && argv.length === 2
      ? fromSpecFile(argv[1])
      : fromArgs(argv);
    const out = runJob(job);
    console.log(`wrote ${out}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

if (process.argv[1] && import.meta.url.endsWith(basename(process.argv[1]))) {
  process.exit(main(process.argv.slice(2)));
}

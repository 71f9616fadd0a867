/**
 * Figure jobs: each one reads documented CSVs from the experiment output
 * tree and renders a deterministic SVG. Inputs live under
 * `<inDir>/<preset>/<file>.csv` as written by the lab harness.
 */

import path from "path";

import { CsvTable, SchemaError, column, numbers, readTable, requireRows } from "./csv.js";
import { frame, heatColor, Svg, shortNumber } from "./svg.js";
import { theme } from "./theme.js";

export const JOB_IDS = [
  "fig4a", "fig4b", "fig4c", "fig5a", "fig5b",
  "fig6", "fig7a", "fig7b", "fig8a", "fig8b",
] as const;

export type JobId = (typeof JOB_IDS)[number];

async function readPresetTable(inDir: string, preset: string, file: string): Promise<CsvTable> {
  const p = path.join(inDir, preset, file);
  const table = await readTable(p);
  requireRows(table, p);
  return table;
}

function footerOf(table: CsvTable): string {
  return `config ${table.configDigest} (${table.preset})`;
}

/** Mean cluster count (or consensus time) vs the sweep variable, with std whiskers. */
function aggregateChart(
  table: CsvTable,
  options: { title: string; xLabel: string; yColumn: string; stdColumn?: string; yLabel: string }
): string {
  const xs = numbers(table, "sweep_value");
  const ys = numbers(table, options.yColumn);
  const stds = options.stdColumn ? numbers(table, options.stdColumn) : xs.map(() => 0);
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yHi = Math.max(...ys.map((y, i) => y + stds[i]));
  const { svg, x, y } = frame({
    title: options.title,
    xLabel: options.xLabel,
    yLabel: options.yLabel,
    xDomain: [xLo - 0.05 * (xHi - xLo || 1), xHi + 0.05 * (xHi - xLo || 1)],
    yDomain: [0, yHi * 1.08],
    footer: footerOf(table),
  });
  const pts: Array<[number, number]> = xs.map((v, i) => [x(v), y(ys[i])]);
  svg.polyline(pts, theme.series[0]);
  xs.forEach((v, i) => {
    svg.circle(x(v), y(ys[i]), 3, theme.series[0]);
    if (stds[i] > 0) {
      svg.line(x(v), y(ys[i] - stds[i]), x(v), y(ys[i] + stds[i]), theme.series[0], 1);
    }
  });
  return svg.toString();
}

async function fig4a(inDir: string): Promise<string> {
  const table = await readPresetTable(inDir, "fig4_metric", "aggregate.csv");
  return aggregateChart(table, {
    title: "Mean asymptotic cluster count vs confidence radius",
    xLabel: "radius r",
    yColumn: "mean_clusters",
    stdColumn: "std_clusters",
    yLabel: "clusters",
  });
}

async function fig4b(inDir: string): Promise<string> {
  const table = await readPresetTable(inDir, "fig4_topological", "aggregate.csv");
  return aggregateChart(table, {
    title: "Mean asymptotic cluster count vs neighbor count",
    xLabel: "neighbors k",
    yColumn: "mean_clusters",
    stdColumn: "std_clusters",
    yLabel: "clusters",
  });
}

async function fig4c(inDir: string): Promise<string> {
  const metric = await readPresetTable(inDir, "fig4_metric", "aggregate.csv");
  const matched = await readPresetTable(inDir, "fig4_compare", "aggregate.csv");
  const a = numbers(metric, "mean_clusters");
  const b = numbers(matched, "mean_clusters");
  if (a.length !== b.length) {
    throw new SchemaError("fig4c needs matching sweep grids for the two networks");
  }
  const yHi = Math.max(...a, ...b);
  const { svg, x, y } = frame({
    title: "Metric vs matched topological (same initial connections)",
    xLabel: "sweep point (matched initial degree)",
    yLabel: "clusters",
    xDomain: [0, a.length - 1],
    yDomain: [0, yHi * 1.08],
    footer: `${footerOf(metric)} + ${footerOf(matched)}`,
  });
  svg.polyline(a.map((v, i) => [x(i), y(v)]), theme.series[0]);
  svg.polyline(b.map((v, i) => [x(i), y(v)]), theme.series[1]);
  a.forEach((v, i) => svg.circle(x(i), y(v), 3, theme.series[0]));
  b.forEach((v, i) => svg.circle(x(i), y(v), 3, theme.series[1]));
  svg.text(x(0) + 8, y(yHi * 1.02), "metric", { fill: theme.series[0] });
  svg.text(x(0) + 8, y(yHi * 0.94), "topological (matched)", { fill: theme.series[1] });
  return svg.toString();
}

function histogramChart(table: CsvTable, title: string): string {
  const sizes = numbers(table, "cluster_size");
  const counts = numbers(table, "count");
  const { svg, x, y } = frame({
    title,
    xLabel: "cluster size",
    yLabel: "frequency",
    xDomain: [0, Math.max(...sizes) + 1],
    yDomain: [0, Math.max(...counts) * 1.08],
    footer: footerOf(table),
  });
  const barWidth = Math.max((x.range[1] - x.range[0]) / (Math.max(...sizes) + 1) - 1, 1);
  sizes.forEach((size, i) => {
    const px = x(size);
    svg.rect(px - barWidth / 2, y(counts[i]), barWidth, y(0) - y(counts[i]), theme.bar);
  });
  return svg.toString();
}

async function fig5a(inDir: string): Promise<string> {
  const table = await readPresetTable(inDir, "fig5a", "histogram.csv");
  return histogramChart(table, "Asymptotic cluster sizes, radius 0.1 (1000 runs)");
}

async function fig5b(inDir: string): Promise<string> {
  const table = await readPresetTable(inDir, "fig5b", "histogram.csv");
  return histogramChart(table, "Asymptotic cluster sizes, radius 0.2 (1000 runs)");
}

/** Fraction of runs whose two biggest clusters account for (almost) everyone. */
export function massFractionNearDiagonal(c1: number[], c2: number[], total = 100, tol = 5): number {
  if (c1.length === 0) return 0;
  let near = 0;
  for (let i = 0; i < c1.length; i++) {
    if (Math.abs(c1[i] + c2[i] - total) <= tol) near++;
  }
  return near / c1.length;
}

async function fig6(inDir: string): Promise<string> {
  const table = await readPresetTable(inDir, "fig6_twocluster", "runs.csv");
  const c1 = numbers(table, "c1");
  const c2 = numbers(table, "c2");
  const counts = new Map<string, number>();
  let maxCount = 0;
  for (let i = 0; i < c1.length; i++) {
    const key = `${c1[i]},${c2[i]}`;
    const next = (counts.get(key) ?? 0) + 1;
    counts.set(key, next);
    maxCount = Math.max(maxCount, next);
  }
  const { svg, x, y } = frame({
    title: "Joint distribution of the two biggest clusters (2000 runs)",
    xLabel: "largest cluster C1",
    yLabel: "second cluster C2",
    xDomain: [0, 100],
    yDomain: [0, 100],
    footer: footerOf(table),
  });
  const cell = Math.abs(x(1) - x(0));
  for (const [key, count] of counts) {
    const [a, b] = key.split(",").map(Number);
    svg.rect(x(a) - cell / 2, y(b) - cell / 2, cell, cell, heatColor(count / maxCount));
  }
  svg.line(x(100), y(0), x(0), y(100), "#d62728", 1, "4 3");
  const fraction = massFractionNearDiagonal(c1, c2);
  svg.text(x(4), y(92), `mass within |C1+C2-100| <= 5: ${(100 * fraction).toFixed(1)}%`);
  return svg.toString();
}

async function readTimeseries(inDir: string): Promise<CsvTable> {
  return readPresetTable(inDir, "fig7_longrange", "timeseries.csv");
}

function splitBySweep(table: CsvTable): Map<string, number[]> {
  const sweep = column(table, "sweep_value");
  const byValue = new Map<string, number[]>();
  sweep.forEach((value, i) => {
    const rows = byValue.get(value) ?? [];
    rows.push(i);
    byValue.set(value, rows);
  });
  return byValue;
}

async function fig7a(inDir: string): Promise<string> {
  const table = await readTimeseries(inDir);
  const agents = table.columns.filter((c) => /^x\d+$/.test(c));
  if (agents.length === 0) {
    throw new SchemaError("timeseries.csv carries no agent position columns");
  }
  const ts = numbers(table, "t");
  const groups = splitBySweep(table);
  const { svg, x, y } = frame({
    title: "Opinion trajectories with and without one distant link",
    xLabel: "t",
    yLabel: "opinion",
    xDomain: [0, Math.max(...ts)],
    yDomain: [0, 1],
    footer: footerOf(table),
  });
  const palette: Record<string, string> = { none: "#bbbbbb", uniform: theme.series[0] };
  for (const [sweepValue, rowIdx] of groups) {
    const color = palette[sweepValue] ?? theme.series[2];
    for (const agent of agents) {
      const series = numbers(table, agent);
      const pts: Array<[number, number]> = rowIdx.map((r) => [x(ts[r]), y(series[r])]);
      svg.polyline(pts, color, 0.5);
    }
  }
  svg.text(x.range[0] + 10, 40, "gray: local only, blue: one distant link each", {
    size: 11,
  });
  return svg.toString();
}

async function fig7b(inDir: string): Promise<string> {
  const table = await readTimeseries(inDir);
  const ts = numbers(table, "t");
  const edges = numbers(table, "edge_count");
  const groups = splitBySweep(table);
  const { svg, x, y } = frame({
    title: "Interaction edges with and without one distant link",
    xLabel: "t",
    yLabel: "directed edges (incl. self-loops)",
    xDomain: [0, Math.max(...ts)],
    yDomain: [0, Math.max(...edges) * 1.08],
    footer: footerOf(table),
  });
  const palette: Record<string, string> = { none: "#bbbbbb", uniform: theme.series[0] };
  for (const [sweepValue, rowIdx] of groups) {
    const color = palette[sweepValue] ?? theme.series[2];
    svg.polyline(rowIdx.map((r) => [x(ts[r]), y(edges[r])]), color, 1.5);
  }
  svg.line(x(0), y(10000), x(Math.max(...ts)), y(10000), theme.axis, 0.6, "5 4");
  svg.text(x.range[1] - 8, y(10000) - 6, "complete graph", { anchor: "end", size: 10 });
  return svg.toString();
}

async function fig8a(inDir: string): Promise<string> {
  const table = await readPresetTable(inDir, "fig8_consensus_time", "aggregate.csv");
  return aggregateChart(table, {
    title: "Time to consensus vs distance bias of the distant link",
    xLabel: "bias exponent a",
    yColumn: "mean_consensus_time",
    yLabel: "mean time to consensus",
  });
}

async function fig8b(inDir: string): Promise<string> {
  const table = await readPresetTable(inDir, "fig8_cluster_count", "aggregate.csv");
  return aggregateChart(table, {
    title: "Final cluster count vs distance bias of the distant link",
    xLabel: "bias exponent a",
    yColumn: "mean_clusters",
    stdColumn: "std_clusters",
    yLabel: "clusters",
  });
}

export const JOBS: Record<JobId, (inDir: string) => Promise<string>> = {
  fig4a, fig4b, fig4c, fig5a, fig5b, fig6, fig7a, fig7b, fig8a, fig8b,
};

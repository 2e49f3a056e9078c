/**
 * Figure families over the simulator's result CSVs.
 *
 * Tradeoff plots throughput against outage probability; the sweep kinds plot
 * throughput against one configuration axis; the CDF reads the per-user dump
 * and draws the empirical distribution with reference lines at the playback
 * threshold (100 kbit/s) and the HD rate (2 Mbit/s). Series overlay both
 * environments: office solid, hotspot dashed. Every data row lands in
 * exactly one series.
 */
import { ResultRow, UserRow, readResultsCsv, readUsersCsv } from "./schema.js";
import { ChartSpec, Series, linearScale, logScale, renderChart, seriesColor,
         seriesDash, HEIGHT, MARGIN, WIDTH } from "./svg.js";

export const FIGURE_KINDS = ["tradeoff", "cdf", "density", "cache", "library",
                             "bandsplit"] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface NamedInput {
  source: string;
  text: string;
}

const Y_FLOOR_BPS = 1.0; // log axis placeholder for zero-throughput points

interface SweepAxis {
  pick(row: ResultRow): number | null;
  label: string;
  log: boolean;
}

const SWEEP_AXES: Record<Exclude<FigureKind, "tradeoff" | "cdf">, SweepAxis> = {
  density: { pick: (r) => r.n, label: "number of devices n", log: true },
  cache: { pick: (r) => r.M, label: "cache size M [files]", log: false },
  library: { pick: (r) => r.m, label: "library size m [files]", log: false },
  bandsplit: { pick: (r) => r.bandSplit, label: "bandwidth split B_d2d/B_BS", log: false },
};

function groupKey(scheme: string, environment: string): string {
  return `${scheme} (${environment})`;
}

function buildSeries(points: Map<string, Array<[number, number]>>): Series[] {
  const names = [...points.keys()].sort();
  return names.map((name, i) => {
    const env = name.endsWith("(hotspot)") ? "hotspot" : "office";
    const scheme = name.split(" ")[0];
    return {
      name,
      color: seriesColor(scheme, i),
      dash: seriesDash(env),
      points: points.get(name)!,
    };
  });
}

function renderTradeoff(rows: ResultRow[]): string {
  const groups = new Map<string, Array<[number, number]>>();
  for (const r of rows) {
    const key = groupKey(r.scheme, r.environment);
    if (!groups.has(key)) groups.set(key, []);
    groups.get(key)!.push([r.pO, Math.max(r.tMinBps, Y_FLOOR_BPS)]);
  }
  for (const pts of groups.values()) {
    pts.sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  }
  const ys = rows.map((r) => Math.max(r.tMinBps, Y_FLOOR_BPS));
  const spec: ChartSpec = {
    title: "Throughput-outage tradeoff",
    xLabel: "outage probability p_o",
    yLabel: "min per-user average throughput [bit/s]",
    x: linearScale(0, Math.max(...rows.map((r) => r.pO), 0.1), MARGIN.left, WIDTH - MARGIN.right),
    y: logScale(Math.min(...ys), Math.max(...ys), HEIGHT - MARGIN.bottom, MARGIN.top),
    series: buildSeries(groups),
  };
  return renderChart(spec);
}

function renderCdf(rows: UserRow[]): string {
  const groups = new Map<string, number[]>();
  for (const r of rows) {
    const key = groupKey(r.scheme, r.environment);
    if (!groups.has(key)) groups.set(key, []);
    groups.get(key)!.push(Math.max(r.throughputBps, Y_FLOOR_BPS));
  }
  const points = new Map<string, Array<[number, number]>>();
  for (const [key, values] of groups) {
    values.sort((a, b) => a - b);
    points.set(key, values.map((v, i) => [v, (i + 1) / values.length]));
  }
  const all = [...groups.values()].flat();
  const spec: ChartSpec = {
    title: "Per-user throughput CDF",
    xLabel: "per-user average throughput [bit/s]",
    yLabel: "fraction of users",
    x: logScale(Math.min(...all), Math.max(...all), MARGIN.left, WIDTH - MARGIN.right),
    y: linearScale(0, 1, HEIGHT - MARGIN.bottom, MARGIN.top),
    series: buildSeries(points).map((s) => ({ ...s, step: true })),
    refLines: [
      { x: 100e3, label: "100 kbit/s" },
      { x: 2e6, label: "2 Mbit/s" },
    ],
  };
  return renderChart(spec);
}

function renderSweep(kind: Exclude<FigureKind, "tradeoff" | "cdf">, rows: ResultRow[]): string {
  const axis = SWEEP_AXES[kind];
  const usable = rows.filter((r) => axis.pick(r) !== null);
  if (usable.length === 0) {
    throw new Error(`no rows carry the ${kind} sweep coordinate`);
  }
  const groups = new Map<string, Array<[number, number]>>();
  for (const r of usable) {
    const key = groupKey(r.scheme, r.environment);
    if (!groups.has(key)) groups.set(key, []);
    groups.get(key)!.push([axis.pick(r)!, Math.max(r.tMinBps, Y_FLOOR_BPS)]);
  }
  for (const pts of groups.values()) {
    pts.sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  }
  const xs = usable.map((r) => axis.pick(r)!);
  const ys = usable.map((r) => Math.max(r.tMinBps, Y_FLOOR_BPS));
  const xScale = axis.log
    ? logScale(Math.min(...xs), Math.max(...xs), MARGIN.left, WIDTH - MARGIN.right)
    : linearScale(Math.min(...xs, 0), Math.max(...xs), MARGIN.left, WIDTH - MARGIN.right);
  const spec: ChartSpec = {
    title: `Throughput vs ${axis.label}`,
    xLabel: axis.label,
    yLabel: "min per-user average throughput [bit/s]",
    x: xScale,
    y: logScale(Math.min(...ys), Math.max(...ys), HEIGHT - MARGIN.bottom, MARGIN.top),
    series: buildSeries(groups),
  };
  return renderChart(spec);
}

/** Render one figure kind from one or more CSV inputs; returns SVG text. */
export function renderFigure(kind: FigureKind, inputs: NamedInput[]): string {
  if (inputs.length === 0) {
    throw new Error("at least one input CSV is required");
  }
  if (kind === "cdf") {
    const rows = inputs.flatMap((i) => readUsersCsv(i.text, i.source));
    return renderCdf(rows);
  }
  const rows = inputs.flatMap((i) => readResultsCsv(i.text, i.source));
  if (kind === "tradeoff") {
    return renderTradeoff(rows);
  }
  return renderSweep(kind, rows);
}

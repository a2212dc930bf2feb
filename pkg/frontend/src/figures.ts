import { aggregateBars, aggregateSeries } from "./aggregate.js";
import { DataError, loadCsv, requireColumns } from "./csv.js";
import { barChart, lineChart } from "./svg.js";

export const FAMILIES = [
  "convergence",
  "metric_vs_shards",
  "mobility",
  "ablation",
] as const;
export type Family = (typeof FAMILIES)[number];

export interface FigureSpec {
  family: Family;
  input: string;
  output: string;
  x?: string;
  y?: string;
  group?: string;
  format?: string;
}

interface FamilyDefaults {
  x: string;
  y: string;
  group?: string;
  xLabel: string;
  yLabel: string;
  kind: "line" | "bar";
}

const DEFAULTS: Record<Family, FamilyDefaults> = {
  convergence: {
    x: "generation",
    y: "best_fitness",
    group: "algorithm",
    xLabel: "generation",
    yLabel: "best fitness",
    kind: "line",
  },
  metric_vs_shards: {
    x: "shard_count",
    y: "mean_latency_s",
    xLabel: "shard count",
    yLabel: "mean latency (s)",
    kind: "line",
  },
  mobility: {
    x: "vehicle_speed_kmh",
    y: "cross_shard_throughput_tps",
    xLabel: "vehicle speed (km/h)",
    yLabel: "cross-shard throughput (tx/s)",
    kind: "line",
  },
  ablation: {
    x: "ablation",
    y: "mean_latency_s",
    xLabel: "ablation",
    yLabel: "mean latency (s)",
    kind: "bar",
  },
};

const UNITS: Record<string, string> = {
  mean_latency_s: "mean latency (s)",
  p95_latency_s: "p95 latency (s)",
  throughput_tps: "throughput (tx/s)",
  cross_shard_throughput_tps: "cross-shard throughput (tx/s)",
  success_rate: "success rate",
  cross_shard_fraction: "cross-shard fraction",
  node_traffic_mb: "traffic per node (MB)",
  best_fitness: "best fitness",
  shard_count: "shard count",
  vehicle_speed_kmh: "vehicle speed (km/h)",
  generation: "generation",
};

function label(column: string): string {
  return UNITS[column] ?? column.replace(/_/g, " ");
}

/** Render one figure to an SVG string. */
export function renderFigure(spec: FigureSpec): string {
  if (!FAMILIES.includes(spec.family)) {
    throw new DataError(
      `unknown figure family '${spec.family}' (expected one of ${FAMILIES.join(", ")})`,
    );
  }
  const fmt = spec.format ?? "svg";
  if (fmt !== "svg") {
    throw new DataError(`unsupported output format '${fmt}' (only 'svg' is supported)`);
  }
  const d = DEFAULTS[spec.family];
  const x = spec.x ?? d.x;
  const y = spec.y ?? d.y;
  const group = spec.group ?? d.group;
  const rows = loadCsv(spec.input);
  const needed = group === undefined ? [x, y] : [x, y, group];
  requireColumns(rows, needed, spec.input);
  const xLabel = x === d.x ? d.xLabel : label(x);
  const yLabel = y === d.y ? d.yLabel : label(y);
  if (d.kind === "bar") {
    return barChart(aggregateBars(rows, x, y, spec.input), xLabel, yLabel);
  }
  return lineChart(aggregateSeries(rows, x, y, group, spec.input), xLabel, yLabel);
}

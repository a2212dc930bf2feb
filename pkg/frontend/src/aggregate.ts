import { DataError, numeric, Row } from "./csv.js";

export interface Point {
  x: number;
  mean: number;
  min: number;
  max: number;
  n: number;
}

export interface Series {
  name: string;
  points: Point[];
}

export interface BarGroup {
  category: string;
  mean: number;
  min: number;
  max: number;
  n: number;
}

function mean(values: number[]): number {
  return values.reduce((a, b) => a + b, 0) / values.length;
}

/**
 * Collapse replicate rows into one point per (series, x): mean with min-max
 * spread. With a single replicate the band collapses onto the line.
 */
export function aggregateSeries(
  rows: Row[],
  xKey: string,
  yKey: string,
  groupKey: string | undefined,
  source: string,
): Series[] {
  const buckets = new Map<string, Map<number, number[]>>();
  for (const row of rows) {
    const name = groupKey === undefined ? "all" : String(row[groupKey]);
    const x = numeric(row, xKey, source);
    const y = numeric(row, yKey, source);
    if (!buckets.has(name)) buckets.set(name, new Map());
    const byX = buckets.get(name)!;
    if (!byX.has(x)) byX.set(x, []);
    byX.get(x)!.push(y);
  }
  const series: Series[] = [];
  for (const name of [...buckets.keys()].sort()) {
    const byX = buckets.get(name)!;
    const points = [...byX.entries()]
      .sort((a, b) => a[0] - b[0])
      .map(([x, ys]) => ({
        x,
        mean: mean(ys),
        min: Math.min(...ys),
        max: Math.max(...ys),
        n: ys.length,
      }));
    series.push({ name, points });
  }
  return series;
}

/** One bar per category value: mean over replicates with min-max whiskers. */
export function aggregateBars(
  rows: Row[],
  categoryKey: string,
  yKey: string,
  source: string,
): BarGroup[] {
  const buckets = new Map<string, number[]>();
  const order: string[] = [];
  for (const row of rows) {
    const cat = String(row[categoryKey]);
    if (!buckets.has(cat)) {
      buckets.set(cat, []);
      order.push(cat); // keep first-appearance order
    }
    buckets.get(cat)!.push(numeric(row, yKey, source));
  }
  if (order.length === 0) {
    throw new DataError(`${source}: no data rows`);
  }
  return order.map((category) => {
    const ys = buckets.get(category)!;
    return {
      category,
      mean: mean(ys),
      min: Math.min(...ys),
      max: Math.max(...ys),
      n: ys.length,
    };
  });
}

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export type Row = Record<string, string | number | null>;

export class DataError extends Error {}

/** Parse a CSV file into typed rows; empty files and parse failures throw. */
export function loadCsv(path: string): Row[] {
  const text = readFileSync(path, "utf-8");
  const parsed = Papa.parse<Row>(text.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new DataError(`${path}: CSV parse error at row ${e.row}: ${e.message}`);
  }
  if (parsed.data.length === 0) {
    throw new DataError(`${path}: no data rows`);
  }
  return parsed.data;
}

/** Ensure every referenced column exists; error names the missing column. */
export function requireColumns(rows: Row[], columns: string[], source: string): void {
  const have = new Set(Object.keys(rows[0]));
  for (const col of columns) {
    if (!have.has(col)) {
      throw new DataError(`${source}: missing column '${col}'`);
    }
  }
}

export function numeric(row: Row, col: string, source: string): number {
  const v = row[col];
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new DataError(`${source}: non-numeric value in column '${col}': ${v}`);
  }
  return v;
}

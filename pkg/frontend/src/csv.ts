import { readFileSync } from "fs";
import Papa from "papaparse";

export interface Table {
  path: string;
  columns: string[];
  rows: number[][];
}

export class SchemaError extends Error {
  constructor(path: string, expected: string[], found: string[]) {
    const missing = expected.filter((c) => !found.includes(c));
    const unexpected = found.filter((c) => !expected.includes(c));
    super(
      `${path}: column mismatch\n` +
        `  expected: ${expected.join(",")}\n` +
        `  found:    ${found.join(",")}\n` +
        (missing.length ? `  missing:  ${missing.join(",")}\n` : "") +
        (unexpected.length ? `  extra:    ${unexpected.join(",")}` : "")
    );
    this.name = "SchemaError";
  }
}

export function readTable(path: string): Table {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new Error(`${path}: ${parsed.errors[0].message}`);
  }
  const data = parsed.data as string[][];
  if (data.length < 2) {
    throw new Error(`${path}: no data rows`);
  }
  const columns = data[0].map((c) => c.trim());
  const rows = data.slice(1).map((r) => r.map((v) => Number(v)));
  return { path, columns, rows };
}

/** Validate an exact header; throws a SchemaError carrying the column diff. */
export function expectColumns(table: Table, expected: string[]): void {
  const same =
    table.columns.length === expected.length &&
    expected.every((c, i) => table.columns[i] === c);
  if (!same) {
    throw new SchemaError(table.path, expected, table.columns);
  }
}

export function column(table: Table, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(table.path, [name], table.columns);
  }
  return table.rows.map((r) => r[idx]);
}

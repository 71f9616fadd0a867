/**
 * Schema-checked reading of the lab's CSV outputs.
 *
 * Every file starts with a comment line `# schema=1 config=<digest> preset=<name>`
 * followed by a header row and data rows. Readers refuse files with a missing
 * or wrong schema tag, missing columns, or no data rows.
 */

import { readFile } from "fs/promises";

export interface CsvTable {
  schema: number;
  configDigest: string;
  preset: string;
  columns: string[];
  rows: string[][];
}

export class SchemaError extends Error {}

export async function readTable(path: string): Promise<CsvTable> {
  let text: string;
  try {
    text = await readFile(path, "utf8");
  } catch (err) {
    throw new SchemaError(`cannot read ${path}: ${(err as Error).message}`);
  }
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${path}: empty file`);
  }
  const match = lines[0].match(/^# schema=(\d+) config=(\S+)(?: preset=(\S+))?/);
  if (!match || Number(match[1]) !== 1) {
    throw new SchemaError(`${path}: missing or unsupported schema tag (need "# schema=1")`);
  }
  if (lines.length < 2) {
    throw new SchemaError(`${path}: no header row`);
  }
  const columns = lines[1].split(",");
  const rows = lines.slice(2).map((line) => line.split(","));
  for (const row of rows) {
    if (row.length !== columns.length) {
      throw new SchemaError(`${path}: ragged row (${row.length} fields, expected ${columns.length})`);
    }
  }
  return {
    schema: 1,
    configDigest: match[2],
    preset: match[3] ?? "unknown",
    columns,
    rows,
  };
}

/** Column accessor that fails loudly when a column is absent. */
export function column(table: CsvTable, name: string): string[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`missing column "${name}" (have: ${table.columns.join(", ")})`);
  }
  return table.rows.map((row) => row[idx]);
}

export function numbers(table: CsvTable, name: string): number[] {
  return column(table, name).map((value) => (value === "" ? NaN : Number(value)));
}

export function requireRows(table: CsvTable, path: string): void {
  if (table.rows.length === 0) {
    throw new SchemaError(`${path}: no data rows`);
  }
}

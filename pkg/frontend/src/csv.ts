import { readFileSync } from "node:fs";

export interface Table {
  header: string[];
  rows: number[][];
}

/** Parse simple comma-separated numeric CSV with a header row. */
export function parseCsv(text: string, expectedHeader?: string[]): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new Error("empty CSV");
  }
  const header = lines[0].split(",");
  if (expectedHeader) {
    for (const name of expectedHeader) {
      if (!header.includes(name)) {
        throw new Error(`CSV header missing column "${name}" (got: ${header.join(",")})`);
      }
    }
  }
  const rows: number[][] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== header.length) {
      throw new Error(`CSV row has ${parts.length} fields, header has ${header.length}`);
    }
    const row = parts.map(Number);
    if (row.some((v) => Number.isNaN(v))) {
      throw new Error(`CSV row contains non-numeric data: ${line}`);
    }
    rows.push(row);
  }
  return { header, rows };
}

export function readCsv(path: string, expectedHeader?: string[]): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new Error(`cannot read CSV file: ${path}`);
  }
  try {
    return parseCsv(text, expectedHeader);
  } catch (err) {
    throw new Error(`invalid CSV ${path}: ${(err as Error).message}`);
  }
}

export function column(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new Error(`no column "${name}" in CSV header ${table.header.join(",")}`);
  }
  return table.rows.map((row) => row[idx]);
}

/**
 * Trace CSV reader.
 *
 * Traces are plain comma-separated files with a header row; numeric cells
 * may be empty (metric unavailable), which parses to NaN and is skipped by
 * the plotting layer.
 */

export interface Table {
  columns: string[];
  /** column name -> values, NaN for empty cells */
  data: Map<string, number[]>;
  rows: number;
}

export function parseCsv(text: string, source = "<csv>"): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error(`${source}: empty file`);
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  if (lines.length === 1) {
    throw new Error(`${source}: no data rows`);
  }
  const data = new Map<string, number[]>(columns.map((c) => [c, []]));
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== columns.length) {
      throw new Error(`${source}: row ${i} has ${cells.length} cells, expected ${columns.length}`);
    }
    for (let j = 0; j < columns.length; j++) {
      const cell = cells[j].trim();
      data.get(columns[j])!.push(cell === "" ? NaN : Number(cell));
    }
  }
  return { columns, data, rows: lines.length - 1 };
}

export function column(table: Table, name: string, source = "<csv>"): number[] {
  const col = table.data.get(name);
  if (col === undefined) {
    throw new Error(`${source}: column "${name}" not found (have: ${table.columns.join(", ")})`);
  }
  return col;
}

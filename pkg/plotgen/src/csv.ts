/** Minimal numeric-CSV reader for the simulation artifacts.
 *
 * The upstream CLI emits plain comma-separated numeric tables with a
 * single header row and no quoting, so a hand-rolled parser keeps the
 * package dependency-free and byte-exact.
 */

export interface Table {
  header: string[];
  /** column name -> values, in file order */
  columns: Map<string, number[]>;
  rows: number;
}

export class CsvError extends Error {}

export function parseCsv(text: string, source = "<csv>"): Table {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length < 2) {
    throw new CsvError(`${source}: need a header and at least one row`);
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const columns = new Map<string, number[]>(header.map((h) => [h, []]));
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== header.length) {
      throw new CsvError(
        `${source}:${i + 1}: expected ${header.length} fields, got ${parts.length}`,
      );
    }
    for (let j = 0; j < header.length; j++) {
      const v = Number(parts[j]);
      if (Number.isNaN(v) && parts[j].trim() !== "nan") {
        throw new CsvError(`${source}:${i + 1}: non-numeric field '${parts[j]}'`);
      }
      columns.get(header[j])!.push(v);
    }
  }
  return { header, columns, rows: lines.length - 1 };
}

export function requireColumn(t: Table, name: string, source: string): number[] {
  const col = t.columns.get(name);
  if (col === undefined) {
    throw new CsvError(
      `${source}: missing column '${name}' (have: ${t.header.join(", ")})`,
    );
  }
  if (col.length === 0) {
    throw new CsvError(`${source}: column '${name}' is empty`);
  }
  return col;
}

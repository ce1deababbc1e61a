import { describe, expect, it } from "vitest";

import { CsvError, parseCsv, requireColumn } from "../src/csv.js";

describe("parseCsv", () => {
  it("parses a numeric table preserving exact float64 values", () => {
    const t = parseCsv("a,b\n1.5,-0.5519784361350498\n2.5,3e-7\n");
    expect(t.header).toEqual(["a", "b"]);
    expect(t.rows).toBe(2);
    expect(t.columns.get("b")).toEqual([-0.5519784361350498, 3e-7]);
  });

  it("rejects ragged rows", () => {
    expect(() => parseCsv("a,b\n1,2\n3\n")).toThrow(CsvError);
  });

  it("rejects non-numeric fields", () => {
    expect(() => parseCsv("a\nx\n")).toThrow(CsvError);
  });

  it("rejects header-only files", () => {
    expect(() => parseCsv("a,b\n")).toThrow(CsvError);
  });
});

describe("requireColumn", () => {
  it("reports missing columns with the available names", () => {
    const t = parseCsv("a,b\n1,2\n");
    expect(() => requireColumn(t, "absU2", "f.csv")).toThrow(/missing column/);
  });
});

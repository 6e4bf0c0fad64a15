import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, describe, expect, it } from "vitest";
import { SchemaError, loadResult, numericParameter, requireColumns } from "../src/index.js";

const FIXTURES = path.join(path.dirname(fileURLToPath(import.meta.url)), "fixtures");
const tmpDirs: string[] = [];

function tmpDir(): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "plots-test-"));
  tmpDirs.push(dir);
  return dir;
}

afterAll(() => {
  for (const dir of tmpDirs) {
    fs.rmSync(dir, { recursive: true, force: true });
  }
});

function copyFixture(name: string, dir: string): string {
  for (const ext of [".csv", ".json"]) {
    fs.copyFileSync(path.join(FIXTURES, name + ext), path.join(dir, name + ext));
  }
  return path.join(dir, name);
}

describe("loadResult", () => {
  it("loads a result pair from the csv path, json path, or bare base", () => {
    const base = path.join(FIXTURES, "potential-clt-ref");
    for (const ref of [base, base + ".csv", base + ".json"]) {
      const result = loadResult(ref);
      expect(result.meta.scenario).toBe("potential-clt");
      expect(result.meta.master_seed).toBe(2026);
      expect(result.rows).toBe(8);
      expect(result.columns["var_W"]).toHaveLength(8);
    }
  });

  it("keeps column order aligned with the csv header", () => {
    const result = loadResult(path.join(FIXTURES, "measure-stability-ref"));
    expect(result.meta.column_order[0]).toBe("n");
    expect(result.columns["n"]).toEqual([501, 1001, 2001]);
  });

  it("raises SchemaError for a missing result file", () => {
    expect(() => loadResult(path.join(FIXTURES, "does-not-exist"))).toThrow(SchemaError);
  });

  it("raises SchemaError for an empty result file", () => {
    const dir = tmpDir();
    const base = copyFixture("potential-clt-ref", dir);
    fs.writeFileSync(base + ".json", "");
    expect(() => loadResult(base)).toThrow(SchemaError);
    expect(() => loadResult(base)).toThrow(/empty result file/);
  });

  it("raises SchemaError for an empty data table", () => {
    const dir = tmpDir();
    const base = copyFixture("potential-clt-ref", dir);
    fs.writeFileSync(base + ".csv", "\n");
    expect(() => loadResult(base)).toThrow(SchemaError);
  });

  it("raises SchemaError for invalid JSON", () => {
    const dir = tmpDir();
    const base = copyFixture("potential-clt-ref", dir);
    fs.writeFileSync(base + ".json", "{not json");
    expect(() => loadResult(base)).toThrow(/invalid JSON/);
  });

  it("raises SchemaError when required metadata fields are missing", () => {
    const dir = tmpDir();
    const base = copyFixture("potential-clt-ref", dir);
    const doc = JSON.parse(fs.readFileSync(base + ".json", "utf8"));
    delete doc.column_order;
    fs.writeFileSync(base + ".json", JSON.stringify(doc));
    expect(() => loadResult(base)).toThrow(/malformed result metadata/);
  });

  it("raises SchemaError for a newer schema version", () => {
    const dir = tmpDir();
    const base = copyFixture("potential-clt-ref", dir);
    const doc = JSON.parse(fs.readFileSync(base + ".json", "utf8"));
    doc.schema_version = 999;
    fs.writeFileSync(base + ".json", JSON.stringify(doc));
    expect(() => loadResult(base)).toThrow(/schema version 999/);
  });

  it("raises SchemaError when the header disagrees with column_order", () => {
    const dir = tmpDir();
    const base = copyFixture("potential-clt-ref", dir);
    const lines = fs.readFileSync(base + ".csv", "utf8").split("\n");
    lines[0] = lines[0]!.replace("var_W", "renamed");
    fs.writeFileSync(base + ".csv", lines.join("\n"));
    expect(() => loadResult(base)).toThrow(/does not match column_order/);
  });

  it("raises SchemaError for non-numeric cells", () => {
    const dir = tmpDir();
    const base = copyFixture("potential-clt-ref", dir);
    const lines = fs.readFileSync(base + ".csv", "utf8").split("\n");
    lines[1] = lines[1]!.replace(/^0.1/, "oops");
    fs.writeFileSync(base + ".csv", lines.join("\n"));
    expect(() => loadResult(base)).toThrow(/not a number/);
  });

  it("raises SchemaError for ragged rows", () => {
    const dir = tmpDir();
    const base = copyFixture("potential-clt-ref", dir);
    const lines = fs.readFileSync(base + ".csv", "utf8").split("\n");
    lines[1] = lines[1] + ",1.0";
    fs.writeFileSync(base + ".csv", lines.join("\n"));
    expect(() => loadResult(base)).toThrow(/cells, expected/);
  });
});

describe("metadata helpers", () => {
  it("extracts numeric parameters and rejects missing ones", () => {
    const result = loadResult(path.join(FIXTURES, "potential-clt-ref"));
    expect(numericParameter(result.meta, "alpha")).toBe(0);
    expect(numericParameter(result.meta, "delta")).toBe(1);
    expect(() => numericParameter(result.meta, "no_such_knob")).toThrow(SchemaError);
  });

  it("rejects column requests the result cannot satisfy", () => {
    const result = loadResult(path.join(FIXTURES, "measure-stability-ref"));
    expect(requireColumns(result, ["n", "median"])).toBe(result.columns);
    expect(() => requireColumns(result, ["var_W"])).toThrow(/lacks column "var_W"/);
  });
});

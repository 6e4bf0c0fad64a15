import * as fs from "node:fs";
import * as path from "node:path";
import { z } from "zod";

/** Raised whenever a result file is missing, unreadable, or malformed. */
export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

const SUPPORTED_SCHEMA_VERSION = 1;

const verdictSchema = z
  .object({
    name: z.string(),
    passed: z.boolean(),
    value: z.number().nullable().optional(),
    target: z.number().nullable().optional(),
    tolerance: z.number().nullable().optional(),
  })
  .passthrough();

const metaSchema = z
  .object({
    schema_version: z.number().int(),
    scenario: z.string().min(1),
    parameters: z.record(z.unknown()),
    master_seed: z.number().int(),
    verdicts: z.array(verdictSchema),
    provenance: z.record(z.unknown()),
    column_order: z.array(z.string()).min(1),
  })
  .passthrough();

export type Verdict = z.infer<typeof verdictSchema>;
export type ResultMeta = z.infer<typeof metaSchema>;

export interface LoadedResult {
  meta: ResultMeta;
  columns: Record<string, number[]>;
  rows: number;
}

function basePath(resultPath: string): string {
  const ext = path.extname(resultPath);
  if (ext === ".csv" || ext === ".json") {
    return resultPath.slice(0, -ext.length);
  }
  return resultPath;
}

function readText(filePath: string): string {
  let text: string;
  try {
    text = fs.readFileSync(filePath, "utf8");
  } catch {
    throw new SchemaError(`cannot read result file: ${filePath}`);
  }
  if (text.trim().length === 0) {
    throw new SchemaError(`empty result file: ${filePath}`);
  }
  return text;
}

function parseMeta(text: string, filePath: string): ResultMeta {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new SchemaError(`invalid JSON in ${filePath}: ${(err as Error).message}`);
  }
  const parsed = metaSchema.safeParse(raw);
  if (!parsed.success) {
    const issue = parsed.error.issues[0];
    const where = issue && issue.path.length > 0 ? issue.path.join(".") : "(root)";
    const detail = issue ? issue.message : "invalid shape";
    throw new SchemaError(`malformed result metadata in ${filePath}: ${where}: ${detail}`);
  }
  if (parsed.data.schema_version > SUPPORTED_SCHEMA_VERSION) {
    throw new SchemaError(
      `result schema version ${parsed.data.schema_version} is newer than supported ${SUPPORTED_SCHEMA_VERSION}`
    );
  }
  return parsed.data;
}

function parseTable(text: string, order: string[], filePath: string): Record<string, number[]> {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`empty result table: ${filePath}`);
  }
  const header = (lines[0] ?? "").split(",");
  if (header.length !== order.length || header.some((name, i) => name !== order[i])) {
    throw new SchemaError(
      `CSV header [${header.join(", ")}] does not match column_order [${order.join(", ")}]`
    );
  }
  const columns: Record<string, number[]> = {};
  for (const name of order) {
    columns[name] = [];
  }
  for (let row = 1; row < lines.length; row++) {
    const cells = (lines[row] ?? "").split(",");
    if (cells.length !== order.length) {
      throw new SchemaError(`row ${row} has ${cells.length} cells, expected ${order.length}`);
    }
    for (let col = 0; col < order.length; col++) {
      const cell = cells[col] ?? "";
      const value = cell === "nan" ? NaN : Number(cell);
      if (cell !== "nan" && !Number.isFinite(value)) {
        throw new SchemaError(`row ${row}, column ${order[col]}: not a number: ${cell}`);
      }
      columns[order[col] as string]!.push(value);
    }
  }
  return columns;
}

/**
 * Load a persisted experiment result.
 *
 * Accepts the path of either half of the pair (`<base>.csv` or `<base>.json`)
 * or the bare base path; both files must exist and agree on column order.
 */
export function loadResult(resultPath: string): LoadedResult {
  const base = basePath(resultPath);
  const meta = parseMeta(readText(base + ".json"), base + ".json");
  const columns = parseTable(readText(base + ".csv"), meta.column_order, base + ".csv");
  const first = meta.column_order[0];
  const rows = first ? columns[first]!.length : 0;
  if (rows === 0) {
    throw new SchemaError(`result table has no data rows: ${base}.csv`);
  }
  return { meta, columns, rows };
}

/** Pull a numeric parameter out of result metadata, or fail loudly. */
export function numericParameter(meta: ResultMeta, name: string): number {
  const value = meta.parameters[name];
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new SchemaError(`result parameters are missing numeric "${name}"`);
  }
  return value;
}

/** Require the listed columns to be present, then return them. */
export function requireColumns(result: LoadedResult, names: string[]): Record<string, number[]> {
  for (const name of names) {
    if (!(name in result.columns)) {
      throw new SchemaError(
        `result for scenario "${result.meta.scenario}" lacks column "${name}" ` +
          `(has: ${result.meta.column_order.join(", ")})`
      );
    }
  }
  return result.columns;
}

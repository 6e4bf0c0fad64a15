import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, describe, expect, it } from "vitest";
import { runCli } from "../src/index.js";

const FIXTURES = path.join(path.dirname(fileURLToPath(import.meta.url)), "fixtures");
const tmpDirs: string[] = [];

function tmpDir(): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "plots-cli-"));
  tmpDirs.push(dir);
  return dir;
}

afterAll(() => {
  for (const dir of tmpDirs) {
    fs.rmSync(dir, { recursive: true, force: true });
  }
});

interface Captured {
  code: number;
  out: string[];
  err: string[];
}

async function run(argv: string[]): Promise<Captured> {
  const out: string[] = [];
  const err: string[] = [];
  const code = await runCli(argv, {
    out: (line) => out.push(line),
    err: (line) => err.push(line),
  });
  return { code, out, err };
}

describe("plot command", () => {
  it("renders a figure to the requested output path", async () => {
    const dir = tmpDir();
    const image = path.join(dir, "variance.svg");
    const result = await run([
      "variance-convergence",
      path.join(FIXTURES, "potential-clt-ref.csv"),
      "-o",
      image,
    ]);
    expect(result.err).toEqual([]);
    expect(result.code).toBe(0);
    const svg = fs.readFileSync(image, "utf8");
    expect(svg).toContain('class="footer"');
    expect(svg).toContain("scenario=potential-clt");
  });

  it("derives a default output name next to the result", async () => {
    const dir = tmpDir();
    for (const ext of [".csv", ".json"]) {
      fs.copyFileSync(
        path.join(FIXTURES, "measure-stability-ref" + ext),
        path.join(dir, "measure-stability-ref" + ext)
      );
    }
    const result = await run(["ks-ladder", path.join(dir, "measure-stability-ref.json")]);
    expect(result.code).toBe(0);
    expect(fs.existsSync(path.join(dir, "measure-stability-ref.ks-ladder.svg"))).toBe(true);
  });

  it("writes byte-identical images across repeated invocations", async () => {
    const dir = tmpDir();
    const a = path.join(dir, "a.svg");
    const b = path.join(dir, "b.svg");
    const fixture = path.join(FIXTURES, "displacement-critical-ref");
    expect((await run(["exponent-fit", fixture, "-o", a])).code).toBe(0);
    expect((await run(["exponent-fit", fixture, "-o", b])).code).toBe(0);
    expect(fs.readFileSync(b)).toEqual(fs.readFileSync(a));
  });

  it("exits 1 with a SchemaError message for a missing result", async () => {
    const result = await run(["ks-ladder", path.join(FIXTURES, "nope"), "-o", "/tmp/x.svg"]);
    expect(result.code).toBe(1);
    expect(result.err.join("\n")).toContain("cannot read result file");
  });

  it("exits 1 for an empty result file", async () => {
    const dir = tmpDir();
    fs.writeFileSync(path.join(dir, "empty.json"), "");
    fs.writeFileSync(path.join(dir, "empty.csv"), "");
    const result = await run(["variance-convergence", path.join(dir, "empty.json")]);
    expect(result.code).toBe(1);
    expect(result.err.join("\n")).toContain("empty result file");
  });

  it("exits 1 when the figure kind does not match the result shape", async () => {
    const result = await run([
      "exponent-fit",
      path.join(FIXTURES, "displacement-recurrent-ref"),
      "-o",
      "/tmp/mismatch.svg",
    ]);
    expect(result.code).toBe(1);
    expect(result.err.join("\n")).toContain("log-log");
  });

  it("exits 2 for an unknown figure kind", async () => {
    const result = await run(["pie-chart", path.join(FIXTURES, "potential-clt-ref")]);
    expect(result.code).toBe(2);
    expect(result.err.join("\n")).toContain("usage");
  });

  it("exits 2 when arguments are missing", async () => {
    const result = await run(["variance-convergence"]);
    expect(result.code).toBe(2);
  });

  it("exits 2 for unknown options", async () => {
    const result = await run([
      "ks-ladder",
      path.join(FIXTURES, "measure-stability-ref"),
      "--frobnicate",
    ]);
    expect(result.code).toBe(2);
  });

  it("supports log axis flags", async () => {
    const dir = tmpDir();
    const image = path.join(dir, "log.svg");
    const result = await run([
      "variance-convergence",
      path.join(FIXTURES, "potential-clt-ref"),
      "-o",
      image,
      "--x-scale",
      "log",
    ]);
    expect(result.code).toBe(0);
    expect(fs.existsSync(image)).toBe(true);
  });
});

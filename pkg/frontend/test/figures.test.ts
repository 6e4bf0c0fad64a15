import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, describe, expect, it } from "vitest";
import {
  FIGURE_KINDS,
  FigureKind,
  SchemaError,
  loadResult,
  render,
  renderFigure,
  specHash,
} from "../src/index.js";

const FIXTURES = path.join(path.dirname(fileURLToPath(import.meta.url)), "fixtures");

// reference result backing each figure kind
const REFERENCE: Record<FigureKind, string> = {
  "variance-convergence": "potential-clt-ref",
  "mean-convergence": "potential-clt-ref",
  "displacement-vs-logpower": "displacement-recurrent-ref",
  "exponent-fit": "displacement-critical-ref",
  "ks-ladder": "measure-stability-ref",
};

function load(name: string) {
  return loadResult(path.join(FIXTURES, name));
}

function attr(tag: string, name: string): string {
  const m = tag.match(new RegExp(`${name}="([^"]*)"`));
  expect(m, `attribute ${name} in ${tag}`).not.toBeNull();
  return m![1]!;
}

describe("every figure kind", () => {
  for (const kind of FIGURE_KINDS) {
    it(`${kind} renders from its reference result and embeds the provenance footer`, () => {
      const result = load(REFERENCE[kind]);
      const svg = render(kind, result);
      expect(svg.startsWith("<svg ")).toBe(true);
      expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
      const footer = svg.match(/<text [^>]*class="footer"[^>]*>([^<]*)<\/text>/);
      expect(footer).not.toBeNull();
      const label = footer![1]!;
      expect(label).toContain(`scenario=${result.meta.scenario}`);
      expect(label).toContain(`seed=${result.meta.master_seed}`);
      expect(label).toContain(`schema=${result.meta.schema_version}`);
      expect(label).toMatch(/spec=[0-9a-f]{12}/);
      expect(label).toContain(`spec=${specHash(result.meta)}`);
    });
  }

  it("renders deterministically: same inputs, identical bytes", () => {
    for (const kind of FIGURE_KINDS) {
      const first = render(kind, load(REFERENCE[kind]));
      const second = render(kind, load(REFERENCE[kind]));
      expect(second).toBe(first);
    }
  });
});

describe("variance-convergence band geometry", () => {
  it("places the final data point inside the drawn 10% band", () => {
    const result = load("potential-clt-ref");
    const svg = render("variance-convergence", result);

    const band = svg.match(/<rect [^>]*class="band"[^>]*\/>/);
    expect(band).not.toBeNull();
    const bandY = Number(attr(band![0], "y"));
    const bandH = Number(attr(band![0], "height"));
    expect(bandH).toBeGreaterThan(0);

    const circles = [...svg.matchAll(/<circle [^>]*class="data-point"[^>]*\/>/g)];
    expect(circles.length).toBe(result.rows);
    // data points are emitted in ascending depth order; take the deepest
    const last = circles[circles.length - 1]![0];
    const cy = Number(attr(last, "cy"));
    expect(cy).toBeGreaterThanOrEqual(bandY);
    expect(cy).toBeLessThanOrEqual(bandY + bandH);
  });

  it("draws the band at plus and minus 10% of the limit level", () => {
    const svg = render("variance-convergence", load("potential-clt-ref"));
    const band = svg.match(/<rect [^>]*class="band"[^>]*\/>/);
    // alpha=0, delta=1 limit level is 4
    expect(attr(band![0], "data-y-low")).toBe("3.6");
    expect(attr(band![0], "data-y-high")).toBe("4.4");
    const theory = svg.match(/<line [^>]*class="theory"[^>]*\/>/);
    expect(attr(theory![0], "data-level")).toBe("4");
  });

  it("normalized final value agrees with the drawn geometry", () => {
    const result = load("potential-clt-ref");
    const depths = result.columns["continuum_depth"]!;
    const deepest = depths.indexOf(Math.max(...depths));
    const normalized =
      (result.columns["var_W"]![deepest]! / result.columns["var_target"]![deepest]!) * 4;
    expect(normalized).toBeGreaterThan(3.6);
    expect(normalized).toBeLessThan(4.4);
  });
});

describe("figure and result compatibility", () => {
  it("rejects a kind whose columns the result lacks", () => {
    const measure = load("measure-stability-ref");
    expect(() => render("variance-convergence", measure)).toThrow(SchemaError);
    expect(() => render("displacement-vs-logpower", measure)).toThrow(/lacks column/);
  });

  it("rejects a displacement figure on the wrong fit kind", () => {
    expect(() => render("exponent-fit", load("displacement-recurrent-ref"))).toThrow(
      /needs a log-log fitted result/
    );
    expect(() => render("displacement-vs-logpower", load("displacement-critical-ref"))).toThrow(
      /needs a recurrent-regime fit/
    );
  });

  it("rejects ks-ladder without a ks_statistics table", () => {
    const result = load("measure-stability-ref");
    delete (result.meta.provenance as Record<string, unknown>)["ks_statistics"];
    expect(() => render("ks-ladder", result)).toThrow(/ks_statistics/);
  });
});

describe("axis scale options", () => {
  it("honors log scales when the data is positive", () => {
    const linear = render("variance-convergence", load("potential-clt-ref"));
    const logged = render("variance-convergence", load("potential-clt-ref"), {
      xScale: "log",
      yScale: "log",
    });
    expect(logged).not.toBe(linear);
    expect(logged).toContain('class="footer"');
  });

  it("rejects a log scale over a nonpositive domain", () => {
    // displacement medians start at t=1 and the x extent is padded below 0
    expect(() =>
      render("exponent-fit", load("displacement-critical-ref"), { yScale: "log" })
    ).toThrow(SchemaError);
  });
});

describe("renderFigure", () => {
  const tmpDirs: string[] = [];

  afterAll(() => {
    for (const dir of tmpDirs) {
      fs.rmSync(dir, { recursive: true, force: true });
    }
  });

  it("validates, renders, and writes the image file", () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "plots-fig-"));
    tmpDirs.push(dir);
    const outPath = path.join(dir, "nested", "variance.svg");
    const written = renderFigure({
      kind: "variance-convergence",
      resultPath: path.join(FIXTURES, "potential-clt-ref"),
      outPath,
    });
    expect(written).toBe(outPath);
    const svg = fs.readFileSync(outPath, "utf8");
    expect(svg).toBe(render("variance-convergence", load("potential-clt-ref")));
  });

  it("refuses to write anything when validation fails", () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "plots-fig-"));
    tmpDirs.push(dir);
    const outPath = path.join(dir, "never.svg");
    expect(() =>
      renderFigure({
        kind: "ks-ladder",
        resultPath: path.join(FIXTURES, "missing"),
        outPath,
      })
    ).toThrow(SchemaError);
    expect(fs.existsSync(outPath)).toBe(false);
  });
});

describe("fit overlays", () => {
  it("draws fitted and reference lines with their slopes recorded", () => {
    const svg = render("exponent-fit", load("displacement-critical-ref"));
    const fit = svg.match(/<line [^>]*class="fit"[^>]*\/>/);
    const theory = svg.match(/<line [^>]*class="theory"[^>]*\/>/);
    expect(fit).not.toBeNull();
    expect(theory).not.toBeNull();
    expect(Number(attr(fit![0], "data-slope"))).toBeCloseTo(0.3676, 3);
    expect(Number(attr(theory![0], "data-slope"))).toBeCloseTo(1 / 3, 4);
  });

  it("draws one reference marker per ladder rung", () => {
    const svg = render("ks-ladder", load("measure-stability-ref"));
    const bars = [...svg.matchAll(/<rect [^>]*class="bar"[^>]*\/>/g)];
    const refs = [...svg.matchAll(/<line [^>]*class="theory"[^>]*\/>/g)];
    expect(bars.length).toBe(2);
    expect(refs.length).toBe(2);
    // 200 samples per side: 1.358 * sqrt(400 / 40000) = 0.1358
    expect(Number(attr(refs[0]![0], "data-critical"))).toBeCloseTo(0.1358, 4);
  });
});

import * as crypto from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";
import {
  LoadedResult,
  ResultMeta,
  SchemaError,
  loadResult,
  numericParameter,
  requireColumns,
} from "./schema.js";
import {
  HEIGHT,
  MARGIN,
  Scale,
  WIDTH,
  axes,
  circle,
  element,
  fmt,
  lineSegment,
  makeScale,
  padExtent,
  polyline,
  text,
  document as svgDocument,
} from "./svg.js";

export type FigureKind =
  | "variance-convergence"
  | "mean-convergence"
  | "displacement-vs-logpower"
  | "exponent-fit"
  | "ks-ladder";

export const FIGURE_KINDS: FigureKind[] = [
  "variance-convergence",
  "mean-convergence",
  "displacement-vs-logpower",
  "exponent-fit",
  "ks-ladder",
];

export interface FigureOptions {
  xScale?: "linear" | "log";
  yScale?: "linear" | "log";
}

/** Everything needed to produce one figure file from one persisted result. */
export interface FigureSpec {
  kind: FigureKind;
  resultPath: string;
  outPath: string;
  xScale?: "linear" | "log";
  yScale?: "linear" | "log";
}

const COLORS = {
  data: "#1f77b4",
  theory: "#d62728",
  fit: "#2ca02c",
  band: "#d62728",
  ci: "#1f77b4",
};

function stableStringify(value: unknown): string {
  if (Array.isArray(value)) {
    return "[" + value.map(stableStringify).join(",") + "]";
  }
  if (value !== null && typeof value === "object") {
    const keys = Object.keys(value as Record<string, unknown>).sort();
    const body = keys.map(
      (k) => JSON.stringify(k) + ":" + stableStringify((value as Record<string, unknown>)[k])
    );
    return "{" + body.join(",") + "}";
  }
  return JSON.stringify(value);
}

/** Short digest of the experiment configuration that produced a result. */
export function specHash(meta: ResultMeta): string {
  const canonical = stableStringify({
    scenario: meta.scenario,
    parameters: meta.parameters,
    master_seed: meta.master_seed,
  });
  return crypto.createHash("sha256").update(canonical, "utf8").digest("hex").slice(0, 12);
}

function footer(meta: ResultMeta, kind: FigureKind): string {
  const label =
    `${kind} | scenario=${meta.scenario} seed=${meta.master_seed} ` +
    `schema=${meta.schema_version} spec=${specHash(meta)}`;
  return text(MARGIN.left, HEIGHT - 10, label, {
    class: "footer",
    "font-size": "11",
    fill: "#555",
  });
}

function title(label: string): string {
  return text(WIDTH / 2, 24, label, {
    class: "title",
    "text-anchor": "middle",
    "font-size": "15",
    fill: "#111",
  });
}

function legend(entries: Array<[string, string]>): string {
  const parts: string[] = [];
  let y = MARGIN.top + 8;
  for (const [color, label] of entries) {
    const x = WIDTH - MARGIN.right - 190;
    parts.push(lineSegment(x, y, x + 18, y, { class: "legend", stroke: color, "stroke-width": "2" }));
    parts.push(
      text(x + 24, y + 4, label, { class: "legend", "font-size": "11", fill: "#333" })
    );
    y += 16;
  }
  return parts.join("\n");
}

function plotScales(
  xExtent: [number, number],
  yExtent: [number, number],
  opts: FigureOptions
): { x: Scale; y: Scale } {
  const xLog = opts.xScale === "log";
  const yLog = opts.yScale === "log";
  if (xLog && xExtent[0] <= 0) {
    throw new SchemaError("log x-scale requires strictly positive x values");
  }
  if (yLog && yExtent[0] <= 0) {
    throw new SchemaError("log y-scale requires strictly positive y values");
  }
  const x = makeScale(xExtent, [MARGIN.left, WIDTH - MARGIN.right], xLog);
  const y = makeScale(yExtent, [HEIGHT - MARGIN.bottom, MARGIN.top], yLog);
  return { x, y };
}

interface Point {
  x: number;
  y: number;
  lo: number;
  hi: number;
}

function finitePoints(points: Point[]): Point[] {
  const kept = points.filter((p) => Number.isFinite(p.x) && Number.isFinite(p.y));
  if (kept.length === 0) {
    throw new SchemaError("no finite data points to plot");
  }
  return kept.sort((a, b) => a.x - b.x);
}

function whisker(xs: Scale, ys: Scale, p: Point): string {
  if (!Number.isFinite(p.lo) || !Number.isFinite(p.hi) || p.hi <= p.lo) return "";
  if (ys.log && p.lo <= 0) return "";
  const x = xs(p.x);
  return [
    lineSegment(x, ys(p.lo), x, ys(p.hi), { class: "ci", stroke: COLORS.ci }),
    lineSegment(x - 3, ys(p.lo), x + 3, ys(p.lo), { class: "ci", stroke: COLORS.ci }),
    lineSegment(x - 3, ys(p.hi), x + 3, ys(p.hi), { class: "ci", stroke: COLORS.ci }),
  ].join("\n");
}

function dataMarks(xs: Scale, ys: Scale, points: Point[]): string {
  const parts: string[] = [];
  parts.push(
    polyline(
      points.map((p) => [xs(p.x), ys(p.y)]),
      { class: "data", stroke: COLORS.data, "stroke-width": "1.5" }
    )
  );
  for (const p of points) {
    parts.push(whisker(xs, ys, p));
    parts.push(
      element("circle", {
        cx: xs(p.x),
        cy: ys(p.y),
        r: 3.5,
        class: "data-point",
        fill: COLORS.data,
        "data-x": fmt(p.x),
        "data-y": fmt(p.y),
      })
    );
  }
  return parts.filter((s) => s.length > 0).join("\n");
}

/**
 * Normalizing constant that turns the depth-dependent variance target into a
 * horizontal limit line: targets grow like the depth profile times this level.
 */
function varianceLevel(alpha: number, delta: number): number {
  return alpha === 1 ? 4 * delta : (4 * delta) / (1 - alpha);
}

function meanLevel(alpha: number, delta: number): number {
  return alpha === 1 ? delta - 1 : delta / (1 - alpha);
}

interface ConvergenceData {
  points: Point[];
  level: number;
}

function convergenceData(result: LoadedResult, which: "var" | "mean"): ConvergenceData {
  const cols = requireColumns(result, [
    "continuum_depth",
    "mean_W",
    "var_W",
    "kurtosis",
    "mean_target",
    "var_target",
    "count",
  ]);
  const alpha = numericParameter(result.meta, "alpha");
  const delta = numericParameter(result.meta, "delta");
  const level = which === "var" ? varianceLevel(alpha, delta) : meanLevel(alpha, delta);
  const points: Point[] = [];
  for (let i = 0; i < result.rows; i++) {
    const d = cols["continuum_depth"]![i]!;
    const count = cols["count"]![i]!;
    const varW = cols["var_W"]![i]!;
    if (which === "var") {
      const target = cols["var_target"]![i]!;
      if (!(target > 0)) continue;
      const scale = level / target;
      const kurt = cols["kurtosis"]![i]!;
      const se = varW * Math.sqrt(Math.max(kurt + 2, 0.5) / count);
      points.push({
        x: d,
        y: varW * scale,
        lo: (varW - 1.96 * se) * scale,
        hi: (varW + 1.96 * se) * scale,
      });
    } else {
      const target = cols["mean_target"]![i]!;
      if (target === 0) continue;
      const scale = level / target;
      const mu = cols["mean_W"]![i]!;
      const se = Math.sqrt(varW / count);
      points.push({
        x: d,
        y: mu * scale,
        lo: (mu - 1.96 * se) * scale,
        hi: (mu + 1.96 * se) * scale,
      });
    }
  }
  return { points: finitePoints(points), level };
}

/**
 * Convergence of a normalized statistic to a horizontal limit level, with a
 * shaded 10 percent tolerance band around the limit.
 */
function renderConvergence(
  result: LoadedResult,
  kind: FigureKind,
  which: "var" | "mean",
  opts: FigureOptions
): string {
  const { points, level } = convergenceData(result, which);
  const yValues = points.flatMap((p) => [p.y, p.lo, p.hi]).filter(Number.isFinite);
  const yExtent = padExtent(
    Math.min(...yValues, level * 0.85),
    Math.max(...yValues, level * 1.15)
  );
  const xExtent = padExtent(points[0]!.x, points[points.length - 1]!.x);
  const { x: xs, y: ys } = plotScales(xExtent, yExtent, opts);
  const bandTop = ys(level * 1.1);
  const bandBottom = ys(level * 0.9);
  const parts: string[] = [];
  parts.push(
    element("rect", {
      class: "band",
      x: xs.range[0],
      y: Math.min(bandTop, bandBottom),
      width: xs.range[1] - xs.range[0],
      height: Math.abs(bandBottom - bandTop),
      fill: COLORS.band,
      "fill-opacity": "0.12",
      "data-y-low": fmt(level * 0.9),
      "data-y-high": fmt(level * 1.1),
    })
  );
  parts.push(
    lineSegment(xs.range[0], ys(level), xs.range[1], ys(level), {
      class: "theory",
      stroke: COLORS.theory,
      "stroke-width": "1.5",
      "stroke-dasharray": "6 3",
      "data-level": fmt(level),
    })
  );
  parts.push(dataMarks(xs, ys, points));
  parts.push(
    axes(xs, ys, {
      xLabel: "continuum depth",
      yLabel: which === "var" ? "normalized variance" : "normalized mean",
    })
  );
  const stat = which === "var" ? "variance" : "mean";
  parts.push(title(`Normalized potential ${stat} vs limit level ${fmt(level)}`));
  parts.push(
    legend([
      [COLORS.data, "estimate (95% CI)"],
      [COLORS.theory, `limit ${fmt(level)} (10% band)`],
    ])
  );
  parts.push(footer(result.meta, kind));
  return svgDocument(parts);
}

interface DisplacementData {
  t: number[];
  median: number[];
  se: number[];
  slope: number;
  intercept: number;
  slopeSe: number;
  target: number;
  fitKind: string;
}

function displacementData(result: LoadedResult): DisplacementData {
  const cols = requireColumns(result, ["t", "median_max_displacement", "se", "count"]);
  const prov = result.meta.provenance;
  const need = ["fit_kind", "fit_slope", "fit_intercept", "fit_slope_se", "fit_target"];
  for (const key of need) {
    if (!(key in prov)) {
      throw new SchemaError(`result provenance lacks "${key}" (not a displacement fit result?)`);
    }
  }
  return {
    t: cols["t"]!,
    median: cols["median_max_displacement"]!,
    se: cols["se"]!,
    slope: Number(prov["fit_slope"]),
    intercept: Number(prov["fit_intercept"]),
    slopeSe: Number(prov["fit_slope_se"]),
    target: Number(prov["fit_target"]),
    fitKind: String(prov["fit_kind"]),
  };
}

function fitRegionMask(t: number[]): boolean[] {
  const horizon = Math.max(...t);
  const cut = Math.max(Math.floor(horizon / 100), 2);
  return t.map((v) => v >= cut);
}

function fitAnnotation(d: DisplacementData, y: number): string {
  const label =
    `fitted slope ${fmt(d.slope)} ` +
    `(95% CI ${fmt(d.slope - 1.96 * d.slopeSe)}..${fmt(d.slope + 1.96 * d.slopeSe)}), ` +
    `target ${fmt(d.target)}`;
  return text(MARGIN.left + 8, y, label, {
    class: "annotation",
    "font-size": "12",
    fill: "#111",
  });
}

/**
 * Median displacement against powers of log time, with the fitted line and a
 * reference line at the predicted slope.  Applies to slow-regime results
 * where displacement grows polylogarithmically.
 */
function renderLogPower(result: LoadedResult, opts: FigureOptions): string {
  const d = displacementData(result);
  if (d.fitKind !== "recurrent") {
    throw new SchemaError(
      `displacement-vs-logpower needs a recurrent-regime fit, got "${d.fitKind}"`
    );
  }
  const alpha = numericParameter(result.meta, "alpha");
  const power = 1 / (1 - alpha);
  const points: Point[] = [];
  for (let i = 0; i < d.t.length; i++) {
    const t = d.t[i]!;
    if (!(t > 1)) continue;
    const x = Math.pow(Math.log(t), power);
    const m = d.median[i]!;
    const se = d.se[i]!;
    points.push({ x, y: m, lo: m - 1.96 * se, hi: m + 1.96 * se });
  }
  const kept = finitePoints(points);
  const mask = fitRegionMask(d.t);
  const regionX = d.t
    .map((t, i) => ({ t, i }))
    .filter(({ t, i }) => mask[i] && t > 1)
    .map(({ t }) => Math.pow(Math.log(t), power));
  const x0 = Math.min(...regionX);
  const x1 = Math.max(...regionX);
  const xMid = (x0 + x1) / 2;
  const fitAt = (x: number) => d.slope * x + d.intercept;
  const refAt = (x: number) => fitAt(xMid) + d.target * (x - xMid);
  const yValues = kept
    .flatMap((p) => [p.y, p.lo, p.hi])
    .concat([fitAt(x0), fitAt(x1), refAt(x0), refAt(x1)])
    .filter(Number.isFinite);
  const xExtent = padExtent(kept[0]!.x, kept[kept.length - 1]!.x);
  const yExtent = padExtent(Math.min(...yValues), Math.max(...yValues));
  const { x: xs, y: ys } = plotScales(xExtent, yExtent, opts);
  const parts: string[] = [];
  parts.push(
    lineSegment(xs(x0), ys(refAt(x0)), xs(x1), ys(refAt(x1)), {
      class: "theory",
      stroke: COLORS.theory,
      "stroke-width": "1.5",
      "stroke-dasharray": "6 3",
      "data-slope": fmt(d.target),
    })
  );
  parts.push(
    lineSegment(xs(x0), ys(fitAt(x0)), xs(x1), ys(fitAt(x1)), {
      class: "fit",
      stroke: COLORS.fit,
      "stroke-width": "1.5",
      "data-slope": fmt(d.slope),
    })
  );
  parts.push(dataMarks(xs, ys, kept));
  parts.push(
    axes(xs, ys, {
      xLabel: power === 1 ? "log t" : `(log t)^${fmt(power)}`,
      yLabel: "median max displacement",
    })
  );
  parts.push(title("Displacement growth on the log-power scale"));
  parts.push(
    legend([
      [COLORS.data, "median (95% CI)"],
      [COLORS.fit, "fitted line"],
      [COLORS.theory, `reference slope ${fmt(d.target)}`],
    ])
  );
  parts.push(fitAnnotation(d, MARGIN.top + 64));
  parts.push(footer(result.meta, "displacement-vs-logpower"));
  return svgDocument(parts);
}

/**
 * Log-log displacement with the fitted power law and the predicted exponent.
 * Applies to critical and transient regime results.
 */
function renderExponentFit(result: LoadedResult, opts: FigureOptions): string {
  const d = displacementData(result);
  if (d.fitKind !== "critical" && d.fitKind !== "transient") {
    throw new SchemaError(
      `exponent-fit needs a log-log fitted result (critical or transient), got "${d.fitKind}"`
    );
  }
  const points: Point[] = [];
  for (let i = 0; i < d.t.length; i++) {
    const m = d.median[i]!;
    const t = d.t[i]!;
    if (!(m > 0) || !(t > 0)) continue;
    const se = d.se[i]!;
    const lo = m - 1.96 * se;
    points.push({
      x: Math.log(t),
      y: Math.log(m),
      lo: lo > 0 ? Math.log(lo) : NaN,
      hi: Math.log(m + 1.96 * se),
    });
  }
  const kept = finitePoints(points);
  const mask = fitRegionMask(d.t);
  const regionX = d.t
    .map((t, i) => ({ t, i }))
    .filter(({ t, i }) => mask[i] && d.median[i]! > 0)
    .map(({ t }) => Math.log(t));
  if (regionX.length < 2) {
    throw new SchemaError("too few positive medians in the fit region");
  }
  const x0 = Math.min(...regionX);
  const x1 = Math.max(...regionX);
  const xMid = (x0 + x1) / 2;
  const fitAt = (x: number) => d.slope * x + d.intercept;
  const refAt = (x: number) => fitAt(xMid) + d.target * (x - xMid);
  const yValues = kept
    .flatMap((p) => [p.y, p.lo, p.hi])
    .concat([fitAt(x0), fitAt(x1), refAt(x0), refAt(x1)])
    .filter(Number.isFinite);
  const xExtent = padExtent(kept[0]!.x, kept[kept.length - 1]!.x);
  const yExtent = padExtent(Math.min(...yValues), Math.max(...yValues));
  const { x: xs, y: ys } = plotScales(xExtent, yExtent, opts);
  const parts: string[] = [];
  parts.push(
    lineSegment(xs(x0), ys(refAt(x0)), xs(x1), ys(refAt(x1)), {
      class: "theory",
      stroke: COLORS.theory,
      "stroke-width": "1.5",
      "stroke-dasharray": "6 3",
      "data-slope": fmt(d.target),
    })
  );
  parts.push(
    lineSegment(xs(x0), ys(fitAt(x0)), xs(x1), ys(fitAt(x1)), {
      class: "fit",
      stroke: COLORS.fit,
      "stroke-width": "1.5",
      "data-slope": fmt(d.slope),
    })
  );
  parts.push(dataMarks(xs, ys, kept));
  parts.push(axes(xs, ys, { xLabel: "log t", yLabel: "log median max displacement" }));
  parts.push(title(`Growth exponent fit (${d.fitKind} regime)`));
  parts.push(
    legend([
      [COLORS.data, "log median (95% CI)"],
      [COLORS.fit, "fitted exponent"],
      [COLORS.theory, `reference exponent ${fmt(d.target)}`],
    ])
  );
  parts.push(fitAnnotation(d, MARGIN.top + 64));
  parts.push(footer(result.meta, "exponent-fit"));
  return svgDocument(parts);
}

/**
 * Two-sample distribution distances along a size ladder, with the 5 percent
 * critical value for each consecutive pair as the reference.
 */
function renderKsLadder(result: LoadedResult, opts: FigureOptions): string {
  void opts;
  const cols = requireColumns(result, ["n", "count"]);
  const raw = result.meta.provenance["ks_statistics"];
  if (raw === null || typeof raw !== "object" || Array.isArray(raw)) {
    throw new SchemaError('result provenance lacks a "ks_statistics" table');
  }
  const entries = Object.entries(raw as Record<string, unknown>)
    .map(([label, value]) => ({ label, value: Number(value) }))
    .filter((e) => Number.isFinite(e.value));
  if (entries.length === 0) {
    throw new SchemaError("ks_statistics table is empty");
  }
  entries.sort((a, b) => a.label.localeCompare(b.label, "en"));
  const counts = cols["count"]!;
  const criticals = entries.map((_, i) => {
    const ma = counts[Math.min(i, counts.length - 1)]!;
    const mb = counts[Math.min(i + 1, counts.length - 1)]!;
    return 1.358 * Math.sqrt((ma + mb) / (ma * mb));
  });
  const yMax = Math.max(...entries.map((e) => e.value), ...criticals) * 1.2;
  const ys = makeScale([0, yMax], [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const px0 = MARGIN.left;
  const px1 = WIDTH - MARGIN.right;
  const slot = (px1 - px0) / entries.length;
  const parts: string[] = [];
  for (let i = 0; i < entries.length; i++) {
    const e = entries[i]!;
    const xc = px0 + slot * (i + 0.5);
    const barW = Math.min(60, slot * 0.5);
    parts.push(
      element("rect", {
        class: "bar",
        x: xc - barW / 2,
        y: ys(e.value),
        width: barW,
        height: ys(0) - ys(e.value),
        fill: COLORS.data,
        "fill-opacity": "0.75",
        "data-label": e.label.replace("->", " to "),
        "data-value": fmt(e.value),
      })
    );
    parts.push(
      lineSegment(xc - barW / 2 - 8, ys(criticals[i]!), xc + barW / 2 + 8, ys(criticals[i]!), {
        class: "theory",
        stroke: COLORS.theory,
        "stroke-width": "1.5",
        "stroke-dasharray": "5 3",
        "data-critical": fmt(criticals[i]!),
      })
    );
    parts.push(
      text(xc, HEIGHT - MARGIN.bottom + 18, e.label.replace("->", " vs "), {
        class: "tick-label",
        "text-anchor": "middle",
        "font-size": "11",
        fill: "#333",
      })
    );
    parts.push(
      text(xc, ys(e.value) - 6, fmt(e.value), {
        class: "bar-label",
        "text-anchor": "middle",
        "font-size": "11",
        fill: "#111",
      })
    );
  }
  for (const t of [0, yMax / 4, yMax / 2, (3 * yMax) / 4, yMax]) {
    parts.push(lineSegment(px0 - 5, ys(t), px0, ys(t), { class: "tick", stroke: "#333" }));
    parts.push(
      text(px0 - 8, ys(t) + 4, fmt(t), {
        class: "tick-label",
        "text-anchor": "end",
        "font-size": "11",
        fill: "#333",
      })
    );
  }
  parts.push(lineSegment(px0, ys(0), px1, ys(0), { class: "axis", stroke: "#333" }));
  parts.push(lineSegment(px0, ys(0), px0, MARGIN.top, { class: "axis", stroke: "#333" }));
  parts.push(
    text((px0 + px1) / 2, HEIGHT - MARGIN.bottom + 40, "consecutive tree sizes", {
      class: "axis-label",
      "text-anchor": "middle",
      "font-size": "13",
      fill: "#111",
    })
  );
  parts.push(
    element(
      "text",
      {
        x: 0,
        y: 0,
        class: "axis-label",
        "text-anchor": "middle",
        "font-size": "13",
        fill: "#111",
        transform: `translate(${(px0 - 52).toFixed(2)} ${((ys(0) + MARGIN.top) / 2).toFixed(2)}) rotate(-90)`,
      },
      "KS statistic"
    )
  );
  parts.push(title("Distribution stability along the size ladder"));
  parts.push(
    legend([
      [COLORS.data, "two-sample KS"],
      [COLORS.theory, "5% critical value"],
    ])
  );
  parts.push(footer(result.meta, "ks-ladder"));
  return svgDocument(parts);
}

/**
 * Validate the referenced result files, render the figure, and write the
 * image.  Returns the written path.
 */
export function renderFigure(spec: FigureSpec): string {
  const result = loadResult(spec.resultPath);
  const svg = render(spec.kind, result, { xScale: spec.xScale, yScale: spec.yScale });
  fs.mkdirSync(path.dirname(path.resolve(spec.outPath)), { recursive: true });
  fs.writeFileSync(spec.outPath, svg, "utf8");
  return spec.outPath;
}

/**
 * Render one figure kind from a loaded result.  Pure: identical inputs give
 * byte-identical SVG text.
 */
export function render(kind: FigureKind, result: LoadedResult, opts: FigureOptions = {}): string {
  switch (kind) {
    case "variance-convergence":
      return renderConvergence(result, kind, "var", opts);
    case "mean-convergence":
      return renderConvergence(result, kind, "mean", opts);
    case "displacement-vs-logpower":
      return renderLogPower(result, opts);
    case "exponent-fit":
      return renderExponentFit(result, opts);
    case "ks-ladder":
      return renderKsLadder(result, opts);
    default: {
      const bad: never = kind;
      throw new SchemaError(`unknown figure kind: ${String(bad)}`);
    }
  }
}

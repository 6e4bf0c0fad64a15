/**
 * Small deterministic SVG builders.
 *
 * Everything here is plain string assembly: given the same inputs the
 * output bytes are identical, which the figure tests rely on.
 */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGIN: Margin = { top: 48, right: 28, bottom: 64, left: 72 };

/** Format a coordinate for an SVG attribute: fixed 2 decimals, no negative zero. */
export function coord(x: number): string {
  const r = x.toFixed(2);
  return r === "-0.00" ? "0.00" : r;
}

/** Format a data value for labels: short, stable, locale-free. */
export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "nan";
  if (x === 0) return "0";
  const ax = Math.abs(x);
  if (ax >= 1e6 || ax < 1e-3) {
    return x.toExponential(2).replace("e+", "e");
  }
  let s = x.toPrecision(6);
  if (s.includes(".")) {
    s = s.replace(/0+$/, "").replace(/\.$/, "");
  }
  return s;
}

export function escapeText(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface Scale {
  (value: number): number;
  domain: [number, number];
  range: [number, number];
  log: boolean;
}

/** Affine map from data domain to pixel range, optionally through log10. */
export function makeScale(domain: [number, number], range: [number, number], log = false): Scale {
  const [d0, d1] = log ? [Math.log10(domain[0]), Math.log10(domain[1])] : domain;
  const span = d1 - d0 || 1;
  const scale = ((value: number): number => {
    const v = log ? Math.log10(value) : value;
    return range[0] + ((v - d0) / span) * (range[1] - range[0]);
  }) as Scale;
  scale.domain = domain;
  scale.range = range;
  scale.log = log;
  return scale;
}

/** Pad a [lo, hi] data extent so points do not sit on the plot border. */
export function padExtent(lo: number, hi: number, frac = 0.06): [number, number] {
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) return [0, 1];
  if (lo === hi) {
    const pad = lo === 0 ? 1 : Math.abs(lo) * frac;
    return [lo - pad, hi + pad];
  }
  const pad = (hi - lo) * frac;
  return [lo - pad, hi + pad];
}

/** Round-valued ticks on a 1-2-5 ladder covering the domain. */
export function linearTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / Math.max(1, count);
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (mag * m >= rawStep) {
      step = mag * m;
      break;
    }
  }
  const ticks: number[] = [];
  let t = Math.ceil(lo / step) * step;
  for (; t <= hi + step * 1e-9; t += step) {
    const snapped = Math.abs(t) < step * 1e-9 ? 0 : t;
    ticks.push(Number(snapped.toPrecision(12)));
  }
  return ticks;
}

/** Decade ticks for log-scaled axes. */
export function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  const k0 = Math.ceil(Math.log10(lo) - 1e-9);
  const k1 = Math.floor(Math.log10(hi) + 1e-9);
  for (let k = k0; k <= k1; k++) {
    ticks.push(Math.pow(10, k));
  }
  if (ticks.length === 0) ticks.push(lo, hi);
  return ticks;
}

export interface Attrs {
  [name: string]: string | number;
}

export function element(tag: string, attrs: Attrs, body?: string): string {
  const parts = Object.entries(attrs).map(
    ([k, v]) => `${k}="${typeof v === "number" ? coord(v) : v}"`
  );
  const open = `<${tag} ${parts.join(" ")}`;
  if (body === undefined) return open + "/>";
  return `${open}>${body}</${tag}>`;
}

export function lineSegment(
  x1: number,
  y1: number,
  x2: number,
  y2: number,
  attrs: Attrs
): string {
  return element("line", { x1, y1, x2, y2, ...attrs });
}

export function circle(cx: number, cy: number, r: number, attrs: Attrs): string {
  return element("circle", { cx, cy, r, ...attrs });
}

export function polyline(points: Array<[number, number]>, attrs: Attrs): string {
  const pts = points.map(([x, y]) => `${coord(x)},${coord(y)}`).join(" ");
  return element("polyline", { points: pts, fill: "none", ...attrs });
}

export function polygon(points: Array<[number, number]>, attrs: Attrs): string {
  const pts = points.map(([x, y]) => `${coord(x)},${coord(y)}`).join(" ");
  return element("polygon", { points: pts, ...attrs });
}

export function text(x: number, y: number, content: string, attrs: Attrs): string {
  return element("text", { x, y, ...attrs }, escapeText(content));
}

export interface AxisOptions {
  xLabel: string;
  yLabel: string;
  xTickFormat?: (t: number) => string;
  yTickFormat?: (t: number) => string;
}

/** Render axes, tick marks, grid lines, and axis labels for a plot frame. */
export function axes(xScale: Scale, yScale: Scale, opts: AxisOptions): string {
  const fmtX = opts.xTickFormat ?? fmt;
  const fmtY = opts.yTickFormat ?? fmt;
  const [px0, px1] = xScale.range;
  const [py0, py1] = yScale.range;
  const xTicks = xScale.log
    ? logTicks(xScale.domain[0], xScale.domain[1])
    : linearTicks(xScale.domain[0], xScale.domain[1]);
  const yTicks = yScale.log
    ? logTicks(yScale.domain[0], yScale.domain[1])
    : linearTicks(yScale.domain[0], yScale.domain[1]);
  const parts: string[] = [];
  for (const t of xTicks) {
    const x = xScale(t);
    parts.push(lineSegment(x, py0, x, py1, { class: "grid", stroke: "#e0e0e0" }));
    parts.push(lineSegment(x, py0, x, py0 + 5, { class: "tick", stroke: "#333" }));
    parts.push(
      text(x, py0 + 18, fmtX(t), {
        class: "tick-label",
        "text-anchor": "middle",
        "font-size": "11",
        fill: "#333",
      })
    );
  }
  for (const t of yTicks) {
    const y = yScale(t);
    parts.push(lineSegment(px0, y, px1, y, { class: "grid", stroke: "#e0e0e0" }));
    parts.push(lineSegment(px0 - 5, y, px0, y, { class: "tick", stroke: "#333" }));
    parts.push(
      text(px0 - 8, y + 4, fmtY(t), {
        class: "tick-label",
        "text-anchor": "end",
        "font-size": "11",
        fill: "#333",
      })
    );
  }
  parts.push(lineSegment(px0, py0, px1, py0, { class: "axis", stroke: "#333" }));
  parts.push(lineSegment(px0, py0, px0, py1, { class: "axis", stroke: "#333" }));
  parts.push(
    text((px0 + px1) / 2, py0 + 40, opts.xLabel, {
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
        transform: `translate(${coord(px0 - 52)} ${coord((py0 + py1) / 2)}) rotate(-90)`,
      },
      escapeText(opts.yLabel)
    )
  );
  return parts.join("\n");
}

/** Wrap plot content in a complete standalone SVG document. */
export function document(body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">`,
    element("rect", { x: 0, y: 0, width: WIDTH, height: HEIGHT, fill: "#ffffff" }),
    ...body,
    "</svg>",
    "",
  ].join("\n");
}

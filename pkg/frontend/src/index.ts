export { SchemaError, loadResult, numericParameter, requireColumns } from "./schema.js";
export type { LoadedResult, ResultMeta, Verdict } from "./schema.js";
export { FIGURE_KINDS, render, renderFigure, specHash } from "./figures.js";
export type { FigureKind, FigureOptions, FigureSpec } from "./figures.js";
export { runCli } from "./cli.js";

#!/usr/bin/env node
import yargs from "yargs";
import { FIGURE_KINDS, FigureKind, renderFigure } from "./figures.js";
import { SchemaError } from "./schema.js";

export interface CliIo {
  out: (line: string) => void;
  err: (line: string) => void;
}

const defaultIo: CliIo = {
  out: (line) => process.stdout.write(line + "\n"),
  err: (line) => process.stderr.write(line + "\n"),
};

/** Entry point shared by the installed `plot` binary and the tests. */
export async function runCli(argv: string[], io: CliIo = defaultIo): Promise<number> {
  let usageError: string | null = null;
  const parser = yargs(argv)
    .scriptName("plot")
    .usage("$0 <figure-kind> <result-path> [options]")
    .command("$0 <figure-kind> <result-path>", "render a figure from a persisted result", (cmd) =>
      cmd
        .positional("figure-kind", {
          describe: "which figure to draw",
          type: "string",
          choices: FIGURE_KINDS,
        })
        .positional("result-path", {
          describe: "path of a result pair (.csv or .json half, or the bare base)",
          type: "string",
        })
    )
    .option("o", {
      alias: "out",
      describe: "output image path (defaults next to the result)",
      type: "string",
    })
    .option("x-scale", { choices: ["linear", "log"] as const, default: "linear" as const })
    .option("y-scale", { choices: ["linear", "log"] as const, default: "linear" as const })
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      usageError = msg ?? (err ? err.message : "invalid usage");
    })
    .version("0.1.0")
    .help();

  let parsed;
  try {
    parsed = await parser.parse();
  } catch (err) {
    usageError = usageError ?? (err as Error).message;
    parsed = null;
  }
  if (usageError !== null) {
    io.err(`error: ${usageError}`);
    io.err("run `plot --help` for usage");
    return 2;
  }
  if (parsed === null || parsed.figureKind === undefined) {
    // --help / --version path: yargs already printed
    return 0;
  }

  const kind = parsed.figureKind as FigureKind;
  const resultPath = String(parsed.resultPath);
  const outPath =
    parsed.o !== undefined
      ? String(parsed.o)
      : resultPath.replace(/\.(csv|json)$/, "") + `.${kind}.svg`;
  try {
    const written = renderFigure({
      kind,
      resultPath,
      outPath,
      xScale: parsed.xScale as "linear" | "log",
      yScale: parsed.yScale as "linear" | "log",
    });
    io.out(`wrote ${written} (${kind})`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      io.err(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  (process.argv[1].endsWith("cli.js") || process.argv[1].endsWith("plot"));

if (invokedDirectly) {
  runCli(process.argv.slice(2)).then(
    (code) => process.exit(code),
    (err) => {
      process.stderr.write(`error: ${(err as Error).message}\n`);
      process.exit(1);
    }
  );
}

#!/usr/bin/env node
import { readFileSync, writeFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { DataError } from "./csv.js";
import { FAMILIES, Family, FigureSpec, renderFigure } from "./figures.js";

function renderOne(spec: FigureSpec): void {
  const svg = renderFigure(spec);
  writeFileSync(spec.output, svg);
  console.log(`wrote ${spec.output}`);
}

export function main(argv: string[]): number {
  try {
    yargs(argv)
      .command(
        "render",
        "Render one figure (flags) or a batch (--spec)",
        (y) =>
          y
            .option("spec", {
              type: "string",
              describe: "JSON file with a list of figure specs",
            })
            .option("input", { type: "string", describe: "input CSV path" })
            .option("family", {
              type: "string",
              choices: FAMILIES as unknown as string[],
            })
            .option("output", { type: "string", describe: "output SVG path" })
            .option("x", { type: "string" })
            .option("y", { type: "string" })
            .option("group", { type: "string" })
            .option("format", { type: "string", default: "svg" }),
        (args) => {
          if (args.spec !== undefined) {
            const specs = JSON.parse(readFileSync(args.spec, "utf-8")) as FigureSpec[];
            if (!Array.isArray(specs)) {
              throw new DataError(`${args.spec}: expected a JSON array of figure specs`);
            }
            for (const spec of specs) renderOne(spec);
            return;
          }
          if (args.input === undefined || args.family === undefined ||
              args.output === undefined) {
            throw new DataError(
              "render requires --spec, or all of --input, --family, --output",
            );
          }
          renderOne({
            family: args.family as Family,
            input: args.input,
            output: args.output,
            x: args.x,
            y: args.y,
            group: args.group,
            format: args.format,
          });
        },
      )
      .demandCommand(1)
      .strict()
      .exitProcess(false)
      .fail((msg, err) => {
        throw err ?? new DataError(msg);
      })
      .parseSync();
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

if (process.argv[1] !== undefined && import.meta.url.endsWith(
      process.argv[1].split("/").pop() ?? "")) {
  process.exit(main(hideBin(process.argv)));
}

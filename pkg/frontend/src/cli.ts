#!/usr/bin/env node
/**
 * Figure renderer CLI:
 *
 *   d2dcache-render render --kind tradeoff --in results.csv [more.csv...] --out fig.svg
 *
 * Kinds: tradeoff, cdf, density, cache, library, bandsplit. The cdf kind
 * reads per-user dump files; all others read the results schema. On any
 * error the process exits nonzero and no output file is written.
 */
import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { FIGURE_KINDS, FigureKind, renderFigure } from "./figures.js";

export function main(argv: string[]): number {
  const [verb, ...rest] = argv;
  if (verb !== "render") {
    process.stderr.write("usage: d2dcache-render render --kind KIND --in CSV... --out PATH\n");
    return 2;
  }
  let parsed;
  try {
    parsed = parseArgs({
      args: rest,
      options: {
        kind: { type: "string" },
        in: { type: "string", multiple: true },
        out: { type: "string" },
      },
    });
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n`);
    return 2;
  }
  const { kind, in: inputs, out } = parsed.values;
  if (!kind || !inputs || inputs.length === 0 || !out) {
    process.stderr.write("render needs --kind, at least one --in and --out\n");
    return 2;
  }
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    process.stderr.write(`unknown kind ${kind}; choose from ${FIGURE_KINDS.join(", ")}\n`);
    return 2;
  }
  try {
    const named = inputs.map((p) => ({ source: p, text: readFileSync(p, "utf8") }));
    const svg = renderFigure(kind as FigureKind, named);
    writeFileSync(out, svg);
    process.stdout.write(`wrote ${out}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));

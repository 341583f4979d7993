#!/usr/bin/env node
/**
 * render_figures <bundle-dir> <out-dir>
 *
 * Renders every figure whose input CSVs are present in the bundle.  Exits
 * 1 on usage errors, 2 when a present bundle file violates its column
 * contract, 3 when nothing in the bundle is renderable.
 */

import { existsSync, mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { ContractError } from "./csv.js";
import { RENDERERS } from "./figures.js";

export function main(argv: string[]): number {
  if (argv.length !== 2) {
    console.error("usage: render_figures <bundle-dir> <out-dir>");
    return 1;
  }
  const [bundleDir, outDir] = argv;
  if (!existsSync(bundleDir)) {
    console.error(`bundle directory not found: ${bundleDir}`);
    return 1;
  }
  const present = RENDERERS.filter((job) => job.inputs.every((f) => existsSync(join(bundleDir, f))));
  if (present.length === 0) {
    console.error("no renderable figure inputs found in the bundle");
    return 3;
  }
  mkdirSync(outDir, { recursive: true });
  for (const job of present) {
    let svg: string;
    try {
      svg = job.render(bundleDir);
    } catch (err) {
      if (err instanceof ContractError) {
        console.error(`${job.id}: ${err.message}`);
        return 2;
      }
      throw err;
    }
    const target = join(outDir, job.output);
    writeFileSync(target, svg, "ascii");
    console.log(`wrote ${target}`);
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  (process.argv[1].endsWith("cli.js") || process.argv[1].endsWith("render_figures"));
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}

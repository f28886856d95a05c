#!/usr/bin/env node
/** Figure renderer for the exterior-heat experiment outputs.
 *
 * Usage:
 *   render decay   --input rate.csv [--slope -0.5[,s2]] [--log-correction] --output fig.svg
 *   render profile --input profile.csv --output fig.svg
 *   render annuli  --input annuli_trace.csv --report complexity.json --output fig.svg
 */

import { render, type FigureKind, type FigureSpec } from "./figures.js";

const KIND_ALIASES: Record<string, FigureKind> = {
  decay: "decay",
  profile: "profile",
  annuli: "annuli_trace",
  annuli_trace: "annuli_trace",
};

export function parseArgs(argv: string[]): FigureSpec {
  if (argv.length === 0) {
    throw new Error("usage: render <decay|profile|annuli> --input CSV --output SVG [...]");
  }
  const kind = KIND_ALIASES[argv[0]];
  if (!kind) {
    throw new Error(`unknown figure kind: ${argv[0]}`);
  }
  const spec: Partial<FigureSpec> = { kind };
  for (let i = 1; i < argv.length; i++) {
    const flag = argv[i];
    const next = () => {
      if (i + 1 >= argv.length) throw new Error(`missing value for ${flag}`);
      return argv[++i];
    };
    switch (flag) {
      case "--input":
        spec.input = next();
        break;
      case "--output":
        spec.output = next();
        break;
      case "--report":
        spec.report = next();
        break;
      case "--slope":
        spec.referenceSlopes = next().split(",").map(Number);
        if (spec.referenceSlopes.some(Number.isNaN)) {
          throw new Error("--slope expects a comma list of numbers");
        }
        break;
      case "--log-correction":
        spec.logCorrection = true;
        break;
      case "--title":
        spec.title = next();
        break;
      default:
        throw new Error(`unknown flag: ${flag}`);
    }
  }
  if (!spec.input) throw new Error("--input is required");
  if (!spec.output) throw new Error("--output is required");
  return spec as FigureSpec;
}

export function run(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    render(spec);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  process.exit(run(process.argv.slice(2)));
}

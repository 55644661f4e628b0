/**
 * Offline tooling CLI.
 *
 * Usage:
 *   cli.ts convert --source ckpt.safetensors --config A48 --mapping map.json --out weights.cldw
 *   cli.ts plot --csv bench.csv --out scaling.svg
 */
import { convertCheckpoint } from "./convert.js";
import { plotBench } from "./plot.js";

interface Args {
  [key: string]: string;
}

function parseFlags(argv: string[], required: string[]): Args {
  const args: Args = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) throw new Error(`unexpected argument '${arg}'`);
    const key = arg.slice(2);
    const value = argv[++i];
    if (value === undefined) throw new Error(`flag --${key} needs a value`);
    args[key] = value;
  }
  for (const key of required) {
    if (!(key in args)) throw new Error(`missing required flag --${key}`);
  }
  return args;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "convert") {
      const args = parseFlags(rest, ["source", "config", "mapping", "out"]);
      const report = convertCheckpoint(args.source, args.config, args.mapping, args.out);
      console.log(
        `wrote ${args.out}: ${report.config}, ${report.tensorCount} tensors, ` +
          `${report.scalarCount} scalars`
      );
      return 0;
    }
    if (command === "plot") {
      const args = parseFlags(rest, ["csv", "out"]);
      const seriesCount = plotBench(args.csv, args.out);
      console.log(`wrote ${args.out}: ${seriesCount} series`);
      return 0;
    }
    console.error("usage: cli.ts <convert|plot> [flags]");
    return 2;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.ts") || entry.endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}

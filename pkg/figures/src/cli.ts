/**
 * Figure renderer CLI.
 *
 * Usage: render --job fig6 --in <experiment output root> --out <file.svg>
 * Exit codes: 0 rendered, 1 bad arguments, 2 schema/render failure.
 */

import { writeFile } from "fs/promises";
import process from "process";

import { SchemaError } from "./csv.js";
import { JOB_IDS, JOBS, JobId } from "./jobs.js";

function parseArgs(argv: string[]): { job: JobId; inDir: string; out: string } | null {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || i + 1 >= argv.length) return null;
    args.set(argv[i].slice(2), argv[i + 1]);
  }
  const job = args.get("job");
  const inDir = args.get("in");
  const out = args.get("out");
  if (!job || !inDir || !out) return null;
  if (!(JOB_IDS as readonly string[]).includes(job)) {
    console.error(`unknown job "${job}"; valid jobs: ${JOB_IDS.join(", ")}`);
    return null;
  }
  return { job: job as JobId, inDir, out };
}

export async function main(argv: string[]): Promise<number> {
  if (argv[0] === "render") argv = argv.slice(1);
  const parsed = parseArgs(argv);
  if (!parsed) {
    console.error("usage: render --job <fig4a..fig8b> --in <dir> --out <file.svg>");
    return 1;
  }
  try {
    const svg = await JOBS[parsed.job](parsed.inDir);
    await writeFile(parsed.out, svg, "utf8");
    console.log(`rendered ${parsed.job} -> ${parsed.out}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
    } else {
      console.error(`render failure: ${(err as Error).message}`);
    }
    return 2;
  }
}

const invokedDirectly =
  process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => process.exit(code));
}

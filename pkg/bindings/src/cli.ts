import { spawnSync } from "node:child_process";

import { TabseqCliError } from "./errors.js";

// Shards can run to tens of MB; keep spawnSync from truncating them.
const MAX_OUTPUT_BYTES = 1 << 30;

/**
 * Resolve the command line used to reach the pipeline.
 *
 * Defaults to the `tabseq` console script on PATH.  The TABSEQ_CMD
 * environment variable overrides it and may carry leading arguments,
 * e.g. `TABSEQ_CMD="python3 -m tabseq.cli"`.
 */
export function cliCommand(): string[] {
  const raw = process.env["TABSEQ_CMD"] ?? "tabseq";
  const parts = raw.split(/\s+/).filter((p) => p.length > 0);
  if (parts.length === 0) {
    throw new TabseqCliError("TABSEQ_CMD is set but empty", 64);
  }
  return parts;
}

export interface CliResult {
  stdout: string;
  stderr: string;
}

/**
 * Run one tabseq subcommand to completion.
 *
 * Throws TabseqCliError on a nonzero exit, with the CLI's stderr as the
 * message so validation errors pass through verbatim.
 */
export function runCli(args: string[], input?: string): CliResult {
  const [cmd, ...head] = cliCommand();
  const res = spawnSync(cmd, [...head, ...args], {
    input: input ?? "",
    encoding: "utf8",
    maxBuffer: MAX_OUTPUT_BYTES,
  });
  if (res.error !== undefined) {
    throw new TabseqCliError(`failed to run ${cmd}: ${res.error.message}`, -1);
  }
  if (res.status !== 0) {
    const detail = (res.stderr ?? "").trim() || `exit code ${res.status}`;
    throw new TabseqCliError(detail, res.status ?? -1);
  }
  return { stdout: res.stdout ?? "", stderr: res.stderr ?? "" };
}

import { runCli } from "./cli.js";
import { TabseqCliError } from "./errors.js";
import { BoundRecord, parseRecordLine } from "./records.js";

export type TransformOp =
  | "sanitize"
  | "linearize"
  | "denoise"
  | "generation"
  | "completion";

const OPS: ReadonlySet<string> = new Set([
  "sanitize",
  "linearize",
  "denoise",
  "generation",
  "completion",
]);

export interface TransformConfig {
  mode?: "unified" | "rf";
  types?: boolean;
  seed?: number;
}

/** Canonical example fields, as accepted on the transform wire format. */
export interface ExampleFields {
  headers: string[];
  rows: string[][];
  context?: { kind: "nl" | "sql"; text: string; turns?: string[] };
  meta?: Record<string, string>;
}

export type TransformResult = string | ExampleFields | BoundRecord;

/**
 * Apply one pipeline stage to a single example.
 *
 * Delegates to `tabseq transform --op <opName>`; the result mirrors the
 * stage's native output: `linearize` returns the serialized string,
 * `sanitize` the cleaned canonical fields, and the objective stages a
 * BoundRecord.  Per-example failures throw TabseqCliError with the
 * stage's message.
 */
export function transform(
  example: ExampleFields,
  opName: TransformOp,
  config: TransformConfig = {},
): TransformResult {
  if (!OPS.has(opName)) {
    throw new TabseqCliError(`unknown op ${String(opName)}`, 64);
  }
  const args = ["transform", "--op", opName];
  if (config.mode !== undefined) {
    args.push("--mode", config.mode);
  }
  if (config.types === true) {
    args.push("--types");
  }
  if (config.seed !== undefined) {
    args.push("--seed", String(config.seed));
  }
  const res = runCli(args, JSON.stringify(example) + "\n");
  const line = res.stdout.split("\n").find((l) => l.length > 0);
  if (line === undefined) {
    throw new TabseqCliError("transform produced no output", 2);
  }
  const parsed = JSON.parse(line) as Record<string, unknown>;
  if (typeof parsed["error"] === "string") {
    throw new TabseqCliError(parsed["error"], 1);
  }
  if (opName === "linearize") {
    return parsed["linearized"] as string;
  }
  if (opName === "sanitize") {
    return parsed as unknown as ExampleFields;
  }
  return parseRecordLine(line);
}

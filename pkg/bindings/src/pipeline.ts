import * as fs from "node:fs";
import * as path from "node:path";

import { runCli } from "./cli.js";
import { TabseqCliError } from "./errors.js";
import { BoundRecord, parseRecordLine } from "./records.js";

export interface PipelineOptions {
  seed?: number;
  mode?: "unified" | "rf";
  workers?: number;
  debugProvenance?: boolean;
}

interface ShardEntry {
  name: string;
  count: number;
  digest: string;
}

interface RunManifest {
  shards: ShardEntry[];
  [key: string]: unknown;
}

/**
 * A built pretraining run, iterable as native records.
 *
 * Every call to Symbol.iterator re-reads the shard files in manifest
 * order, so separate passes yield identical sequences; treat any single
 * iterator as single-consumer.  Pipelines share no state, so independent
 * opens can be consumed concurrently.
 */
export class Pipeline implements Iterable<BoundRecord> {
  readonly outDir: string;
  readonly runManifest: RunManifest;

  constructor(outDir: string) {
    this.outDir = outDir;
    const manifestPath = path.join(outDir, "manifest.json");
    let raw: string;
    try {
      raw = fs.readFileSync(manifestPath, "utf8");
    } catch (err) {
      throw new TabseqCliError(`cannot read ${manifestPath}: ${String(err)}`, 2);
    }
    this.runManifest = JSON.parse(raw) as RunManifest;
    if (!Array.isArray(this.runManifest.shards)) {
      throw new TabseqCliError(`${manifestPath} has no shards list`, 2);
    }
  }

  /** Total record count, from the run manifest's shard entries. */
  lengthHint(): number {
    return this.runManifest.shards.reduce((n, s) => n + s.count, 0);
  }

  *[Symbol.iterator](): Iterator<BoundRecord> {
    for (const shard of this.runManifest.shards) {
      const text = fs.readFileSync(path.join(this.outDir, shard.name), "utf8");
      for (const line of text.split("\n")) {
        if (line.length > 0) {
          yield parseRecordLine(line);
        }
      }
    }
  }
}

const WROTE_RE = /^wrote \d+ records in \d+ shards to (.+)$/m;

/**
 * Build the run described by a corpus manifest and open the result.
 *
 * Delegates to `tabseq build-pretrain`; an invalid manifest surfaces as a
 * TabseqCliError carrying the CLI's validation message verbatim.  The
 * second argument is either a seed or a full options object.
 */
export function openPipeline(
  manifestPath: string,
  seedOrOptions?: number | PipelineOptions,
): Pipeline {
  const options: PipelineOptions =
    typeof seedOrOptions === "number" ? { seed: seedOrOptions } : seedOrOptions ?? {};
  const args = ["build-pretrain", manifestPath];
  if (options.seed !== undefined) {
    args.push("--seed", String(options.seed));
  }
  if (options.mode !== undefined) {
    args.push("--mode", options.mode);
  }
  if (options.workers !== undefined) {
    args.push("--workers", String(options.workers));
  }
  if (options.debugProvenance === true) {
    args.push("--debug-provenance");
  }
  const res = runCli(args);
  const match = WROTE_RE.exec(res.stdout);
  if (match === null) {
    throw new TabseqCliError(`unexpected build output: ${res.stdout.trim()}`, 2);
  }
  return new Pipeline(match[1]);
}

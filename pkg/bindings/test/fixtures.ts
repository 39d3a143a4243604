import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

const WORDS = [
  "amber", "basin", "cedar", "delta", "ember", "fjord", "grove", "heron",
  "inlet", "jetty", "knoll", "larch", "mesa", "north", "otter", "perch",
  "quartz", "ridge", "shale", "tarn", "upland", "vale", "wharf", "yonder",
];

/** Deterministic uniform generator; fixtures must not depend on Math.random. */
export function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (Math.imul(state, 1664525) + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

function pickInt(rand: () => number, lo: number, hi: number): number {
  return lo + Math.floor(rand() * (hi - lo + 1));
}

function phrase(rand: () => number, nWords: number): string {
  const out: string[] = [];
  for (let i = 0; i < nWords; i++) {
    out.push(WORDS[pickInt(rand, 0, WORDS.length - 1)]);
  }
  return out.join(" ");
}

/** One canonical corpus record with a small random table and context. */
export function makeRecord(rand: () => number): Record<string, unknown> {
  const nCols = pickInt(rand, 1, 5);
  const nRows = pickInt(rand, 1, 12);
  const headers: string[] = [];
  for (let c = 0; c < nCols; c++) {
    headers.push(phrase(rand, pickInt(rand, 1, 2)));
  }
  const rows: string[][] = [];
  for (let r = 0; r < nRows; r++) {
    const row: string[] = [];
    for (let c = 0; c < nCols; c++) {
      row.push(phrase(rand, pickInt(rand, 1, 2)));
    }
    rows.push(row);
  }
  const record: Record<string, unknown> = { headers, rows };
  const ctxWords = pickInt(rand, 0, 12);
  if (ctxWords > 0) {
    const kind = rand() < 0.5 ? "nl" : "sql";
    record["context"] = { kind, text: phrase(rand, ctxWords) };
  }
  return record;
}

const RUN_TOML = `seed = 7
shard_size = 250
output_dir = "out"

[objective_config]
max_len = 256

[[sources]]
name = "fix"
path = "corpus.ndjson"
format = "canonical"
category = "table_text"
`;

/** Write an n-record corpus plus its run manifest; returns the manifest path. */
export function writeFixture(dir: string, n: number, seed = 1234): string {
  const rand = lcg(seed);
  const lines: string[] = [];
  for (let i = 0; i < n; i++) {
    lines.push(JSON.stringify(makeRecord(rand)));
  }
  fs.writeFileSync(path.join(dir, "corpus.ndjson"), lines.join("\n") + "\n");
  const manifestPath = path.join(dir, "run.toml");
  fs.writeFileSync(manifestPath, RUN_TOML);
  return manifestPath;
}

/** Fresh scratch directory under the system tmpdir. */
export function mkScratch(tag: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), `tabseq-bindings-${tag}-`));
}

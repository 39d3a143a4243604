import { TabseqCliError } from "./errors.js";

/**
 * One seq2seq record as carried on the NDJSON wire format, with token
 * lists as native arrays and meta as a native object.
 */
export interface BoundRecord {
  example_id: string;
  objective: string;
  encoder_input: string[];
  decoder_input: string[];
  decoder_target: string[];
  meta: Record<string, unknown>;
}

function isStringArray(v: unknown): v is string[] {
  return Array.isArray(v) && v.every((t) => typeof t === "string");
}

/** Parse one shard line into a BoundRecord, validating its shape. */
export function parseRecordLine(line: string): BoundRecord {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch (err) {
    throw new TabseqCliError(`record line is not valid JSON: ${String(err)}`, 1);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new TabseqCliError("record line is not a JSON object", 1);
  }
  const rec = obj as Record<string, unknown>;
  if (typeof rec["example_id"] !== "string" || typeof rec["objective"] !== "string") {
    throw new TabseqCliError("record needs string example_id and objective", 1);
  }
  for (const field of ["encoder_input", "decoder_input", "decoder_target"]) {
    if (!isStringArray(rec[field])) {
      throw new TabseqCliError(`record field ${field} must be a string array`, 1);
    }
  }
  const meta = rec["meta"];
  if (typeof meta !== "object" || meta === null || Array.isArray(meta)) {
    throw new TabseqCliError("record meta must be an object", 1);
  }
  return {
    example_id: rec["example_id"],
    objective: rec["objective"],
    encoder_input: rec["encoder_input"] as string[],
    decoder_input: rec["decoder_input"] as string[],
    decoder_target: rec["decoder_target"] as string[],
    meta: meta as Record<string, unknown>,
  };
}

/**
 * Serialize a record in the exact shard wire format: compact JSON with a
 * fixed top-level key order.  A record parsed from a shard line
 * re-serializes to identical bytes; meta keys keep their parsed order.
 */
export function serializeRecord(rec: BoundRecord): string {
  return JSON.stringify({
    example_id: rec.example_id,
    objective: rec.objective,
    encoder_input: rec.encoder_input,
    decoder_input: rec.decoder_input,
    decoder_target: rec.decoder_target,
    meta: rec.meta,
  });
}

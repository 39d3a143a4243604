import { runCli } from "./cli.js";

/**
 * The reserved-token registry in canonical order: structural and task
 * tokens first, then `<sentinel_1>` through `<sentinel_maxSentinels>`.
 */
export function vocab(maxSentinels = 100): string[] {
  const res = runCli(["vocab", "--max-sentinels", String(maxSentinels)]);
  return res.stdout.split("\n").filter((t) => t.length > 0);
}

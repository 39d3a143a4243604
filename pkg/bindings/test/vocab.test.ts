import { describe, expect, it } from "vitest";

import { runCli, version, vocab } from "../src/index.js";

describe("vocab", () => {
  it("returns the full registry in canonical order", () => {
    const tokens = vocab();
    expect(tokens.length).toBe(114);
    expect(tokens[0]).toBe("<context>");
    expect(tokens).toContain("<denoising>");
    expect(tokens[tokens.length - 1]).toBe("<sentinel_100>");
  });

  it("honors a smaller sentinel budget", () => {
    const tokens = vocab(2);
    expect(tokens.length).toBe(16);
    expect(tokens[tokens.length - 1]).toBe("<sentinel_2>");
  });
});

describe("version", () => {
  it("mirrors the pipeline version string", () => {
    const res = runCli(["--version"]);
    expect(res.stdout.trim()).toBe(`tabseq ${version}`);
  });
});

import { defineConfig } from "vitest/config";

// Pipeline builds shell out to the CLI; give them room.
export default defineConfig({
  test: {
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});

import { defineConfig } from "vitest/config";

// Every binding call drives the Python CLI in a subprocess, so these are
// integration tests; the random-corpus cases need far more than the default
// per-test budget.
export default defineConfig({
  test: {
    testTimeout: 180_000,
  },
});

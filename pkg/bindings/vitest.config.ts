import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // parity tests spawn the real CLI many times; interpreter startup dominates
    testTimeout: 300_000,
    hookTimeout: 300_000,
  },
});

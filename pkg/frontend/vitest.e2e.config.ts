import { defineConfig } from "vitest/config";

// Studio-loop test against a running service; see scripts/e2e.md.
export default defineConfig({
  test: {
    environment: "node",
    include: ["src/__tests__/e2e/**/*.e2e.ts"],
    testTimeout: 60000,
  },
});

import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["test/**/*.test.ts"],
    // the end-to-end test boots the python service and a warm-start fit
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});

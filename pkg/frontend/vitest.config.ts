import { defineConfig } from "vitest/config";

export default defineConfig({
    test: {
        environment: "happy-dom",
        environmentOptions: {
            happyDOM: { url: "http://localhost:8601" },
        },
        include: ["tests/**/*.test.ts"],
        // ui_loop drives a real service subprocess through upload, task
        // completion, and polling; generous ceiling keeps slow starts green.
        testTimeout: 60000,
        hookTimeout: 30000,
    },
});

import { defineConfig } from "vitest/config";

export default defineConfig({
  // relative asset URLs so the bundle works under any mount point
  base: "./",
  build: {
    outDir: "dist",
    emptyOutDir: true,
  },
  server: {
    proxy: {
      // dev server forwards API calls to a locally running `acbckit serve`
      "/studies": "http://127.0.0.1:8000",
      "/sessions": "http://127.0.0.1:8000",
      "/healthz": "http://127.0.0.1:8000",
    },
  },
  test: {
    include: ["test/**/*.test.ts"],
    environment: "node",
  },
});

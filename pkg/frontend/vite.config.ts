import { defineConfig } from "vite";

export default defineConfig({
  server: {
    proxy: {
      // dev server proxies API calls to a locally running `tmm serve`
      "/api": "http://127.0.0.1:7700",
    },
  },
  test: {
    environment: "node",
    testTimeout: 60_000,
    hookTimeout: 120_000,
  },
});

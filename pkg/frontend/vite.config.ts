import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    proxy: {
      // point the dev server at a locally running backend
      "/api": "http://127.0.0.1:8760",
      "/healthz": "http://127.0.0.1:8760",
    },
  },
  test: {
    environment: "jsdom",
  },
});

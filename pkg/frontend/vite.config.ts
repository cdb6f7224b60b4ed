import { defineConfig } from "vite";

export default defineConfig({
  build: { outDir: "dist", sourcemap: true },
  server: {
    proxy: {
      "/api": { target: "http://127.0.0.1:8844", changeOrigin: true },
    },
  },
});

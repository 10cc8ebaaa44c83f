import { defineConfig } from "vite";

// Dev-server proxy: run `farmsim serve --listen 127.0.0.1:8000` and the
// dashboard's API and WebSocket calls are forwarded to it.
export default defineConfig({
  server: {
    proxy: {
      "/state": "http://127.0.0.1:8000",
      "/inject": "http://127.0.0.1:8000",
      "/run": "http://127.0.0.1:8000",
      "/journal": "http://127.0.0.1:8000",
      "/telemetry": { target: "ws://127.0.0.1:8000", ws: true },
    },
  },
  test: {
    environment: "happy-dom",
    include: ["test/**/*.test.ts"],
  },
});

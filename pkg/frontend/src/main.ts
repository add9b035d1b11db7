/** Bootstrap: create (or attach to) a session and wire the console. */

import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import { bind } from "./dom.js";

declare global {
  interface Window {
    COLABEL_CONFIG?: unknown;
    COLABEL_SERVER?: string;
    COLABEL_SESSION?: string;
  }
}

const DEFAULT_CONFIG = {
  engine: {
    alpha: 0.1,
    beta: 0.5,
    k_max: 20,
    tau_promote: 0.75,
    tau_demote: 0.55,
    fading: { decay: 0.98 },
  },
  data: { generator: { n: 500, classes: 2, dims: 4, separation: 3.0, seed: 11 } },
};

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const server =
    params.get("server") ?? window.COLABEL_SERVER ?? window.location.origin;
  const api = new ApiClient(server);
  const controller = new SessionController(api);

  const labels = await startSession(controller, params);
  bind(controller, document, labels);
  await controller.resync();
  controller.startPolling(1000);
}

async function startSession(
  controller: SessionController,
  params: URLSearchParams,
): Promise<string[]> {
  const existing = params.get("session") ?? window.COLABEL_SESSION;
  const config = (window.COLABEL_CONFIG ?? DEFAULT_CONFIG) as {
    schema?: { labels?: string[] };
    data?: { generator?: { classes?: number } };
  };
  if (existing) {
    await controller.attach(existing);
  } else {
    await controller.start(config);
  }
  if (config.schema?.labels) {
    return config.schema.labels;
  }
  const classes = config.data?.generator?.classes ?? 2;
  return Array.from({ length: classes }, (_, i) => `c${i}`);
}

boot().catch((error) => {
  const toast = document.getElementById("toast");
  if (toast) {
    toast.textContent = `Failed to start: ${error}`;
    toast.className = "toast visible";
  }
});

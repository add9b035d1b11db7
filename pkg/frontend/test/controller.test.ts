import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionController } from "../src/controller.js";
import type { EventResponse, MetricsView } from "../src/types.js";

const METRICS: MetricsView = {
  phase: "HiC",
  k: 0,
  p: 0,
  fea: { model: { A: 0.5, B: 0.5 }, human: { A: 0.5, B: 0.5 } },
  average_fea: { model: 0.5, human: 0.5 },
  counts: {
    records: 0,
    hic_decisions: 0,
    mic_decisions: 0,
    challenges: 0,
    challenges_accepted: 0,
    auto_accepts: 0,
    callbacks_low_belief: 0,
    callbacks_random_check: 0,
  },
  human_queries: 0,
  human_query_rate: 0,
  n_seen: 0,
};

interface Scripted {
  match: (url: string, init?: RequestInit) => boolean;
  status?: number;
  body: unknown;
  delay?: Promise<void>;
}

function fakeFetch(script: Scripted[], calls: string[]): typeof fetch {
  return (async (url: RequestInfo | URL, init?: RequestInit) => {
    const u = String(url);
    calls.push(`${init?.method ?? "GET"} ${new URL(u).pathname}`);
    const entry = script.find((s) => s.match(u, init));
    if (!entry) {
      throw new Error(`no scripted response for ${u}`);
    }
    if (entry.delay) {
      await entry.delay;
    }
    return {
      ok: (entry.status ?? 200) < 400,
      status: entry.status ?? 200,
      json: async () => entry.body,
      text: async () => JSON.stringify(entry.body),
    } as Response;
  }) as typeof fetch;
}

function controllerWith(script: Scripted[]): { controller: SessionController; calls: string[] } {
  const calls: string[] = [];
  const api = new ApiClient("http://svc", fakeFetch(script, calls));
  const controller = new SessionController(api);
  controller.state.sessionId = "s1";
  return { controller, calls };
}

describe("SessionController.submit", () => {
  it("locks the surface while a request is in flight", async () => {
    let release!: () => void;
    const gate = new Promise<void>((resolve) => (release = resolve));
    const response: EventResponse = { result: "finalized", metrics: METRICS };
    const { controller } = controllerWith([
      { match: (u) => u.endsWith("/events"), body: response, delay: gate },
    ]);
    const first = controller.chooseLabel("A");
    expect(controller.state.busy).toBe(true);
    const second = await controller.chooseLabel("A"); // double click
    expect(second).toBeNull(); // rejected locally, no second request
    release();
    const settled = await first;
    expect(settled?.result).toBe("finalized");
    expect(controller.state.busy).toBe(false);
  });

  it("resyncs after a protocol rejection instead of guessing", async () => {
    const { controller, calls } = controllerWith([
      {
        match: (u, init) => u.endsWith("/events") && init?.method === "POST",
        status: 409,
        body: { code: "protocol_error", message: "no prompt is outstanding" },
      },
      { match: (u) => u.endsWith("/prompt"), body: { prompt: null } },
      { match: (u) => u.endsWith("/metrics"), body: METRICS },
    ]);
    const out = await controller.chooseLabel("A");
    expect(out).toBeNull();
    expect(controller.state.toast).toContain("no prompt");
    expect(calls).toContain("GET /sessions/s1/prompt");
    expect(calls).toContain("GET /sessions/s1/metrics");
    expect(controller.state.view.offerEnabled).toBe(true);
  });

  it("absorbs prompts, decisions and metrics from responses", async () => {
    const challenge: EventResponse = {
      result: "prompt",
      prompt: {
        kind: "skeptical_challenge",
        explanation_offer: true,
        record: { id: "r0", features: [0], t: 0 },
        model_label: "B",
        user_label: "A",
        skepticality: 0.4,
      },
      metrics: METRICS,
    };
    const { controller } = controllerWith([
      { match: (u) => u.endsWith("/events"), body: challenge },
    ]);
    await controller.chooseLabel("A");
    expect(controller.state.prompt?.kind).toBe("skeptical_challenge");
    expect(controller.state.view.modal?.kind).toBe("challenge");
    expect(controller.state.timeline.some((e) => e.flavor === "challenge")).toBe(true);
  });

  it("tracks the average track record history for the sparkline", async () => {
    const sample = { ...METRICS, average_fea: { model: 0.5, human: 0.5 } };
    const { controller } = controllerWith([
      { match: (u) => u.endsWith("/prompt"), body: { prompt: null } },
      { match: (u) => u.endsWith("/metrics"), body: sample },
    ]);
    await controller.resync();
    await controller.resync(); // unchanged value is not duplicated
    sample.average_fea = { model: 0.75, human: 0.5 };
    await controller.resync();
    expect(controller.state.avgFeaHistory).toEqual([0.5, 0.75]);
  });

  it("stops offering once the data source is exhausted", async () => {
    const { controller } = controllerWith([
      {
        match: (u, init) => u.endsWith("/events") && init?.method === "POST",
        status: 400,
        body: { code: "rejected_input", message: "data source exhausted" },
      },
      { match: (u) => u.endsWith("/prompt"), body: { prompt: null } },
      { match: (u) => u.endsWith("/metrics"), body: METRICS },
    ]);
    await controller.offerNext();
    expect(controller.state.exhausted).toBe(true);
    expect(controller.state.view.offerEnabled).toBe(false);
  });

  it("surfaces unknown prompt kinds as a banner without breaking the view", async () => {
    const weird: EventResponse = {
      result: "prompt",
      prompt: { kind: "telepathy" } as never,
      metrics: METRICS,
    };
    const { controller } = controllerWith([
      { match: (u) => u.endsWith("/events"), body: weird },
    ]);
    const before = controller.state.view;
    await controller.offerNext();
    expect(controller.state.toast).toContain("telepathy");
    expect(controller.state.view).toBe(before); // previous view kept
  });
});

describe("polling", () => {
  it("uses the injected scheduler at the given interval", async () => {
    const { controller } = controllerWith([
      { match: (u) => u.endsWith("/prompt"), body: { prompt: null } },
      { match: (u) => u.endsWith("/metrics"), body: METRICS },
    ]);
    const intervals: number[] = [];
    const ticks: (() => void)[] = [];
    const scheduler = ((fn: () => void, ms: number) => {
      intervals.push(ms);
      ticks.push(fn);
      return 1 as unknown as ReturnType<typeof setInterval>;
    }) as typeof setInterval;
    controller.startPolling(1000, scheduler);
    expect(intervals).toEqual([1000]);
    ticks[0]();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(controller.state.metrics).not.toBeNull();
    controller.stopPolling();
  });
});

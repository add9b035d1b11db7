/**
 * Session controller: owns the client-side mirror of one live session.
 *
 * All mutations go through submit(), which locks the action surface until
 * the service answers; the server is the single source of truth, so every
 * response (and every poll tick) refreshes the view from server state. A
 * protocol error from the service resolves by resync, never by local guess.
 */

import { ApiClient, ApiError } from "./api.js";
import { renderPrompt, type ViewState } from "./render.js";
import type {
  ClientEvent,
  DecisionEventData,
  EventResponse,
  ExplanationPayload,
  MetricsView,
  PromptData,
} from "./types.js";

export interface TimelineEntry {
  t: number;
  text: string;
  flavor: "human" | "machine" | "challenge" | "phase" | "info";
}

export interface ControllerState {
  sessionId: string | null;
  view: ViewState;
  prompt: PromptData | null;
  metrics: MetricsView | null;
  avgFeaHistory: number[];
  timeline: TimelineEntry[];
  explanation: ExplanationPayload | null;
  busy: boolean;
  toast: string | null;
  exhausted: boolean;
}

export type Listener = (state: ControllerState) => void;

const HISTORY_LIMIT = 200;

export class SessionController {
  state: ControllerState = {
    sessionId: null,
    view: renderPrompt(null),
    prompt: null,
    metrics: null,
    avgFeaHistory: [],
    timeline: [],
    explanation: null,
    busy: false,
    toast: null,
    exhausted: false,
  };

  private listeners: Listener[] = [];
  private pollHandle: ReturnType<typeof setInterval> | null = null;

  constructor(private api: ApiClient) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  async start(config: unknown): Promise<void> {
    this.state.sessionId = await this.api.createSession(config);
    await this.resync();
  }

  attach(sessionId: string): Promise<void> {
    this.state.sessionId = sessionId;
    return this.resync();
  }

  /** Poll the outstanding prompt (default 1s); cheap and idempotent. */
  startPolling(intervalMs = 1000, scheduler = setInterval): void {
    this.stopPolling();
    this.pollHandle = scheduler(() => {
      if (!this.state.busy) {
        void this.resync();
      }
    }, intervalMs);
  }

  stopPolling(): void {
    if (this.pollHandle !== null) {
      clearInterval(this.pollHandle);
      this.pollHandle = null;
    }
  }

  async resync(): Promise<void> {
    const sessionId = this.requireSession();
    const [prompt, metrics] = await Promise.all([
      this.api.getPrompt(sessionId),
      this.api.getMetrics(sessionId),
    ]);
    this.applyPrompt(prompt);
    this.applyMetrics(metrics);
    this.emit();
  }

  offerNext(): Promise<EventResponse | null> {
    return this.submit({ type: "offer_record" });
  }

  chooseLabel(label: string): Promise<EventResponse | null> {
    return this.submit({ type: "user_label", label });
  }

  answerChallenge(accept: boolean): Promise<EventResponse | null> {
    return this.submit({
      type: "challenge_response",
      response: accept ? "accept_suggestion" : "refuse",
    });
  }

  answerConsent(grant: boolean): Promise<EventResponse | null> {
    return this.submit({ type: "consent_response", grant });
  }

  answerNotice(revert: boolean): Promise<EventResponse | null> {
    return this.submit({ type: "notice_response", revert });
  }

  requestExplanation(): Promise<EventResponse | null> {
    return this.submit({ type: "request_explanation" });
  }

  /**
   * One-shot guarded submit: while a request is in flight every further
   * submit is rejected locally (double-click protection), and a protocol
   * rejection from the server triggers a resync instead of a retry.
   */
  async submit(event: ClientEvent): Promise<EventResponse | null> {
    if (this.state.busy) {
      return null;
    }
    const sessionId = this.requireSession();
    this.state.busy = true;
    this.emit();
    try {
      const response = await this.api.postEvent(sessionId, event);
      this.absorb(event, response);
      return response;
    } catch (error) {
      if (error instanceof ApiError) {
        this.state.toast = error.body.message;
        if (error.body.code === "rejected_input" && /exhausted/.test(error.body.message)) {
          this.state.exhausted = true;
        }
        await this.resyncQuietly();
        return null;
      }
      throw error;
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  private async resyncQuietly(): Promise<void> {
    try {
      await this.resync();
    } catch {
      // the poll loop will retry; keep the toast visible
    }
  }

  private absorb(event: ClientEvent, response: EventResponse): void {
    if (response.metrics) {
      this.applyMetrics(response.metrics);
    }
    if (response.event) {
      this.pushDecision(response.event);
    }
    if (response.explanation) {
      this.state.explanation = response.explanation;
      this.pushTimeline({
        t: -1,
        text: `Explanation shown (${response.explanation.context})`,
        flavor: "info",
      });
    }
    if (event.type === "consent_response" && this.state.metrics) {
      this.pushTimeline({
        t: -1,
        text: event.grant ? "Command handed to the model" : "Consent declined",
        flavor: "phase",
      });
    }
    if (event.type === "notice_response") {
      this.pushTimeline({
        t: -1,
        text: event.revert ? "Reverted to human command" : "Staying in machine command",
        flavor: "phase",
      });
    }
    this.applyPrompt(response.prompt ?? null);
  }

  private applyPrompt(prompt: PromptData | null): void {
    this.state.prompt = prompt;
    const view = renderPrompt(prompt);
    if (view.error !== null) {
      // unknown prompt kind: surface the banner, keep the previous view
      this.state.toast = view.error;
      return;
    }
    if (this.state.exhausted) {
      view.offerEnabled = false;
    }
    this.state.view = view;
    if (prompt?.kind === "skeptical_challenge" || prompt?.kind === "callback") {
      this.pushTimeline({
        t: prompt.record?.t ?? -1,
        text:
          prompt.kind === "skeptical_challenge"
            ? `Challenge on ${prompt.record?.id}: model prefers ${prompt.model_label}`
            : `Callback (${prompt.reason}) on ${prompt.record?.id}`,
        flavor: "challenge",
      });
    }
  }

  private applyMetrics(metrics: MetricsView): void {
    this.state.metrics = metrics;
    const history = this.state.avgFeaHistory;
    const value = metrics.average_fea.model;
    if (history.length === 0 || history[history.length - 1] !== value) {
      history.push(value);
      if (history.length > HISTORY_LIMIT) {
        history.shift();
      }
    }
  }

  private pushDecision(event: DecisionEventData): void {
    let text: string;
    let flavor: TimelineEntry["flavor"];
    if (event.decided_by === "machine_auto") {
      text = `${event.record_id}: auto-labeled ${event.final_label}`;
      flavor = "machine";
    } else if (event.decided_by === "human_accepted_suggestion") {
      text = `${event.record_id}: accepted suggestion ${event.final_label}`;
      flavor = "challenge";
    } else {
      text = `${event.record_id}: labeled ${event.final_label}`;
      flavor = "human";
    }
    this.pushTimeline({ t: event.t, text, flavor });
  }

  private pushTimeline(entry: TimelineEntry): void {
    this.state.timeline.push(entry);
    if (this.state.timeline.length > HISTORY_LIMIT) {
      this.state.timeline.shift();
    }
  }

  private requireSession(): string {
    if (this.state.sessionId === null) {
      throw new Error("no session attached");
    }
    return this.state.sessionId;
  }
}

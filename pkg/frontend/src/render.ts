/**
 * Pure view-state derivation. The DOM layer applies whatever this returns;
 * nothing here computes a decision or a number on its own - every displayed
 * value comes from service payloads.
 */

import type { MetricsView, PromptData, RecordData } from "./types.js";

export interface ModalState {
  kind: "challenge" | "callback" | "consent" | "critical";
  title: string;
  lines: string[];
  buttons: { action: string; caption: string }[];
  whyAvailable: boolean;
}

export interface ViewState {
  record: RecordData | null;
  labelButtonsEnabled: boolean;
  offerEnabled: boolean;
  modal: ModalState | null;
  error: string | null;
}

export function renderPrompt(prompt: PromptData | null): ViewState {
  if (prompt === null) {
    return {
      record: null,
      labelButtonsEnabled: false,
      offerEnabled: true,
      modal: null,
      error: null,
    };
  }
  switch (prompt.kind) {
    case "need_user_label":
      return {
        record: prompt.record ?? null,
        labelButtonsEnabled: true,
        offerEnabled: false,
        modal: null,
        error: null,
      };
    case "skeptical_challenge":
      return {
        record: prompt.record ?? null,
        labelButtonsEnabled: false,
        offerEnabled: false,
        modal: {
          kind: "challenge",
          title: "The model is skeptical of your label",
          lines: [
            `Your label: ${prompt.user_label}`,
            `Model suggestion: ${prompt.model_label}`,
            `Skepticality: ${formatNumber(prompt.skepticality)}`,
          ],
          buttons: [
            { action: "accept_suggestion", caption: `Accept ${prompt.model_label}` },
            { action: "refuse", caption: `Keep ${prompt.user_label}` },
          ],
          whyAvailable: prompt.explanation_offer,
        },
        error: null,
      };
    case "callback":
      return {
        record: prompt.record ?? null,
        labelButtonsEnabled: true,
        offerEnabled: false,
        modal: {
          kind: "callback",
          title:
            prompt.reason === "low_belief"
              ? "The model is unsure - your decision is needed"
              : "Random check - please decide this record",
          lines: [
            `Model suggestion: ${prompt.model_label}`,
            `Belief: ${formatNumber(prompt.belief)}`,
          ],
          buttons: [],
          whyAvailable: prompt.explanation_offer,
        },
        error: null,
      };
    case "consent_request":
      return {
        record: null,
        labelButtonsEnabled: false,
        offerEnabled: false,
        modal: {
          kind: "consent",
          title: "Hand over to the model?",
          lines: ["The model's track record qualifies it to label on its own."],
          buttons: [
            { action: "grant", caption: "Put the model in command" },
            { action: "refuse_consent", caption: "Keep labeling myself" },
          ],
          whyAvailable: false,
        },
        error: null,
      };
    case "critical_notice":
      return {
        record: null,
        labelButtonsEnabled: false,
        offerEnabled: false,
        modal: {
          kind: "critical",
          title: "Model reliability alert",
          lines: (prompt.reasons ?? []).map(describeReason),
          buttons: [
            { action: "revert", caption: "Take back command" },
            { action: "stay", caption: "Keep the model in command" },
          ],
          whyAvailable: false,
        },
        error: null,
      };
    default:
      return {
        record: null,
        labelButtonsEnabled: false,
        offerEnabled: false,
        modal: null,
        error: `Unknown prompt kind: ${(prompt as PromptData).kind}`,
      };
  }
}

function describeReason(reason: string): string {
  if (reason === "callbacks") {
    return "You were called back too many times on low-confidence records.";
  }
  if (reason === "fea_drop") {
    return "The model's track record fell below the safety threshold.";
  }
  return reason;
}

export function formatNumber(value: number | null | undefined, digits = 3): string {
  if (value === null || value === undefined) {
    return "n/a";
  }
  return value.toFixed(digits);
}

export interface GaugeData {
  label: string;
  model: number;
  human: number;
}

/** Per-label gauge rows for the sidebar, in the server's label order. */
export function feaGauges(metrics: MetricsView): GaugeData[] {
  return Object.keys(metrics.fea.model).map((label) => ({
    label,
    model: metrics.fea.model[label],
    human: metrics.fea.human[label] ?? 0,
  }));
}

/** Sparkline path points (0..1 scaled) for a rolling series. */
export function sparklinePoints(series: number[], width = 120, height = 24): string {
  if (series.length === 0) {
    return "";
  }
  const step = series.length > 1 ? width / (series.length - 1) : 0;
  return series
    .map((v, i) => `${(i * step).toFixed(1)},${((1 - v) * height).toFixed(1)}`)
    .join(" ");
}

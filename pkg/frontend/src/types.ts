/** Wire types for the session service (mirrors its JSON payloads). */

export interface RecordData {
  id: string;
  features: (number | string)[];
  t: number;
}

export type PromptKind =
  | "need_user_label"
  | "skeptical_challenge"
  | "callback"
  | "consent_request"
  | "critical_notice";

export interface PromptData {
  kind: PromptKind;
  explanation_offer: boolean;
  record?: RecordData;
  model_label?: string;
  user_label?: string;
  model_probs?: Record<string, number>;
  skepticality?: number;
  belief?: number;
  reason?: "low_belief" | "random_check";
  reasons?: string[];
  rng_draw?: number;
}

export interface MetricsCounts {
  records: number;
  hic_decisions: number;
  mic_decisions: number;
  challenges: number;
  challenges_accepted: number;
  auto_accepts: number;
  callbacks_low_belief: number;
  callbacks_random_check: number;
}

export interface MetricsView {
  phase: "HiC" | "MiC";
  k: number;
  p: number;
  fea: { model: Record<string, number>; human: Record<string, number> };
  average_fea: { model: number; human: number };
  counts: MetricsCounts;
  human_queries: number;
  human_query_rate: number;
  n_seen: number;
}

export interface DecisionEventData {
  t: number;
  record_id: string;
  phase: "HiC" | "MiC";
  model_label: string;
  final_label: string;
  decided_by: "human" | "human_accepted_suggestion" | "machine_auto";
  user_label: string | null;
  challenged: boolean;
  callback_kind: "none" | "low_belief" | "random_check";
  belief: number | null;
  skepticality: number | null;
  explanation_shown: boolean;
}

export interface EventResponse {
  result: string;
  prompt?: PromptData;
  event?: DecisionEventData;
  explanation?: ExplanationPayload;
  metrics?: MetricsView;
}

export interface ExplanationPayload {
  context: string;
  payload: Record<string, ExplanationData>;
}

export interface ExplanationItemData {
  record_id: string;
  annotation: Record<string, unknown>;
}

export interface ExplanationData {
  kind: string;
  items: ExplanationItemData[];
  scores?: Record<string, number>;
  context?: Record<string, unknown>;
}

export interface ServiceError {
  code: string;
  message: string;
  detail?: unknown;
}

export type ClientEvent =
  | { type: "offer_record"; record?: RecordData }
  | { type: "user_label"; label: string }
  | { type: "challenge_response"; response: "accept_suggestion" | "refuse" }
  | { type: "consent_response"; grant: boolean }
  | { type: "notice_response"; revert: boolean }
  | { type: "request_explanation" };

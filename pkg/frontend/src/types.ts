/** Shapes of the review-service HTTP API payloads. */

export interface ContextMessage {
  chat_id: string;
  index: number;
  speaker: "offender" | "decoy";
  text: string;
}

export interface ReviewItem {
  position: number;
  total: number;
  chat_id: string;
  index: number;
  behavior_id: string;
  behavior_name: string;
  behavior_description: string;
  model_prediction: boolean;
  context: ContextMessage[];
  target: ContextMessage;
}

export interface Progress {
  rated: number;
  total: number;
  percent: number;
  state: "OPEN" | "COMPLETE";
}

export interface SessionInfo {
  session_id: string;
  run_id: string;
  rater_id: string;
  blind_mode: boolean;
  total_items: number;
}

export type Score = 1 | 2 | 3;

export interface RatingRequest {
  chat_id: string;
  index: number;
  behavior_id: string;
  score: Score;
}

export type UncertainPolicy = "exclude" | "agree";

/** Pairwise kappa cells keyed "RATER1/RATER2" etc. */
export type KappaCells = Record<string, number>;

export interface AgreementPayload {
  raters: string[];
  policy: UncertainPolicy;
  uncertain_count: number;
  per_behavior: Record<string, KappaCells>;
  per_behavior_overall: Record<string, number>;
  total: KappaCells;
  total_mean_of_behaviors: KappaCells;
  overall: number;
}

export interface ApiError {
  error: string;
  detail: string;
}

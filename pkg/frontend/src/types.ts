export type Label = "positive" | "negative";

export interface BatchItem {
  tweet_id: string;
  text: string;
  probability: number | null;
}

export interface SessionSummary {
  session_id: string;
  phase: string;
  labeled: number;
  remaining_budget: number;
  unlabeled: number;
  batch_size: number;
}

export interface BatchResponse extends SessionSummary {
  items: BatchItem[];
}

export interface LayoutPoint {
  tag: string;
  frequency: number;
  x: number;
  y: number;
}

export interface LayoutResponse {
  fingerprint: string;
  perplexity: number;
  seed: number;
  min_frequency: number;
  points: LayoutPoint[];
}

export interface StatsResponse {
  tweets: number;
  vocab_size: number | null;
  labels: Record<string, number>;
  sessions: number;
  session_stats: Record<string, SessionSummary & { precision?: number; recall?: number }>;
}

export interface SessionRequest {
  tags: string[];
  budget: number;
  batch_size?: number;
  seed?: number;
  seed_positive?: number;
  seed_negative?: number;
}

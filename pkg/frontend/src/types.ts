/** Wire types mirroring the service's documented HTTP API. */

export interface Movement {
  id: string;
  gloss: string;
  tags: string[];
}

export interface Adjustments {
  energy?: Record<string, number>;
  circles_curves?: number;
  axis_point?: { joint: string; intensity: number };
  synchronous_limbs?: number;
  external_body_spaces?: number;
  shifting_relations?: number;
}

export interface PlanSelection {
  movement_id: string;
  rationale: string;
  duration_scale: number;
  adjustments: Adjustments;
}

export interface DancePlan {
  prompt: string;
  interpretation: string;
  selections: PlanSelection[];
}

export type DanceStatus = "generating" | "ready" | "failed";

export interface ProviderExchange {
  system_context: string;
  user_message: string;
  raw_response: string;
  latency_ms: number;
  error: string | null;
}

export interface DanceRecord {
  dance_id: string;
  prompt: string;
  provider: string;
  created_at: string;
  status: DanceStatus;
  error: string | null;
  plan: DancePlan | null;
  exchanges: ProviderExchange[];
  performances: { id: string; created_at: string }[];
  current_performance: string | null;
}

export interface JointInfo {
  id: string;
  parent: number | null;
  translation: [number, number, number];
}

export interface SegmentInfo {
  index: number;
  movement_id: string;
  start: number;
  end: number;
  frame_start: number;
  frame_end: number;
  adjustments: Adjustments;
}

/** frames-json export: rows are [tx,ty,tz, then per-joint w,x,y,z]. */
export interface FramesDoc {
  rate: number;
  duration: number;
  joints: JointInfo[];
  frames: number[][];
  segments: SegmentInfo[];
}

export interface RefineResponse {
  dance_id: string;
  performance_id: string;
  versions: string[];
}

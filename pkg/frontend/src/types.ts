export type Side = "left" | "right";

/** Completion marker from GET /next. */
export interface DonePayload {
  done: true;
  total: number;
}

/** One blinded pair: pixel data and scheduling metadata only. */
export interface PairPayload {
  done: false;
  pair_id: string;
  index: number;
  total: number;
  section: 1 | 2;
  requires_likert: boolean;
  plane: string;
  slice_index: number;
  left_png_b64: string;
  right_png_b64: string;
}

export type NextPayload = DonePayload | PairPayload;

export interface SessionInfo {
  session_id: string;
  total_pairs: number;
  /** Unix seconds; the study is completed in one sitting. */
  expires_at: number;
}

export interface VoteReceipt {
  recorded: boolean;
  remaining: number;
  done: boolean;
}

export interface VoteBody {
  pair_id: string;
  side: Side;
  likert?: number;
}

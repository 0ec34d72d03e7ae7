// Wire types for the review-study HTTP service. Field names follow the
// server's JSON exactly; everything the client sees is blinded.

export interface StudySchema {
  dimensions: string[];
  dimension_scale: [number, number];
  utility_scale: [number, number];
}

export interface SessionSummary {
  session_id: string;
  reader_id: string;
  total: number;
  cursor: number;
  seed: number;
}

export interface SessionState {
  session_id: string;
  reader_id: string;
  cursor: number;
  total: number;
  done: boolean;
}

export interface ServedCase {
  done: false;
  session_id: string;
  case_id: string;
  position: number;
  total: number;
  findings: string;
  indications: string;
  impression: string;
  schema: StudySchema;
}

export interface SessionDone {
  done: true;
  completed: number;
  total: number;
}

export type NextResponse = ServedCase | SessionDone;

export interface Ack {
  ok: boolean;
  case_id: string;
  cursor: number;
  total: number;
  resubmission: boolean;
}

export interface AssessmentDraft {
  scores: Record<string, number>;
  utility: number | null;
  comment: string;
}

export interface PoolDeficit {
  need: number;
  have: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : `request failed (${status})`);
    this.name = "ApiError";
  }
}

// Submission refused locally before any network call.
export class IncompleteDraftError extends Error {
  constructor(readonly missing: string[]) {
    super(`unset dimensions: ${missing.join(", ")}`);
    this.name = "IncompleteDraftError";
  }
}

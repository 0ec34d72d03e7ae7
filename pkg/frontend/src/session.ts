import { StudyClient } from "./api";
import {
  Ack,
  AssessmentDraft,
  IncompleteDraftError,
  NextResponse,
  ServedCase,
  StudySchema,
} from "./types";

function emptyDraft(): AssessmentDraft {
  return { scores: {}, utility: null, comment: "" };
}

/**
 * Drives one reader session against the service.
 *
 * The server cursor is the only source of progress truth: resuming a
 * session re-reads it and serves the first unrated case, so a page
 * refresh can never produce duplicate submissions.
 */
export class SessionRunner {
  private sessionId: string | null = null;
  private view: NextResponse | null = null;
  draft: AssessmentDraft = emptyDraft();
  readonly acks: Ack[] = [];
  onChange: (() => void) | null = null;

  constructor(private readonly client: StudyClient) {}

  get id(): string | null {
    return this.sessionId;
  }

  get current(): ServedCase | null {
    return this.view && !this.view.done ? this.view : null;
  }

  get done(): boolean {
    return this.view !== null && this.view.done;
  }

  get schema(): StudySchema | null {
    return this.current?.schema ?? null;
  }

  get progress(): { position: number; total: number } {
    if (!this.view) return { position: 0, total: 0 };
    if (this.view.done) {
      return { position: this.view.completed, total: this.view.total };
    }
    return { position: this.view.position, total: this.view.total };
  }

  async start(readerId: string, seed = 0): Promise<void> {
    const session = await this.client.createSession(readerId, seed);
    this.sessionId = session.session_id;
    await this.refreshCase();
  }

  async resume(sessionId: string): Promise<void> {
    await this.client.sessionState(sessionId); // 404s on unknown ids
    this.sessionId = sessionId;
    await this.refreshCase();
  }

  private async refreshCase(): Promise<void> {
    if (!this.sessionId) throw new Error("no active session");
    this.view = await this.client.nextCase(this.sessionId);
    this.draft = emptyDraft();
    this.onChange?.();
  }

  setScore(dimension: string, value: number): void {
    const schema = this.schema;
    if (!schema || !schema.dimensions.includes(dimension)) {
      throw new Error(`unknown dimension ${dimension}`);
    }
    const [lo, hi] = schema.dimension_scale;
    if (!Number.isInteger(value) || value < lo || value > hi) {
      throw new Error(`${dimension} must be an integer in ${lo}..${hi}`);
    }
    this.draft.scores[dimension] = value;
    this.onChange?.();
  }

  setUtility(value: number): void {
    const schema = this.schema;
    if (!schema) throw new Error("no case on screen");
    const [lo, hi] = schema.utility_scale;
    if (!Number.isInteger(value) || value < lo || value > hi) {
      throw new Error(`utility must be an integer in ${lo}..${hi}`);
    }
    this.draft.utility = value;
    this.onChange?.();
  }

  setComment(text: string): void {
    this.draft.comment = text;
    this.onChange?.();
  }

  /** Dimensions (and utility) still unset for the case on screen. */
  missingFields(): string[] {
    const schema = this.schema;
    if (!schema) return [];
    const missing = schema.dimensions.filter(
      (dim) => !(dim in this.draft.scores),
    );
    if (this.draft.utility === null) missing.push("utility");
    return missing;
  }

  /**
   * Submit the draft for the case on screen, then advance. Refuses
   * locally (no network call) while any dimension is unset.
   */
  async submit(): Promise<Ack> {
    const served = this.current;
    if (!served || !this.sessionId) throw new Error("no case to submit");
    const missing = this.missingFields();
    if (missing.length > 0) throw new IncompleteDraftError(missing);
    const ack = await this.client.submitAssessment(
      this.sessionId,
      served.case_id,
      this.draft.scores,
      this.draft.utility as number,
      this.draft.comment || undefined,
    );
    this.acks.push(ack);
    await this.refreshCase();
    return ack;
  }
}

import {
  Ack,
  ApiError,
  NextResponse,
  SessionState,
  SessionSummary,
  StudySchema,
} from "./types";

export interface ClientOptions {
  baseUrl?: string;
  token?: string;
  // injectable for tests; defaults to the global fetch
  fetchFn?: typeof fetch;
}

async function parseError(res: Response): Promise<ApiError> {
  let detail: unknown = res.statusText;
  try {
    const body = await res.json();
    if (body && typeof body === "object" && "detail" in body) {
      detail = (body as { detail: unknown }).detail;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(res.status, detail);
}

export class StudyClient {
  private readonly baseUrl: string;
  private readonly token?: string;
  private readonly fetchFn: typeof fetch;

  constructor(options: ClientOptions = {}) {
    this.baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
    this.token = options.token;
    this.fetchFn = options.fetchFn ?? fetch;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const headers: Record<string, string> = {
      "Content-Type": "application/json",
    };
    if (this.token) headers["x-study-token"] = this.token;
    const res = await this.fetchFn(this.baseUrl + path, { ...init, headers });
    if (!res.ok) throw await parseError(res);
    return res.json() as Promise<T>;
  }

  health(): Promise<{ ok: boolean }> {
    return this.request("/health");
  }

  schema(): Promise<StudySchema> {
    return this.request("/schema");
  }

  createSession(readerId: string, seed = 0): Promise<SessionSummary> {
    return this.request("/sessions", {
      method: "POST",
      body: JSON.stringify({ reader_id: readerId, seed }),
    });
  }

  sessionState(sessionId: string): Promise<SessionState> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}`);
  }

  nextCase(sessionId: string): Promise<NextResponse> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/next`);
  }

  submitAssessment(
    sessionId: string,
    caseId: string,
    scores: Record<string, number>,
    utility: number,
    comment?: string,
  ): Promise<Ack> {
    return this.request(
      `/sessions/${encodeURIComponent(sessionId)}/assessments`,
      {
        method: "POST",
        body: JSON.stringify({
          case_id: caseId,
          scores,
          utility,
          comment: comment || null,
        }),
      },
    );
  }
}

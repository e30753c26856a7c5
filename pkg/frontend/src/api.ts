import type {
  NextPayload,
  SessionInfo,
  VoteBody,
  VoteReceipt,
} from "./types.js";

/** Non-2xx response; status carries the server's verdict. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

/** fetch itself failed: connection refused, dropped mid-flight, DNS. */
export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`network failure: ${String(cause)}`);
    this.name = "NetworkError";
  }
}

export type FetchFn = typeof fetch;

/** Thin typed client for the study service's /v1 endpoints. */
export class StudyApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchFn = (...a) => fetch(...a),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.baseUrl + path, {
        method,
        headers: body === undefined ? {} : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (e) {
      throw new NetworkError(e);
    }
    let parsed: unknown = null;
    try {
      parsed = await resp.json();
    } catch {
      /* non-JSON error body; detail stays generic */
    }
    if (!resp.ok) {
      const detail =
        parsed && typeof parsed === "object" && "detail" in parsed
          ? String((parsed as { detail: unknown }).detail)
          : resp.statusText;
      throw new ApiError(resp.status, detail);
    }
    return parsed as T;
  }

  health(): Promise<{ ok: boolean }> {
    return this.request("GET", "/v1/healthz");
  }

  createSession(
    studyId: string,
    raterId: string,
    seed?: number,
  ): Promise<SessionInfo> {
    const body: Record<string, unknown> = { rater_id: raterId };
    if (seed !== undefined) body.seed = seed;
    return this.request("POST", `/v1/studies/${studyId}/sessions`, body);
  }

  nextPair(sessionId: string): Promise<NextPayload> {
    return this.request("GET", `/v1/sessions/${sessionId}/next`);
  }

  submitVote(sessionId: string, vote: VoteBody): Promise<VoteReceipt> {
    return this.request("POST", `/v1/sessions/${sessionId}/votes`, vote);
  }
}

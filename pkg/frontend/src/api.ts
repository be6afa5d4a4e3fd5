/** Thin typed client for the answering service. The widget talks to exactly
 * three endpoints: /v1/health, /v1/ask, /v1/feedback. fetch is injectable so
 * tests and non-browser hosts can supply their own. */

export interface HealthResponse {
  status: string;
  kb_version: number | null;
  model_fingerprint: string | null;
}

export interface AskResponse {
  answer: string;
  kind: 'answered' | 'idk';
  intent: string | null;
  confidence: number;
  suggestions: string[];
  feedback_id: string;
  latency_ms: number;
  session?: string;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { error?: string };
    if (body && body.error) {
      detail = body.error;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, detail);
}

export class ChatApi {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  async health(): Promise<HealthResponse> {
    const response = await this.fetchFn(`${this.baseUrl}/v1/health`);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as HealthResponse;
  }

  async ask(question: string, session?: string): Promise<AskResponse> {
    const body: Record<string, string> = { question };
    if (session !== undefined) {
      body.session = session;
    }
    const response = await this.fetchFn(`${this.baseUrl}/v1/ask`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as AskResponse;
  }

  async feedback(feedbackId: string, helpful: 'yes' | 'no'): Promise<void> {
    const response = await this.fetchFn(`${this.baseUrl}/v1/feedback`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ feedback_id: feedbackId, helpful }),
    });
    if (!response.ok) {
      throw await parseError(response);
    }
  }
}

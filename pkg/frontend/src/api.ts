/** HTTP client for the survey service.
 *
 * Submission retries rely on the server's idempotent storage: re-POSTing the
 * same envelope after a network failure can never create a second record, so
 * the client retries transport errors freely and surfaces the receipt from
 * whichever attempt lands.
 */

import type {
  Questionnaire,
  Receipt,
  ResponseEnvelope,
  SessionInfo,
} from './types.js';

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export interface ApiOptions {
  fetch?: FetchLike;
  /** Additional attempts after the first on transport failure. */
  retries?: number;
  backoffMs?: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: unknown,
    message?: string,
  ) {
    super(message ?? `request failed with status ${status}`);
    this.name = 'ApiError';
  }
}

/** 422 from the server: itemized, field-addressable messages. */
export class FieldValidationError extends ApiError {
  readonly errors: string[];

  constructor(body: { detail?: string; errors?: string[] }) {
    super(422, body, body.detail ?? 'invalid response');
    this.name = 'FieldValidationError';
    this.errors = body.errors ?? [];
  }
}

export interface SubmitResult {
  /** 'stored' on first acceptance, 'already-stored' on idempotent replays. */
  outcome: 'stored' | 'already-stored';
  receipt: Receipt;
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

export class SurveyApi {
  private readonly fetchImpl: FetchLike;
  private readonly retries: number;
  private readonly backoffMs: number;

  constructor(readonly baseUrl: string, options: ApiOptions = {}) {
    this.fetchImpl = options.fetch ?? ((url, init) => fetch(url, init));
    this.retries = options.retries ?? 2;
    this.backoffMs = options.backoffMs ?? 250;
  }

  private url(path: string): string {
    return new URL(path, this.baseUrl).toString();
  }

  /** Retry transport failures with exponential backoff; HTTP replies pass through. */
  private async request(path: string, init?: RequestInit): Promise<Response> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= this.retries; attempt++) {
      try {
        return await this.fetchImpl(this.url(path), init);
      } catch (error) {
        lastError = error;
        if (attempt < this.retries) {
          await sleep(this.backoffMs * 2 ** attempt);
        }
      }
    }
    throw lastError instanceof Error
      ? lastError
      : new Error('network request failed');
  }

  private static async parse<T>(response: Response, expect: number[]): Promise<T> {
    const body = await response.json().catch(() => undefined);
    if (!expect.includes(response.status)) {
      if (response.status === 422 && body && typeof body === 'object') {
        throw new FieldValidationError(body as { errors?: string[] });
      }
      throw new ApiError(response.status, body);
    }
    return body as T;
  }

  async createSession(): Promise<SessionInfo> {
    const response = await this.request('/api/session', { method: 'POST' });
    return SurveyApi.parse<SessionInfo>(response, [201]);
  }

  async fetchQuestionnaire(sessionId: string): Promise<Questionnaire> {
    const response = await this.request(
      `/api/questionnaire/${encodeURIComponent(sessionId)}`,
    );
    return SurveyApi.parse<Questionnaire>(response, [200]);
  }

  async submitResponse(envelope: ResponseEnvelope): Promise<SubmitResult> {
    const response = await this.request('/api/response', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(envelope),
    });
    const receipt = await SurveyApi.parse<Receipt>(response, [200, 201]);
    return {
      outcome: response.status === 201 ? 'stored' : 'already-stored',
      receipt,
    };
  }
}

/** "likert.F3: out of range 1..5" -> ["likert.F3", "out of range 1..5"]. */
export function splitFieldError(error: string): [string, string] {
  const sep = error.indexOf(': ');
  if (sep < 0) return ['', error];
  return [error.slice(0, sep), error.slice(sep + 2)];
}

/** Field path -> first message for that field, preserving server order. */
export function mapErrorsToFields(errors: string[]): Map<string, string> {
  const byField = new Map<string, string>();
  for (const error of errors) {
    const [field, message] = splitFieldError(error);
    if (field && !byField.has(field)) byField.set(field, message);
  }
  return byField;
}

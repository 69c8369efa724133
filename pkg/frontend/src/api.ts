// Typed client for the rating service HTTP API.

import type {
  NextTaskResponse,
  ProgressResponse,
  RatingTask,
  Verdict,
  VerdictAck,
} from './types';

/** The server answered with an error status (validation, unknown id, ...). */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = 'ApiError';
  }
}

/** The server could not be reached at all (network down, process gone). */
export class ConnectionError extends Error {
  constructor(cause: unknown) {
    super('server unreachable');
    this.name = 'ConnectionError';
    this.cause = cause;
  }
}

/**
 * Everything the controller needs from the backend. RatingApi is the real
 * implementation; tests substitute scripted fakes.
 */
export interface RatingServiceClient {
  next(raterId: string): Promise<NextTaskResponse>;
  task(raterId: string, questionId: string, modelId: string): Promise<RatingTask>;
  submit(
    raterId: string,
    questionId: string,
    modelId: string,
    verdict: Verdict,
  ): Promise<VerdictAck>;
  progress(): Promise<ProgressResponse>;
  exportUrl(): string;
}

export class RatingApi implements RatingServiceClient {
  constructor(
    readonly baseUrl: string,
    readonly sessionId: string,
  ) {}

  private sessionPath(suffix: string): string {
    return `${this.baseUrl}/api/session/${encodeURIComponent(this.sessionId)}${suffix}`;
  }

  private async request<T>(url: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(url, init);
    } catch (error) {
      throw new ConnectionError(error);
    }
    if (!response.ok) {
      let detail = `request failed with status ${response.status}`;
      try {
        const body = (await response.json()) as { detail?: unknown };
        if (typeof body.detail === 'string') {
          detail = body.detail;
        }
      } catch {
        // non-JSON error body, keep the generic detail
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  next(raterId: string): Promise<NextTaskResponse> {
    const query = new URLSearchParams({ rater: raterId });
    return this.request(this.sessionPath(`/next?${query}`));
  }

  async task(raterId: string, questionId: string, modelId: string): Promise<RatingTask> {
    const query = new URLSearchParams({
      rater: raterId,
      question_id: questionId,
      model_id: modelId,
    });
    const response = await this.request<NextTaskResponse>(
      this.sessionPath(`/task?${query}`),
    );
    if (response.task === null) {
      throw new ApiError(404, `no task for ${questionId}/${modelId}`);
    }
    return response.task;
  }

  submit(
    raterId: string,
    questionId: string,
    modelId: string,
    verdict: Verdict,
  ): Promise<VerdictAck> {
    return this.request(this.sessionPath('/verdict'), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({
        rater_id: raterId,
        question_id: questionId,
        model_id: modelId,
        verdict,
      }),
    });
  }

  progress(): Promise<ProgressResponse> {
    return this.request(this.sessionPath('/progress'));
  }

  exportUrl(): string {
    return this.sessionPath('/export');
  }
}

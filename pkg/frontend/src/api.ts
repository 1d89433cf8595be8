import type { CurateAction, ExportFilter, JobView, QuestionView, SpecPayload } from './types.js';

export class ApiError extends Error {
  status: number;
  body: unknown;

  constructor(status: number, body: unknown) {
    super(`HTTP ${status}: ${typeof body === 'string' ? body : JSON.stringify(body)}`);
    this.status = status;
    this.body = body;
  }
}

/** The review UI's only doorway to the backend; every component takes
 * this interface so tests can substitute an in-memory fake. */
export interface Api {
  createJob(spec: SpecPayload, model?: string): Promise<{ job_id: string }>;
  getJob(jobId: string): Promise<JobView>;
  listQuestions(jobId: string): Promise<QuestionView[]>;
  curate(questionId: string, action: CurateAction): Promise<QuestionView>;
  regenerate(questionId: string): Promise<{ job_id: string }>;
  exportDocument(filter: ExportFilter): Promise<string>;
}

export class ApiClient implements Api {
  private baseUrl: string;
  private fetchFn: typeof fetch;

  constructor(baseUrl = '', fetchFn: typeof fetch = globalThis.fetch.bind(globalThis)) {
    this.baseUrl = baseUrl.replace(/\/$/, '');
    this.fetchFn = fetchFn;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const text = await resp.text();
    let body: unknown = text;
    try {
      body = text ? JSON.parse(text) : null;
    } catch {
      // non-JSON payloads (markdown exports) stay as text
    }
    if (!resp.ok) {
      throw new ApiError(resp.status, body);
    }
    return body as T;
  }

  createJob(spec: SpecPayload, model = 'fixture-default'): Promise<{ job_id: string }> {
    return this.request('/jobs', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ spec, model }),
    });
  }

  getJob(jobId: string): Promise<JobView> {
    return this.request(`/jobs/${encodeURIComponent(jobId)}`);
  }

  listQuestions(jobId: string): Promise<QuestionView[]> {
    return this.request(`/questions?job=${encodeURIComponent(jobId)}`);
  }

  curate(questionId: string, action: CurateAction): Promise<QuestionView> {
    return this.request(`/questions/${encodeURIComponent(questionId)}/curate`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(action),
    });
  }

  regenerate(questionId: string): Promise<{ job_id: string }> {
    return this.request(`/questions/${encodeURIComponent(questionId)}/regenerate`, {
      method: 'POST',
    });
  }

  async exportDocument(filter: ExportFilter): Promise<string> {
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(filter)) {
      if (value !== undefined && value !== null) params.set(key, String(value));
    }
    const resp = await this.fetchFn(`${this.baseUrl}/export?${params.toString()}`);
    const text = await resp.text();
    if (!resp.ok) throw new ApiError(resp.status, text);
    return text;
  }
}

/** Thin typed client for the workbench service HTTP+JSON API.
 *
 * Every method is exactly one documented service call; errors carry the
 * service's {code, message, missing_prerequisite?} body verbatim.
 */

import type { HitSelection, KbStatus, Session, SessionExport } from './types.js';

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly missingPrerequisite?: string;

  constructor(status: number, code: string, message: string, missingPrerequisite?: string) {
    super(message);
    this.status = status;
    this.code = code;
    this.missingPrerequisite = missingPrerequisite;
  }
}

export class WorkbenchApi {
  constructor(private readonly baseUrl: string = '') {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(
        response.status,
        payload.code ?? 'unknown_error',
        payload.message ?? response.statusText,
        payload.missing_prerequisite,
      );
    }
    return payload as T;
  }

  createSession(sl: string): Promise<Session> {
    return this.request('POST', '/sessions', { sl });
  }

  getSession(sessionId: string): Promise<Session> {
    return this.request('GET', `/sessions/${sessionId}`);
  }

  analyze(sessionId: string): Promise<Session> {
    return this.request('POST', `/sessions/${sessionId}/analyze`);
  }

  retrieve(sessionId: string, k?: number): Promise<Session> {
    return this.request('POST', `/sessions/${sessionId}/retrieve`, k === undefined ? {} : { k });
  }

  compose(sessionId: string, selections: HitSelection[], note: string): Promise<Session> {
    return this.request('POST', `/sessions/${sessionId}/compose`, { selections, note });
  }

  generate(sessionId: string): Promise<Session> {
    return this.request('POST', `/sessions/${sessionId}/generate`);
  }

  postEdit(sessionId: string, text: string, note: string): Promise<Session> {
    return this.request('POST', `/sessions/${sessionId}/postedit`, { text, note });
  }

  score(sessionId: string, reference: string): Promise<Session> {
    return this.request('POST', `/sessions/${sessionId}/score`, { reference });
  }

  archive(sessionId: string): Promise<Session> {
    return this.request('POST', `/sessions/${sessionId}/archive`);
  }

  exportSession(sessionId: string): Promise<SessionExport> {
    return this.request('GET', `/sessions/${sessionId}/export`);
  }

  kbStatus(): Promise<KbStatus> {
    return this.request('GET', '/kb/status');
  }

  kbExport(sessionIds: string[]): Promise<{ pairs: unknown[]; jsonl: string }> {
    return this.request('POST', '/kb/export', { session_ids: sessionIds });
  }
}

/** Workbench controller: drives the five-step cycle against the service.
 *
 * All durable state lives in the service's Session resource; the controller
 * only stages hit selection decisions between retrieve and compose. Each
 * action method issues exactly one service call and replaces the local
 * session snapshot with the service's response, so the view can always be
 * re-derived from what the service persisted.
 */

import { WorkbenchApi } from './api.js';
import type { HitSelection, Session, SessionExport } from './types.js';

export type StepName = 'analyze' | 'retrieve' | 'compose' | 'generate' | 'review';

export const STEP_ORDER: StepName[] = ['analyze', 'retrieve', 'compose', 'generate', 'review'];

export interface StepState {
  name: StepName;
  unlocked: boolean;
  done: boolean;
}

interface StagedDecision {
  selected: boolean;
  justification: string;
}

export class WorkbenchController {
  private session: Session | null = null;
  /** Explicit keep/drop decisions staged before the next compose. */
  private staged = new Map<number, StagedDecision>();

  constructor(private readonly api: WorkbenchApi) {}

  get current(): Session {
    if (!this.session) throw new Error('no session loaded');
    return this.session;
  }

  get hasSession(): boolean {
    return this.session !== null;
  }

  get isArchived(): boolean {
    return this.session?.status === 'archived';
  }

  private setSession(session: Session): Session {
    this.session = session;
    return session;
  }

  async start(sl: string): Promise<Session> {
    this.staged.clear();
    return this.setSession(await this.api.createSession(sl));
  }

  /** Reload from the service; any pre-commit staging is discarded, so what
   * you see afterwards is exactly what the service persisted. */
  async reload(sessionId: string): Promise<Session> {
    this.staged.clear();
    return this.setSession(await this.api.getSession(sessionId));
  }

  async analyze(): Promise<Session> {
    return this.setSession(await this.api.analyze(this.current.session_id));
  }

  async retrieve(k?: number): Promise<Session> {
    this.staged.clear();
    return this.setSession(await this.api.retrieve(this.current.session_id, k));
  }

  /** Stage an explicit keep/drop decision for one hit (no service call). */
  decideHit(rank: number, selected: boolean, justification: string): void {
    if (!this.current.hits.some((h) => h.rank === rank)) {
      throw new Error(`no hit with rank ${rank}`);
    }
    this.staged.set(rank, { selected, justification });
  }

  /** A hit's effective decision: staged if present, else as persisted. */
  effectiveDecision(rank: number): StagedDecision {
    const stagedDecision = this.staged.get(rank);
    if (stagedDecision) return stagedDecision;
    const hit = this.current.hits.find((h) => h.rank === rank);
    if (!hit) throw new Error(`no hit with rank ${rank}`);
    return { selected: hit.selected, justification: hit.justification };
  }

  /** Compose unlocks only once every hit has an explicit decision: either
   * staged in this session of work, or already persisted by an earlier
   * compose (non-empty justification counts as an explicit decision). */
  composeReady(): boolean {
    if (!this.session || this.session.hits.length === 0) return false;
    return this.session.hits.every(
      (h) => this.staged.has(h.rank) || h.justification.trim() !== '',
    );
  }

  async compose(note: string): Promise<Session> {
    const selections: HitSelection[] = [...this.staged.entries()].map(
      ([rank, decision]) => ({
        rank,
        selected: decision.selected,
        justification: decision.justification,
      }),
    );
    const session = await this.api.compose(this.current.session_id, selections, note);
    this.staged.clear();
    return this.setSession(session);
  }

  async generate(): Promise<Session> {
    return this.setSession(await this.api.generate(this.current.session_id));
  }

  async postEdit(text: string, note: string): Promise<Session> {
    return this.setSession(await this.api.postEdit(this.current.session_id, text, note));
  }

  async score(reference: string): Promise<Session> {
    return this.setSession(await this.api.score(this.current.session_id, reference));
  }

  archiveReady(): boolean {
    const s = this.session;
    if (!s) return false;
    if (s.outputs.length === 0 && s.post_edits.length === 0) return false;
    return s.hits.every((h) => this.effectiveDecision(h.rank).justification.trim() !== '');
  }

  async archive(): Promise<Session> {
    return this.setSession(await this.api.archive(this.current.session_id));
  }

  async exportWorksheet(): Promise<SessionExport> {
    return this.api.exportSession(this.current.session_id);
  }

  /** Stepper state, derived purely from the session resource. */
  stepStates(): StepState[] {
    const s = this.session;
    const analysisDone = !!s?.analysis;
    const retrieved = (s?.hits.length ?? 0) > 0;
    const composed = (s?.prompt_versions.length ?? 0) > 0;
    const generated = (s?.outputs.length ?? 0) > 0;
    const reviewed = s?.status === 'archived';
    return [
      { name: 'analyze', unlocked: !!s, done: analysisDone },
      { name: 'retrieve', unlocked: analysisDone, done: retrieved },
      { name: 'compose', unlocked: retrieved, done: composed },
      { name: 'generate', unlocked: composed, done: generated },
      { name: 'review', unlocked: generated, done: reviewed },
    ];
  }
}

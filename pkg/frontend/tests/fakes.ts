/** In-memory fake of the workbench service for controller/view unit tests.
 * Mirrors the service's prerequisite rules closely enough to exercise the
 * client logic without a network. */

import { ApiError, WorkbenchApi } from '../src/api.js';
import type { HitSelection, Session } from '../src/types.js';

let counter = 0;

export function freshSession(sl: string): Session {
  counter += 1;
  return {
    session_id: `fake-${counter}`,
    sl,
    status: 'open',
    analysis: null,
    hits: [],
    prompt_versions: [],
    outputs: [],
    post_edits: [],
    scores: [],
  };
}

export class FakeApi extends WorkbenchApi {
  sessions = new Map<string, Session>();
  calls: string[] = [];

  constructor() {
    super('fake://');
  }

  private get(id: string): Session {
    const session = this.sessions.get(id);
    if (!session) throw new ApiError(404, 'unknown_session', `no session ${id}`);
    return session;
  }

  private mutable(id: string): Session {
    const session = this.get(id);
    if (session.status === 'archived') {
      throw new ApiError(409, 'archived', 'session is archived and immutable');
    }
    return session;
  }

  override async createSession(sl: string): Promise<Session> {
    this.calls.push('createSession');
    if (!sl.trim()) throw new ApiError(400, 'empty_sl', 'sl must be non-empty');
    const session = freshSession(sl);
    this.sessions.set(session.session_id, session);
    return structuredClone(session);
  }

  override async getSession(id: string): Promise<Session> {
    this.calls.push('getSession');
    return structuredClone(this.get(id));
  }

  override async analyze(id: string): Promise<Session> {
    this.calls.push('analyze');
    const session = this.mutable(id);
    session.analysis = {
      a1: 'inner',
      a2: ['B'],
      raw_a1_response: 'ANSWER: INNER',
      raw_a2_response: 'ANSWER: B',
      backend_id: 'fake',
      a1_parse_failed: false,
      a2_parse_failed: false,
    };
    return structuredClone(session);
  }

  override async retrieve(id: string): Promise<Session> {
    this.calls.push('retrieve');
    const session = this.mutable(id);
    if (!session.analysis) {
      throw new ApiError(409, 'missing_prerequisite', 'step requires analyze first', 'analyze');
    }
    session.hits = [1, 2, 3, 4, 5].map((rank) => ({
      pair_id: `kb${rank}`,
      jp: `例文${rank}`,
      zh: `译文${rank}`,
      distance: rank / 10,
      similarity: 1 / (1 + rank / 10),
      rank,
      selected: true,
      justification: '',
    }));
    return structuredClone(session);
  }

  override async compose(id: string, selections: HitSelection[], note: string): Promise<Session> {
    this.calls.push('compose');
    const session = this.mutable(id);
    if (!session.analysis) {
      throw new ApiError(409, 'missing_prerequisite', 'step requires analyze first', 'analyze');
    }
    if (!session.hits.length) {
      throw new ApiError(409, 'missing_prerequisite', 'step requires retrieve first', 'retrieve');
    }
    for (const sel of selections) {
      const hit = session.hits.find((h) => h.rank === sel.rank);
      if (!hit) throw new ApiError(400, 'unknown_hit', `no hit with rank ${sel.rank}`);
      hit.selected = sel.selected;
      hit.justification = sel.justification;
    }
    const lines = session.hits
      .filter((h) => h.selected)
      .map((h) => `(JP)${h.jp} → (ZH)${h.zh}`)
      .join('\n');
    session.prompt_versions.push({
      note,
      prompt: {
        role_block: 'role',
        analysis_block: 'analysis',
        examples_block: lines,
        instruction_block: `translate: ${session.sl}`,
        rendered: `role\n\nanalysis\n\n${lines}\n\ntranslate: ${session.sl}`,
        template_version: 'v1',
      },
    });
    return structuredClone(session);
  }

  override async generate(id: string): Promise<Session> {
    this.calls.push('generate');
    const session = this.mutable(id);
    if (!session.prompt_versions.length) {
      throw new ApiError(409, 'missing_prerequisite', 'step requires compose first', 'compose');
    }
    session.outputs.push({
      output_zh: '译文1',
      backend: { kind: 'copy-stub', model_id: 'copy-stub', params: {} },
      attempt_count: 1,
      prompt_version: session.prompt_versions.length - 1,
    });
    return structuredClone(session);
  }

  override async postEdit(id: string, text: string, note: string): Promise<Session> {
    this.calls.push('postEdit');
    const session = this.mutable(id);
    if (!session.outputs.length) {
      throw new ApiError(409, 'missing_prerequisite', 'step requires generate first', 'generate');
    }
    session.post_edits.push({ text, note });
    return structuredClone(session);
  }

  override async score(id: string, reference: string): Promise<Session> {
    this.calls.push('score');
    const session = this.mutable(id);
    if (!session.outputs.length) {
      throw new ApiError(409, 'missing_prerequisite', 'step requires generate first', 'generate');
    }
    session.scores.push({
      reference,
      candidate: session.post_edits.at(-1)?.text ?? session.outputs.at(-1)!.output_zh,
      candidate_kind: session.post_edits.length ? 'post_edit' : 'output',
      bleu: {
        score: 100,
        precisions: [1, 1, 1, 1],
        bp: 1,
        hyp_len: 4,
        ref_len: 4,
        smoothing_applied: false,
        epsilon: 0.1,
      },
    });
    return structuredClone(session);
  }

  override async archive(id: string): Promise<Session> {
    this.calls.push('archive');
    const session = this.mutable(id);
    if (!session.outputs.length && !session.post_edits.length) {
      throw new ApiError(409, 'missing_prerequisite', 'archive requires output', 'generate');
    }
    const unjustified = session.hits.filter((h) => !h.justification.trim());
    if (unjustified.length) {
      throw new ApiError(409, 'unjustified_hits', `ranks ${unjustified.map((h) => h.rank)}`);
    }
    session.status = 'archived';
    return structuredClone(session);
  }
}

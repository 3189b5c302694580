/** DOM rendering for the workbench (framework-less, full re-render).
 *
 * Everything shown is derived from the service session: similarity and raw
 * distance come straight from retrieval hits (never recomputed client-side),
 * prompts are read-only text, and archived sessions render as a read-only
 * worksheet.
 */

import type { WorkbenchController, StepState } from './controller.js';
import { STEP_ORDER } from './controller.js';
import { diffLines } from './diff.js';
import type { Session } from './types.js';

export interface ViewHandlers {
  onAnalyze(): void;
  onRetrieve(): void;
  onDecideHit(rank: number, selected: boolean, justification: string): void;
  onCompose(note: string): void;
  onGenerate(): void;
  onPostEdit(text: string, note: string): void;
  onScore(reference: string): void;
  onArchive(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderStepper(doc: Document, steps: StepState[]): HTMLElement {
  const nav = el(doc, 'nav', { class: 'stepper', 'data-testid': 'stepper' });
  for (const step of steps) {
    const cls = ['step', step.done ? 'done' : step.unlocked ? 'unlocked' : 'locked'].join(' ');
    nav.appendChild(
      el(doc, 'span', { class: cls, 'data-step': step.name, 'data-unlocked': String(step.unlocked) },
        `${STEP_ORDER.indexOf(step.name) + 1}. ${step.name}`),
    );
  }
  return nav;
}

function renderAnalysis(doc: Document, session: Session): HTMLElement {
  const box = el(doc, 'section', { class: 'panel', 'data-testid': 'analysis' });
  box.appendChild(el(doc, 'h2', {}, 'Analysis worksheet'));
  if (!session.analysis) {
    box.appendChild(el(doc, 'p', { class: 'muted' }, 'Not analyzed yet.'));
    return box;
  }
  box.appendChild(el(doc, 'p', { 'data-testid': 'a1' }, `NMCC type (A1): ${session.analysis.a1}`));
  const risks = session.analysis.a2.length ? session.analysis.a2.join(', ') : 'none';
  box.appendChild(el(doc, 'p', { 'data-testid': 'a2' }, `Predicted risks (A2): ${risks}`));
  return box;
}

function renderHits(
  doc: Document,
  controller: WorkbenchController,
  handlers: ViewHandlers,
  readOnly: boolean,
): HTMLElement {
  const session = controller.current;
  const box = el(doc, 'section', { class: 'panel', 'data-testid': 'hits' });
  box.appendChild(el(doc, 'h2', {}, 'Retrieved evidence'));
  for (const hit of session.hits) {
    const decision = controller.effectiveDecision(hit.rank);
    const card = el(doc, 'article', { class: 'hit-card', 'data-rank': String(hit.rank) });
    card.appendChild(el(doc, 'p', { class: 'jp' }, `(JP) ${hit.jp}`));
    card.appendChild(el(doc, 'p', { class: 'zh' }, `(ZH) ${hit.zh}`));
    card.appendChild(
      el(doc, 'p', { class: 'metrics', 'data-testid': 'hit-metrics' },
        `rank ${hit.rank} · similarity ${hit.similarity.toFixed(4)} · L2 distance ${hit.distance.toFixed(4)}`),
    );
    const toggle = el(doc, 'input', { type: 'checkbox', 'data-testid': 'hit-toggle' });
    (toggle as HTMLInputElement).checked = decision.selected;
    const justification = el(doc, 'input', {
      type: 'text',
      'data-testid': 'hit-justification',
      placeholder: 'justification (required before archive)',
      value: decision.justification,
    }) as HTMLInputElement;
    if (readOnly) {
      toggle.setAttribute('disabled', 'true');
      justification.setAttribute('disabled', 'true');
    } else {
      const stage = () => handlers.onDecideHit(hit.rank, toggle.checked, justification.value);
      toggle.addEventListener('change', stage);
      justification.addEventListener('change', stage);
    }
    card.appendChild(toggle);
    card.appendChild(justification);
    box.appendChild(card);
  }
  return box;
}

function renderPromptVersions(doc: Document, session: Session): HTMLElement {
  const box = el(doc, 'section', { class: 'panel', 'data-testid': 'prompts' });
  box.appendChild(el(doc, 'h2', {}, 'Prompt versions'));
  session.prompt_versions.forEach((version, i) => {
    const item = el(doc, 'details', { class: 'prompt-version', 'data-version': String(i) });
    item.appendChild(el(doc, 'summary', {}, `v${i + 1}${version.note ? ` — ${version.note}` : ''}`));
    item.appendChild(el(doc, 'pre', { class: 'prompt-text' }, version.prompt.rendered));
    if (i > 0) {
      const diffBox = el(doc, 'div', { class: 'diff', 'data-testid': `diff-${i}` });
      diffBox.appendChild(el(doc, 'h3', {}, `diff v${i} → v${i + 1}`));
      for (const line of diffLines(
        session.prompt_versions[i - 1].prompt.rendered,
        version.prompt.rendered,
      )) {
        const prefix = line.op === 'add' ? '+ ' : line.op === 'del' ? '- ' : '  ';
        diffBox.appendChild(el(doc, 'div', { class: `diff-${line.op}` }, prefix + line.text));
      }
      item.appendChild(diffBox);
    }
    box.appendChild(item);
  });
  return box;
}

function renderReview(doc: Document, session: Session): HTMLElement {
  const box = el(doc, 'section', { class: 'panel', 'data-testid': 'review' });
  box.appendChild(el(doc, 'h2', {}, 'Outputs and review'));
  session.outputs.forEach((output, i) => {
    box.appendChild(
      el(doc, 'p', { class: 'output', 'data-output': String(i) },
        `output ${i + 1} (prompt v${output.prompt_version + 1}): ${output.output_zh}`),
    );
  });
  session.post_edits.forEach((edit, i) => {
    box.appendChild(
      el(doc, 'p', { class: 'post-edit', 'data-postedit': String(i) },
        `post-edit ${i + 1}: ${edit.text}${edit.note ? ` (${edit.note})` : ''}`),
    );
  });
  for (const record of session.scores) {
    const b = record.bleu;
    box.appendChild(
      el(doc, 'p', { class: 'score', 'data-testid': 'score-panel' },
        `BLEU ${b.score.toFixed(2)} on ${record.candidate_kind} · ` +
          `p=[${b.precisions.map((p) => p.toFixed(3)).join(', ')}] · ` +
          `bp ${b.bp.toFixed(4)} · hyp ${b.hyp_len} / ref ${b.ref_len} · eps ${b.epsilon}`),
    );
  }
  return box;
}

export function render(
  root: HTMLElement,
  controller: WorkbenchController,
  handlers: ViewHandlers,
): void {
  const doc = root.ownerDocument;
  root.textContent = '';
  if (!controller.hasSession) {
    root.appendChild(el(doc, 'p', { 'data-testid': 'empty' }, 'Create a session to begin.'));
    return;
  }
  const session = controller.current;
  const readOnly = controller.isArchived;

  const header = el(doc, 'header', {});
  header.appendChild(el(doc, 'h1', {}, `Session ${session.session_id}`));
  header.appendChild(el(doc, 'p', { 'data-testid': 'sl' }, `SL: ${session.sl}`));
  header.appendChild(
    el(doc, 'p', { 'data-testid': 'status', class: `status-${session.status}` },
      readOnly ? 'archived (read-only)' : 'open'),
  );
  root.appendChild(header);
  root.appendChild(renderStepper(doc, controller.stepStates()));
  root.appendChild(renderAnalysis(doc, session));
  if (session.hits.length) root.appendChild(renderHits(doc, controller, handlers, readOnly));
  if (session.prompt_versions.length) root.appendChild(renderPromptVersions(doc, session));
  if (session.outputs.length || session.post_edits.length) {
    root.appendChild(renderReview(doc, session));
  }

  if (readOnly) return;

  const actions = el(doc, 'section', { class: 'panel actions', 'data-testid': 'actions' });
  const steps = controller.stepStates();
  const byName = new Map(steps.map((s) => [s.name, s]));

  const button = (testid: string, label: string, enabled: boolean, onClick: () => void) => {
    const b = el(doc, 'button', { 'data-testid': testid }, label);
    if (!enabled) b.setAttribute('disabled', 'true');
    b.addEventListener('click', onClick);
    actions.appendChild(b);
    return b;
  };

  button('btn-analyze', 'Analyze', byName.get('analyze')!.unlocked, handlers.onAnalyze);
  button('btn-retrieve', 'Retrieve', byName.get('retrieve')!.unlocked, handlers.onRetrieve);

  const composeNote = el(doc, 'input', {
    type: 'text', 'data-testid': 'compose-note', placeholder: 'version note',
  }) as HTMLInputElement;
  actions.appendChild(composeNote);
  button('btn-compose', 'Compose prompt', controller.composeReady(), () =>
    handlers.onCompose(composeNote.value));

  button('btn-generate', 'Generate', byName.get('generate')!.unlocked, handlers.onGenerate);

  const postEditText = el(doc, 'input', {
    type: 'text', 'data-testid': 'postedit-text', placeholder: 'post-edited translation',
  }) as HTMLInputElement;
  actions.appendChild(postEditText);
  button('btn-postedit', 'Save post-edit', byName.get('review')!.unlocked, () =>
    handlers.onPostEdit(postEditText.value, ''));

  const referenceText = el(doc, 'input', {
    type: 'text', 'data-testid': 'score-reference', placeholder: 'reference translation',
  }) as HTMLInputElement;
  actions.appendChild(referenceText);
  button('btn-score', 'Score', byName.get('review')!.unlocked, () =>
    handlers.onScore(referenceText.value));

  button('btn-archive', 'Archive', controller.archiveReady(), handlers.onArchive);
  root.appendChild(actions);
}

// @vitest-environment happy-dom
import { beforeEach, describe, expect, it } from 'vitest';

import { WorkbenchController } from '../src/controller.js';
import { render, type ViewHandlers } from '../src/view.js';
import { FakeApi } from './fakes.js';

const noopHandlers: ViewHandlers = {
  onAnalyze: () => {},
  onRetrieve: () => {},
  onDecideHit: () => {},
  onCompose: () => {},
  onGenerate: () => {},
  onPostEdit: () => {},
  onScore: () => {},
  onArchive: () => {},
};

describe('workbench view', () => {
  let controller: WorkbenchController;
  let root: HTMLElement;

  beforeEach(() => {
    controller = new WorkbenchController(new FakeApi());
    root = document.createElement('div');
    document.body.appendChild(root);
  });

  async function fullSession() {
    await controller.start('魚を焼く女');
    await controller.analyze();
    await controller.retrieve();
    for (const rank of [1, 2, 4, 5]) controller.decideHit(rank, true, 'keep');
    controller.decideHit(3, false, 'register mismatch');
    await controller.compose('v1');
    controller.decideHit(1, false, 'too similar');
    await controller.compose('v2');
    await controller.generate();
    await controller.postEdit('更好的译文', '');
    await controller.score('参考译文');
  }

  it('renders an empty state without a session', () => {
    render(root, controller, noopHandlers);
    expect(root.querySelector('[data-testid="empty"]')).not.toBeNull();
  });

  it('stepper reflects unlock state', async () => {
    await controller.start('魚を焼く女');
    render(root, controller, noopHandlers);
    const steps = [...root.querySelectorAll('[data-step]')];
    expect(steps.map((s) => s.getAttribute('data-unlocked'))).toEqual([
      'true', 'false', 'false', 'false', 'false',
    ]);
  });

  it('hit cards show similarity and raw distance from the service', async () => {
    await controller.start('魚を焼く女');
    await controller.analyze();
    await controller.retrieve();
    render(root, controller, noopHandlers);
    const metrics = [...root.querySelectorAll('[data-testid="hit-metrics"]')];
    expect(metrics).toHaveLength(5);
    expect(metrics[0].textContent).toContain('similarity 0.9091');
    expect(metrics[0].textContent).toContain('L2 distance 0.1000');
  });

  it('compose button disabled until all decisions are explicit', async () => {
    await controller.start('魚を焼く女');
    await controller.analyze();
    await controller.retrieve();
    render(root, controller, noopHandlers);
    let btn = root.querySelector('[data-testid="btn-compose"]') as HTMLButtonElement;
    expect(btn.hasAttribute('disabled')).toBe(true);
    for (const rank of [1, 2, 3, 4, 5]) controller.decideHit(rank, true, 'keep');
    render(root, controller, noopHandlers);
    btn = root.querySelector('[data-testid="btn-compose"]') as HTMLButtonElement;
    expect(btn.hasAttribute('disabled')).toBe(false);
  });

  it('archive button disabled while a justification is missing', async () => {
    await controller.start('魚を焼く女');
    await controller.analyze();
    await controller.retrieve();
    for (const rank of [1, 2, 3, 4]) controller.decideHit(rank, true, 'keep');
    controller.decideHit(5, false, ''); // deselected but unjustified
    await controller.compose('v1');
    await controller.generate();
    render(root, controller, noopHandlers);
    const btn = root.querySelector('[data-testid="btn-archive"]') as HTMLButtonElement;
    expect(btn.hasAttribute('disabled')).toBe(true);
  });

  it('two versions render with a textual diff', async () => {
    await fullSession();
    render(root, controller, noopHandlers);
    const versions = [...root.querySelectorAll('.prompt-version')];
    expect(versions).toHaveLength(2);
    const diff = root.querySelector('[data-testid="diff-1"]');
    expect(diff).not.toBeNull();
    expect(diff!.querySelectorAll('.diff-del').length).toBeGreaterThan(0);
  });

  it('score panel shows BLEU components', async () => {
    await fullSession();
    render(root, controller, noopHandlers);
    const panel = root.querySelector('[data-testid="score-panel"]');
    expect(panel!.textContent).toContain('BLEU 100.00');
    expect(panel!.textContent).toContain('bp 1.0000');
    expect(panel!.textContent).toContain('post_edit');
  });

  it('archived session renders read-only with no action buttons', async () => {
    await fullSession();
    await controller.archive();
    render(root, controller, noopHandlers);
    expect(root.querySelector('[data-testid="status"]')!.textContent).toContain('read-only');
    expect(root.querySelector('[data-testid="actions"]')).toBeNull();
    const toggles = [...root.querySelectorAll('[data-testid="hit-toggle"]')];
    expect(toggles.every((t) => t.hasAttribute('disabled'))).toBe(true);
  });
});

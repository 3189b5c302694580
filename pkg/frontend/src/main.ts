/** Entry point: wires the API client, controller, and view together.
 * Served statically by the workbench service; the API lives at the same
 * origin. Deep-link an existing session with ?session=<id>.
 */

import { ApiError, WorkbenchApi } from './api.js';
import { WorkbenchController } from './controller.js';
import { render, type ViewHandlers } from './view.js';

const api = new WorkbenchApi('');
const controller = new WorkbenchController(api);

const root = document.getElementById('app') as HTMLElement;
const errorBar = document.getElementById('error') as HTMLElement;

function showError(err: unknown): void {
  if (err instanceof ApiError) {
    errorBar.textContent = err.missingPrerequisite
      ? `${err.message} (missing prerequisite: ${err.missingPrerequisite})`
      : err.message;
  } else {
    errorBar.textContent = String(err);
  }
  errorBar.classList.add('visible');
}

function clearError(): void {
  errorBar.textContent = '';
  errorBar.classList.remove('visible');
}

async function act(action: () => Promise<unknown>): Promise<void> {
  clearError();
  try {
    await action();
  } catch (err) {
    showError(err);
  }
  render(root, controller, handlers);
}

const handlers: ViewHandlers = {
  onAnalyze: () => void act(() => controller.analyze()),
  onRetrieve: () => void act(() => controller.retrieve()),
  onDecideHit: (rank, selected, justification) => {
    controller.decideHit(rank, selected, justification);
    render(root, controller, handlers);
  },
  onCompose: (note) => void act(() => controller.compose(note)),
  onGenerate: () => void act(() => controller.generate()),
  onPostEdit: (text, note) => void act(() => controller.postEdit(text, note)),
  onScore: (reference) => void act(() => controller.score(reference)),
  onArchive: () => void act(() => controller.archive()),
};

const form = document.getElementById('new-session-form') as HTMLFormElement;
const slInput = document.getElementById('sl-input') as HTMLInputElement;
form.addEventListener('submit', (event) => {
  event.preventDefault();
  void act(() => controller.start(slInput.value));
});

const sessionId = new URLSearchParams(window.location.search).get('session');
if (sessionId) {
  void act(() => controller.reload(sessionId));
} else {
  render(root, controller, handlers);
}

// Entry point: read the session and rater from the URL, or show a small
// form asking for them, then hand control to the rating flow.

import './styles.css';
import { RatingApi } from './api';
import { RatingController } from './controller';
import { DomView } from './view';

function renderSetupForm(root: HTMLElement): void {
  root.innerHTML = `
    <main class="card setup">
      <h2>Open a rating session</h2>
      <p>Enter the session id and your rater name to begin.</p>
      <form data-el="setup-form">
        <label>Session <input name="session" required placeholder="session-1"></label>
        <label>Rater <input name="rater" required placeholder="your-name"></label>
        <button type="submit" class="submit">Start</button>
      </form>
    </main>
  `;
  const form = root.querySelector<HTMLFormElement>('[data-el="setup-form"]')!;
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const query = new URLSearchParams({
      session: String(data.get('session') ?? ''),
      rater: String(data.get('rater') ?? ''),
    });
    window.location.search = query.toString();
  });
}

function bindKeyboard(controller: RatingController): void {
  document.addEventListener('keydown', (event) => {
    if (event.target instanceof HTMLInputElement) {
      return;
    }
    switch (event.key) {
      case '1':
        controller.selectVerdict(1);
        break;
      case '0':
        controller.selectVerdict(0);
        break;
      case 'Enter':
        void controller.submit();
        break;
      case 'ArrowLeft':
        void controller.back();
        break;
      case 'ArrowRight':
        void controller.forward();
        break;
    }
  });
}

function boot(): void {
  const root = document.getElementById('app');
  if (!root) {
    return;
  }
  const params = new URLSearchParams(window.location.search);
  const session = params.get('session');
  const rater = params.get('rater');
  if (!session || !rater) {
    renderSetupForm(root);
    return;
  }
  const api = new RatingApi(window.location.origin, session);
  const controller: RatingController = new RatingController(
    api,
    { render: (state) => view.render(state) },
    rater,
  );
  const view = new DomView(root, {
    onVerdict: (verdict) => controller.selectVerdict(verdict),
    onSubmit: () => void controller.submit(),
    onBack: () => void controller.back(),
    onForward: () => void controller.forward(),
    onRetry: () => void controller.retry(),
  });
  bindKeyboard(controller);
  void controller.start();
}

boot();

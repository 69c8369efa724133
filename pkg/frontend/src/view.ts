// DOM rendering. Builds the page skeleton once, then projects each
// RatingViewState onto it. All user text goes through textContent or the
// escaping excerpt renderer; innerHTML only ever receives escaped markup.

import { renderExcerptHtml } from './highlight';
import { canSubmit, progressFraction } from './state';
import type { RatingViewState } from './state';
import type { Verdict } from './types';

export interface ViewHandlers {
  onVerdict(verdict: Verdict): void;
  onSubmit(): void;
  onBack(): void;
  onForward(): void;
  onRetry(): void;
}

export class DomView {
  private readonly els: {
    progressFill: HTMLElement;
    progressText: HTMLElement;
    banner: HTMLElement;
    retryButton: HTMLButtonElement;
    toast: HTMLElement;
    card: HTMLElement;
    phaseNote: HTMLElement;
    questionKey: HTMLElement;
    modelId: HTMLElement;
    question: HTMLElement;
    excerpt: HTMLElement;
    modelAnswer: HTMLElement;
    goldBlock: HTMLElement;
    goldList: HTMLElement;
    criteria: HTMLElement;
    correctButton: HTMLButtonElement;
    incorrectButton: HTMLButtonElement;
    submitButton: HTMLButtonElement;
    submitLabel: HTMLElement;
    backButton: HTMLButtonElement;
    forwardButton: HTMLButtonElement;
    doneScreen: HTMLElement;
    exportLink: HTMLAnchorElement;
    loading: HTMLElement;
  };

  constructor(root: HTMLElement, handlers: ViewHandlers) {
    root.innerHTML = `
      <header class="topbar">
        <div class="progress-track"><div class="progress-fill" data-el="progress-fill"></div></div>
        <div class="progress-text" data-el="progress-text"></div>
      </header>
      <div class="banner hidden" data-el="banner">
        <span>Server unreachable. Your selection is kept; nothing was lost.</span>
        <button type="button" data-el="retry">Retry</button>
      </div>
      <div class="toast hidden" data-el="toast" role="alert"></div>
      <main class="card hidden" data-el="card">
        <div class="meta">
          <span class="badge" data-el="question-key"></span>
          <span class="badge badge-model" data-el="model-id"></span>
          <span class="phase-note" data-el="phase-note"></span>
        </div>
        <h2 data-el="question"></h2>
        <section class="excerpt" data-el="excerpt"></section>
        <section class="answer-block">
          <h3>Model answer</h3>
          <p class="model-answer" data-el="model-answer"></p>
        </section>
        <section class="answer-block" data-el="gold-block">
          <h3>Reference answers</h3>
          <ul data-el="gold-list"></ul>
        </section>
        <section class="criteria">
          <h3>Rating criteria</h3>
          <p data-el="criteria"></p>
        </section>
        <div class="controls">
          <button type="button" class="verdict correct" data-el="correct">Correct <kbd>1</kbd></button>
          <button type="button" class="verdict incorrect" data-el="incorrect">Incorrect <kbd>0</kbd></button>
          <button type="button" class="submit" data-el="submit"><span data-el="submit-label">Submit</span> <kbd>Enter</kbd></button>
        </div>
        <nav class="paging">
          <button type="button" data-el="back">&#8592; Previous</button>
          <button type="button" data-el="forward">Next &#8594;</button>
        </nav>
      </main>
      <section class="done hidden" data-el="done">
        <h2>All items rated</h2>
        <p>Every answer in this session has a verdict. Thank you.</p>
        <a data-el="export" download>Download ratings (JSONL)</a>
      </section>
      <p class="loading" data-el="loading">Loading the first item&hellip;</p>
    `;
    const pick = <T extends HTMLElement>(name: string): T => {
      const found = root.querySelector(`[data-el="${name}"]`);
      if (!found) {
        throw new Error(`missing element ${name}`);
      }
      return found as T;
    };
    this.els = {
      progressFill: pick('progress-fill'),
      progressText: pick('progress-text'),
      banner: pick('banner'),
      retryButton: pick<HTMLButtonElement>('retry'),
      toast: pick('toast'),
      card: pick('card'),
      phaseNote: pick('phase-note'),
      questionKey: pick('question-key'),
      modelId: pick('model-id'),
      question: pick('question'),
      excerpt: pick('excerpt'),
      modelAnswer: pick('model-answer'),
      goldBlock: pick('gold-block'),
      goldList: pick('gold-list'),
      criteria: pick('criteria'),
      correctButton: pick<HTMLButtonElement>('correct'),
      incorrectButton: pick<HTMLButtonElement>('incorrect'),
      submitButton: pick<HTMLButtonElement>('submit'),
      submitLabel: pick('submit-label'),
      backButton: pick<HTMLButtonElement>('back'),
      forwardButton: pick<HTMLButtonElement>('forward'),
      doneScreen: pick('done'),
      exportLink: pick<HTMLAnchorElement>('export'),
      loading: pick('loading'),
    };
    this.els.correctButton.addEventListener('click', () => handlers.onVerdict(1));
    this.els.incorrectButton.addEventListener('click', () => handlers.onVerdict(0));
    this.els.submitButton.addEventListener('click', () => handlers.onSubmit());
    this.els.backButton.addEventListener('click', () => handlers.onBack());
    this.els.forwardButton.addEventListener('click', () => handlers.onForward());
    this.els.retryButton.addEventListener('click', () => handlers.onRetry());
  }

  render(state: RatingViewState): void {
    const els = this.els;
    const percent = Math.round(progressFraction(state.progress) * 100);
    els.progressFill.style.width = `${percent}%`;
    els.progressText.textContent =
      state.progress.total > 0
        ? `${state.progress.rated} of ${state.progress.total} rated (${percent}%)`
        : '';

    els.banner.classList.toggle('hidden', state.connection !== 'offline');
    els.toast.classList.toggle('hidden', state.toast === null);
    els.toast.textContent = state.toast ?? '';

    const showCard =
      (state.phase === 'rating' || state.phase === 'revising') && state.task !== null;
    els.card.classList.toggle('hidden', !showCard);
    els.doneScreen.classList.toggle('hidden', state.phase !== 'done');
    els.loading.classList.toggle('hidden', state.phase !== 'loading');

    if (state.phase === 'done' && state.exportUrl) {
      els.exportLink.href = state.exportUrl;
    }
    if (!showCard) {
      return;
    }

    const task = state.task!;
    els.phaseNote.textContent =
      state.phase === 'revising' ? 'Revising an earlier verdict' : '';
    els.questionKey.textContent = task.question_key;
    els.modelId.textContent = task.model_id;
    els.question.textContent = task.question;
    els.excerpt.innerHTML = renderExcerptHtml(
      task.context_excerpt,
      task.answer_start,
      task.answer_end,
    );
    els.modelAnswer.textContent =
      task.model_answer === '' ? '(no answer)' : task.model_answer;
    els.goldBlock.classList.toggle('hidden', task.gold_answers.length === 0);
    els.goldList.replaceChildren(
      ...task.gold_answers.map((answer) => {
        const item = document.createElement('li');
        item.textContent = answer;
        return item;
      }),
    );
    els.criteria.textContent = task.criteria;

    els.correctButton.classList.toggle('selected', state.verdict === 1);
    els.incorrectButton.classList.toggle('selected', state.verdict === 0);
    els.submitButton.disabled = !canSubmit(state);
    els.submitLabel.textContent = state.saving ? 'Saving...' : 'Submit';
    els.backButton.disabled = state.saving;
    els.forwardButton.disabled = state.saving || state.phase !== 'revising';
  }
}

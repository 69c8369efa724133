// Session flow: fetch a task, collect a verdict, submit, advance.
//
// The server is the single source of truth. "Next" is always asked of the
// server, a verdict counts as saved only after its acknowledgment arrives,
// and nothing is persisted in the browser, so reloading the page resumes
// exactly where the stored ratings say the rater stopped.

import { ApiError, ConnectionError } from './api';
import type { RatingServiceClient } from './api';
import { canSubmit, initialState } from './state';
import type { RatingViewState } from './state';
import type { Verdict } from './types';

export interface ViewSink {
  render(state: RatingViewState): void;
}

interface TaskKey {
  question_id: string;
  model_id: string;
}

export class RatingController {
  private state: RatingViewState = initialState();
  /** Tasks rated during this page visit, oldest first; drives back-navigation. */
  private visited: TaskKey[] = [];
  /** Index into `visited` while revising, null while on the live queue. */
  private revisionIndex: number | null = null;
  /** What to re-run when the rater hits retry after a connection failure. */
  private retryAction: (() => Promise<void>) | null = null;

  constructor(
    private readonly api: RatingServiceClient,
    private readonly view: ViewSink,
    private readonly raterId: string,
  ) {}

  snapshot(): RatingViewState {
    return this.state;
  }

  async start(): Promise<void> {
    await this.guarded(() => this.fetchNext());
  }

  selectVerdict(verdict: Verdict): void {
    if (this.state.phase !== 'rating' && this.state.phase !== 'revising') {
      return;
    }
    if (this.state.saving) {
      return;
    }
    this.update({ verdict, toast: null });
  }

  /**
   * POST the selected verdict, wait for the acknowledgment, then advance.
   * A second call while the first is in flight is a no-op (saving guard),
   * so a double-clicked submit button sends exactly one request.
   */
  async submit(): Promise<void> {
    if (!canSubmit(this.state)) {
      return;
    }
    const task = this.state.task!;
    const verdict = this.state.verdict!;
    this.update({ saving: true, toast: null });
    let ack;
    try {
      ack = await this.api.submit(this.raterId, task.question_id, task.model_id, verdict);
    } catch (error) {
      if (error instanceof ApiError) {
        // rejected verdict: keep the task and the selection, surface the reason
        this.update({ saving: false, toast: error.message });
        return;
      }
      if (error instanceof ConnectionError) {
        // nothing was confirmed saved; the selection survives for retry
        this.retryAction = () => this.submit();
        this.update({ saving: false, connection: 'offline' });
        return;
      }
      throw error;
    }
    this.rememberVisit({ question_id: ack.question_id, model_id: ack.model_id });
    this.revisionIndex = null;
    this.update({
      saving: false,
      verdict: null,
      progress: { rated: ack.rated, total: ack.total },
    });
    await this.guarded(() => this.fetchNext());
  }

  /** Step back to the previously rated item and allow changing its verdict. */
  async back(): Promise<void> {
    if (this.state.saving || this.visited.length === 0) {
      return;
    }
    const target =
      this.revisionIndex === null ? this.visited.length - 1 : this.revisionIndex - 1;
    if (target < 0) {
      return;
    }
    this.revisionIndex = target;
    await this.guarded(() => this.fetchVisited(target));
  }

  /** Step forward through revised items; past the end returns to the live queue. */
  async forward(): Promise<void> {
    if (this.state.phase !== 'revising' || this.state.saving) {
      return;
    }
    const target = this.revisionIndex! + 1;
    if (target >= this.visited.length) {
      this.revisionIndex = null;
      await this.guarded(() => this.fetchNext());
      return;
    }
    this.revisionIndex = target;
    await this.guarded(() => this.fetchVisited(target));
  }

  /** Re-run whatever failed when the server was unreachable. */
  async retry(): Promise<void> {
    if (this.state.connection !== 'offline') {
      return;
    }
    const action = this.retryAction ?? (() => this.fetchNext());
    this.retryAction = null;
    this.update({ connection: 'online', toast: null });
    await this.guarded(action);
  }

  private async fetchNext(): Promise<void> {
    const response = await this.api.next(this.raterId);
    if (response.done) {
      const progress = await this.doneProgress();
      this.update({
        phase: 'done',
        connection: 'online',
        task: null,
        verdict: null,
        progress,
        exportUrl: this.api.exportUrl(),
      });
      return;
    }
    const task = response.task!;
    this.update({
      phase: 'rating',
      connection: 'online',
      task,
      verdict: null,
      progress: { rated: task.position - 1, total: task.total },
    });
  }

  private async doneProgress(): Promise<{ rated: number; total: number }> {
    if (this.state.progress.total > 0) {
      return { rated: this.state.progress.total, total: this.state.progress.total };
    }
    // fresh page load straight into a finished session
    const report = await this.api.progress();
    return { rated: report.items, total: report.items };
  }

  private async fetchVisited(index: number): Promise<void> {
    const key = this.visited[index]!;
    const task = await this.api.task(this.raterId, key.question_id, key.model_id);
    this.update({
      phase: 'revising',
      connection: 'online',
      task,
      verdict: null,
      toast: null,
    });
  }

  private rememberVisit(key: TaskKey): void {
    const seen = this.visited.some(
      (entry) => entry.question_id === key.question_id && entry.model_id === key.model_id,
    );
    if (!seen) {
      this.visited.push(key);
    }
  }

  private update(patch: Partial<RatingViewState>): void {
    this.state = { ...this.state, ...patch };
    this.view.render(this.state);
  }

  private async guarded(action: () => Promise<void>): Promise<void> {
    try {
      await action();
    } catch (error) {
      if (error instanceof ConnectionError) {
        this.retryAction = action;
        this.update({ connection: 'offline', saving: false });
        return;
      }
      if (error instanceof ApiError) {
        this.update({ toast: error.message, saving: false });
        return;
      }
      throw error;
    }
  }
}

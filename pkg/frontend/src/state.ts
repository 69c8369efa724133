// View state and the pure predicates the controller and view share.
// The state is always rebuilt from server responses; nothing in here is
// persisted client-side, which is what makes a refresh safe.

import type { RatingTask, Verdict } from './types';

export type Phase = 'loading' | 'rating' | 'revising' | 'done';
export type ConnectionStatus = 'online' | 'offline';

export interface ProgressInfo {
  rated: number;
  total: number;
}

export interface RatingViewState {
  phase: Phase;
  connection: ConnectionStatus;
  task: RatingTask | null;
  /** The rater's current pick; stays null until one of the two buttons (or 1/0) is used. */
  verdict: Verdict | null;
  /** True only while a POST is in flight; the UI must not claim "saved" during it. */
  saving: boolean;
  progress: ProgressInfo;
  /** Transient error message, e.g. a verdict the server rejected. */
  toast: string | null;
  /** Download link for the session's ratings, set once everything is rated. */
  exportUrl: string | null;
}

export function initialState(): RatingViewState {
  return {
    phase: 'loading',
    connection: 'online',
    task: null,
    verdict: null,
    saving: false,
    progress: { rated: 0, total: 0 },
    toast: null,
    exportUrl: null,
  };
}

export function progressFraction(progress: ProgressInfo): number {
  return progress.total === 0 ? 0 : progress.rated / progress.total;
}

/** Submit is allowed only with a selected verdict, no save in flight, and a live server. */
export function canSubmit(state: RatingViewState): boolean {
  return (
    (state.phase === 'rating' || state.phase === 'revising') &&
    state.task !== null &&
    state.verdict !== null &&
    !state.saving &&
    state.connection === 'online'
  );
}

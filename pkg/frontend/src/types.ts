// Wire types for the rating service JSON API. Field names mirror the
// server payloads exactly, so these interfaces double as documentation
// of what actually travels over HTTP.

export type Verdict = 0 | 1;

export interface RatingTask {
  question_id: string;
  model_id: string;
  question: string;
  question_key: string;
  context_excerpt: string;
  answer_start: number | null;
  answer_end: number | null;
  model_answer: string;
  gold_answers: string[];
  criteria: string;
  position: number;
  total: number;
}

export interface NextTaskResponse {
  done: boolean;
  task: RatingTask | null;
}

export interface VerdictAck {
  recorded: boolean;
  question_id: string;
  model_id: string;
  rater_id: string;
  rated: number;
  total: number;
}

export interface RaterProgress {
  rated: number;
  remaining: number;
}

export interface ProgressResponse {
  items: number;
  raters: Record<string, RaterProgress>;
  expected_total: number;
  rated_total: number;
}

// Safe HTML rendering of a context excerpt with the model answer marked.

const REPLACEMENTS: Record<string, string> = {
  '&': '&amp;',
  '<': '&lt;',
  '>': '&gt;',
  '"': '&quot;',
  "'": '&#39;',
};

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => REPLACEMENTS[ch] ?? ch);
}

/**
 * Excerpt HTML with the answer span wrapped in <mark>. The server sends
 * character offsets local to the excerpt, or nulls when the answer does
 * not occur in it; offsets are clamped so a malformed span can never
 * produce broken markup or highlight out of bounds.
 */
export function renderExcerptHtml(
  excerpt: string,
  start: number | null,
  end: number | null,
): string {
  if (start === null || end === null) {
    return escapeHtml(excerpt);
  }
  const from = Math.max(0, Math.min(start, excerpt.length));
  const to = Math.max(from, Math.min(end, excerpt.length));
  if (from === to) {
    return escapeHtml(excerpt);
  }
  const before = escapeHtml(excerpt.slice(0, from));
  const marked = escapeHtml(excerpt.slice(from, to));
  const after = escapeHtml(excerpt.slice(to));
  return `${before}<mark>${marked}</mark>${after}`;
}

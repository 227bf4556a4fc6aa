/** Search result highlighting: mark every occurrence of the searched
 *  word, case-insensitively, without touching the text itself. */

export interface HighlightPiece {
  text: string;
  hit: boolean;
}

export function highlight(text: string, query: string): HighlightPiece[] {
  const needle = query.trim().toLowerCase();
  if (!needle || !text) {
    return text ? [{ text, hit: false }] : [];
  }
  const lower = text.toLowerCase();
  const pieces: HighlightPiece[] = [];
  let from = 0;
  for (;;) {
    const at = lower.indexOf(needle, from);
    if (at < 0) break;
    if (at > from) pieces.push({ text: text.slice(from, at), hit: false });
    pieces.push({ text: text.slice(at, at + needle.length), hit: true });
    from = at + needle.length;
  }
  if (from < text.length) pieces.push({ text: text.slice(from), hit: false });
  return pieces;
}

/** Reassemble, to prove highlighting never rewrites content. */
export function plainText(pieces: HighlightPiece[]): string {
  return pieces.map((p) => p.text).join("");
}

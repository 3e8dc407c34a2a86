// Shared text utilities for the rule engines.  The tokenizer keeps
// character offsets so noun phrase spans can index the request sentence
// exactly, which the wire protocol requires.

export interface Token {
  text: string;
  start: number;
  end: number;
  isWord: boolean;
}

const TOKEN_RE = /[\p{L}\p{N}_]+|[^\p{L}\p{N}_\s]/gu;

export function tokenize(text: string): Token[] {
  const tokens: Token[] = [];
  for (const match of text.matchAll(TOKEN_RE)) {
    const value = match[0];
    const start = match.index ?? 0;
    tokens.push({
      text: value,
      start,
      end: start + value.length,
      isWord: /[\p{L}\p{N}_]/u.test(value),
    });
  }
  return tokens;
}

export function wordTokens(text: string): string[] {
  return tokenize(text)
    .filter((t) => t.isWord)
    .map((t) => t.text.toLowerCase());
}

export interface SentenceSlice {
  text: string;
  start: number;
}

// Boundary = terminal punctuation followed by whitespace and an upper-case
// or quote opener.  Good enough for the short declaratives this shim serves;
// it is a model property, not a contract.
const BOUNDARY_RE = /[.!?]+(?=\s+["'(\[]?\p{Lu})/gu;

export function sentences(text: string): SentenceSlice[] {
  const out: SentenceSlice[] = [];
  let cursor = 0;
  for (const match of text.matchAll(BOUNDARY_RE)) {
    const end = (match.index ?? 0) + match[0].length;
    const piece = text.slice(cursor, end);
    if (piece.trim()) {
      out.push(slice(piece, cursor));
    }
    cursor = end;
  }
  const tail = text.slice(cursor);
  if (tail.trim()) {
    out.push(slice(tail, cursor));
  }
  return out;
}

function slice(piece: string, offset: number): SentenceSlice {
  const leading = piece.length - piece.trimStart().length;
  return { text: piece.trim(), start: offset + leading };
}

export function collapseWs(text: string): string {
  return text.split(/\s+/u).filter(Boolean).join(" ");
}

export function stripTrailingPunct(text: string): string {
  return text.replace(/[\s.!?]+$/u, "");
}

// Deterministic rule "models" behind the three endpoints.  Each engine is a
// pure function of its request, so responses are reproducible within and
// across process lifetimes and safe for client-side memoization.

import { NpSpan, ServiceConfig, validateConfig } from "./schema";
import {
  Token,
  collapseWs,
  sentences,
  stripTrailingPunct,
  tokenize,
  wordTokens,
} from "./text";

export type QgEngine = (context: string, answer: string) => string;
export type QaEngine = (context: string, question: string) => string;
export type NpEngine = (sentence: string) => NpSpan[];

export interface Engines {
  generate: QgEngine;
  answer: QaEngine;
  nounPhrases: NpEngine;
}

const DETERMINERS = new Set(["a", "an", "the", "this", "that", "these", "those"]);

const CHUNK_STOPS = new Set([
  ...DETERMINERS,
  "is", "was", "are", "were", "be", "been", "being",
  "has", "have", "had", "do", "does", "did",
  "will", "would", "can", "could", "may", "might", "shall", "should", "must",
  "of", "in", "on", "at", "by", "for", "with", "from", "to", "near",
  "and", "or", "but", "that", "which", "who", "where", "when", "while",
  "before", "after",
]);

// Lower-cased forms that do not start a noun phrase when they open the
// sentence merely because prose capitalizes the first word.
const SENTENCE_STARTERS = new Set([
  "the", "a", "an", "in", "on", "at", "by", "for", "with", "from", "to",
  "and", "but", "or", "so", "as", "if", "when", "while", "after", "before",
  "it", "he", "she", "they", "we", "you", "i", "there", "here",
  "this", "that", "these", "those", "what", "who", "how", "why", "where",
]);

function isCapitalized(token: string): boolean {
  return /^\p{Lu}/u.test(token);
}

function looksLikePastVerb(token: string): boolean {
  return token.length >= 4 && token.toLowerCase().endsWith("ed");
}

function whWordFor(answer: string): string {
  const words = answer.split(/\s+/u).filter(Boolean);
  const content = words.filter((w) => !DETERMINERS.has(w.toLowerCase()));
  if (content.length > 0 && content.every(isCapitalized)) {
    return "who";
  }
  return "what";
}

// --- question generation ---------------------------------------------------

// Cloze-style generation: find the sentence containing the answer, replace
// the answer span with "who"/"what", and reshape the remainder as a
// question.  Its QA counterpart below inverts the transformation, so the
// pair round-trips exactly on extractive fixtures.
export function generateQuestion(context: string, answer: string): string {
  const target = answer.trim();
  if (target) {
    for (const sentence of sentences(context)) {
      let at = sentence.text.indexOf(target);
      let length = target.length;
      if (at < 0) {
        at = sentence.text.toLowerCase().indexOf(target.toLowerCase());
      }
      if (at < 0) {
        continue;
      }
      const wh = whWordFor(target);
      const rewritten =
        sentence.text.slice(0, at) + wh + sentence.text.slice(at + length);
      let question = collapseWs(stripTrailingPunct(rewritten));
      if (!question || question.toLowerCase() === wh) {
        question = `${wh} does the passage describe`;
      }
      question = question.charAt(0).toUpperCase() + question.slice(1);
      return `${question}?`;
    }
  }
  return "What does the passage state?";
}

// --- question answering -----------------------------------------------------

// Invert generateQuestion: locate a wh word in the question, then find a
// context sentence that matches the question text around it; the unmatched
// middle is the answer, returned with its original casing.  Questions that
// do not align fall back to a bag-of-words span match so the endpoint
// always produces an extractive answer.
export function answerQuestion(context: string, question: string): string {
  const flat = collapseWs(question).replace(/[\s?]+$/u, "");
  const contextSentences = sentences(context);
  for (const match of flat.matchAll(/\b(who|what)\b/giu)) {
    const at = match.index ?? 0;
    const prefix = flat.slice(0, at).toLowerCase();
    const suffix = flat.slice(at + match[0].length).toLowerCase();
    for (const sentence of contextSentences) {
      const plain = collapseWs(stripTrailingPunct(sentence.text));
      const lower = plain.toLowerCase();
      if (plain.length < prefix.length + suffix.length) {
        continue;
      }
      if (!lower.startsWith(prefix) || !lower.endsWith(suffix)) {
        continue;
      }
      const middle = plain.slice(prefix.length, plain.length - suffix.length).trim();
      if (middle) {
        return middle;
      }
    }
  }
  return overlapFallback(context, flat);
}

function overlapFallback(context: string, question: string): string {
  const questionWords = new Set(wordTokens(question));
  const tokens = tokenize(context).filter((t) => t.isWord);
  if (tokens.length === 0) {
    return context.trim();
  }
  let best = { overlap: -1, length: 0, start: 0, end: 1 };
  for (let i = 0; i < tokens.length; i++) {
    let overlap = 0;
    for (let j = i; j < Math.min(tokens.length, i + 8); j++) {
      if (questionWords.has(tokens[j].text.toLowerCase())) {
        overlap += 1;
      }
      const length = j - i + 1;
      if (
        overlap > best.overlap ||
        (overlap === best.overlap && length > best.length)
      ) {
        best = { overlap, length, start: i, end: j + 1 };
      }
    }
  }
  const from = tokens[best.start].start;
  const to = tokens[best.end - 1].end;
  return context.slice(from, to);
}

// --- noun phrase chunking ----------------------------------------------------

export function extractNounPhrases(sentence: string): NpSpan[] {
  const tokens = tokenize(sentence);
  const words = tokens.filter((t) => t.isWord);
  const candidates: { start: number; end: number }[] = [];

  // determiner-led chunks: "the south pier", "a deeper understanding"
  for (let i = 0; i < words.length; i++) {
    if (!DETERMINERS.has(words[i].text.toLowerCase())) {
      continue;
    }
    let last = i;
    while (
      last + 1 < words.length &&
      last - i < 5 &&
      contiguous(tokens, words[last], words[last + 1]) &&
      !CHUNK_STOPS.has(words[last + 1].text.toLowerCase()) &&
      !looksLikePastVerb(words[last + 1].text)
    ) {
      last += 1;
    }
    if (last > i) {
      candidates.push({ start: words[i].start, end: words[last].end });
    }
  }

  // capitalized runs: "Sarah", "Nadia Okafor"
  for (let i = 0; i < words.length; i++) {
    if (!isCapitalized(words[i].text)) {
      continue;
    }
    if (i > 0 && isCapitalized(words[i - 1].text) && contiguous(tokens, words[i - 1], words[i])) {
      continue; // not the head of the run
    }
    let last = i;
    while (
      last + 1 < words.length &&
      contiguous(tokens, words[last], words[last + 1]) &&
      isCapitalized(words[last + 1].text)
    ) {
      last += 1;
    }
    const sentenceInitial = words[i].start === tokens[0].start;
    if (
      sentenceInitial &&
      last === i &&
      SENTENCE_STARTERS.has(words[i].text.toLowerCase())
    ) {
      continue;
    }
    candidates.push({ start: words[i].start, end: words[last].end });
  }

  candidates.sort((a, b) => a.start - b.start || b.end - a.end);
  const spans: NpSpan[] = [];
  let cursor = -1;
  for (const c of candidates) {
    if (c.start < cursor) {
      continue;
    }
    spans.push({ start: c.start, end: c.end, text: sentence.slice(c.start, c.end) });
    cursor = c.end;
  }
  return spans;
}

// true when no punctuation token sits between two word tokens
function contiguous(tokens: Token[], left: Token, right: Token): boolean {
  for (const t of tokens) {
    if (!t.isWord && t.start >= left.end && t.end <= right.start) {
      return false;
    }
  }
  return true;
}

// --- registry ----------------------------------------------------------------

export const QG_MODELS: Record<string, QgEngine> = {
  "rule-qg-v1": generateQuestion,
};

export const QA_MODELS: Record<string, QaEngine> = {
  "rule-qa-v1": answerQuestion,
};

export const NP_MODELS: Record<string, NpEngine> = {
  "rule-np-v1": extractNounPhrases,
};

export function resolveEngines(config: ServiceConfig): Engines {
  validateConfig(config);
  const generate = QG_MODELS[config.qgModel];
  const answer = QA_MODELS[config.qaModel];
  const nounPhrases = NP_MODELS[config.npModel];
  if (!generate) {
    throw new Error(`unknown QG model ${config.qgModel}`);
  }
  if (!answer) {
    throw new Error(`unknown QA model ${config.qaModel}`);
  }
  if (!nounPhrases) {
    throw new Error(`unknown NP model ${config.npModel}`);
  }
  return { generate, answer, nounPhrases };
}

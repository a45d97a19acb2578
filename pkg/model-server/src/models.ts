/**
 * Deterministic model backends, selected by identifier string.
 *
 * No backend downloads weights: the embedder is a feature-hashed n-gram
 * model, generation is cloze templating, QA is overlap-based span search
 * and extraction is surface-pattern based. They are real algorithms with
 * meaningful (if modest) behaviour, not mocks, and they make the whole
 * wire protocol exercisable offline.
 */

export interface EmbedModel {
  id: string;
  dim: number;
  embed(texts: string[]): number[][];
}

export interface GenerateModel {
  id: string;
  generate(prompt: string): string;
}

export interface QaModel {
  id: string;
  answer(question: string, context: string): string;
}

export interface ExtractModel {
  id: string;
  extract(sentence: string): string[];
}

// FNV-1a, 32-bit: stable across platforms and runs.
function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

function tokens(text: string): string[] {
  return text.toLowerCase().split(/\s+/).map(stripPunct).filter((t) => t.length > 0);
}

function stripPunct(token: string): string {
  return token.replace(/^[^\p{L}\p{N}]+|[^\p{L}\p{N}]+$/gu, '');
}

const STOPWORDS = new Set([
  'a', 'an', 'the', 'is', 'was', 'are', 'were', 'did', 'do', 'does',
  'in', 'on', 'at', 'of', 'to', 'and', 'or', 'with', 'for', 'by',
  'what', 'who', 'where', 'when', 'why', 'how', 'which',
]);

class HashNgramEmbedder implements EmbedModel {
  constructor(public id: string, public dim: number) {}

  embed(texts: string[]): number[][] {
    return texts.map((text) => this.one(text));
  }

  private one(text: string): number[] {
    const vec = new Array<number>(this.dim).fill(0);
    const add = (feature: string, weight: number) => {
      const h = fnv1a(feature);
      const index = h % this.dim;
      const sign = (h >>> 16) & 1 ? 1 : -1;
      vec[index] += sign * weight;
    };
    for (const word of tokens(text)) {
      add(`w:${word}`, 1.0);
    }
    const lowered = text.toLowerCase();
    for (let i = 0; i + 3 <= lowered.length; i++) {
      add(`c:${lowered.slice(i, i + 3)}`, 0.5);
    }
    let norm = Math.sqrt(vec.reduce((acc, x) => acc + x * x, 0));
    if (norm === 0) {
      // text with no features at all: deterministic unit basis vector
      vec[fnv1a(text) % this.dim] = 1;
      norm = 1;
    }
    return vec.map((x) => x / norm);
  }
}

/**
 * Cloze-style question former. The prompt layout is
 * "Answer: <answer>, <rationale> Context: ..."; the rationale with the
 * answer blanked by a wh-word becomes the question.
 */
class ClozeTemplateGenerator implements GenerateModel {
  constructor(public id: string) {}

  generate(prompt: string): string {
    const { answer, rationale } = parsePrompt(prompt);
    const wh = whWordFor(answer);
    if (answer && rationale.includes(answer)) {
      const cloze = rationale.replace(answer, wh).replace(/[.!?]+\s*$/, '');
      return `${cloze}?`;
    }
    if (answer) {
      return `${capitalize(wh)} is ${answer}?`;
    }
    return `What does this describe: ${rationale.replace(/[.!?]+\s*$/, '')}?`;
  }
}

function parsePrompt(prompt: string): { answer: string; rationale: string } {
  const match = /^Answer:\s*(.*?),\s*(.*?)(?:\s+Context:.*)?$/s.exec(prompt);
  if (!match) {
    return { answer: '', rationale: prompt };
  }
  return { answer: match[1], rationale: match[2] };
}

function whWordFor(answer: string): string {
  if (/^\d[\d,.]*$/.test(answer.trim())) return 'how many';
  if (/^[A-Z]/.test(answer.trim())) return 'who';
  return 'what';
}

function capitalize(text: string): string {
  return text.charAt(0).toUpperCase() + text.slice(1);
}

/**
 * Picks the context sentence sharing the most informative tokens with
 * the question, then returns its longest run of tokens that the question
 * does not already mention.
 */
class OverlapSpanQa implements QaModel {
  constructor(public id: string) {}

  answer(question: string, context: string): string {
    const queryTokens = new Set(tokens(question).filter((t) => !STOPWORDS.has(t)));
    const sentences = context.split(/(?<=[.!?])\s+/).filter((s) => s.trim().length > 0);
    let best = sentences[0] ?? context;
    let bestScore = -1;
    for (const sentence of sentences) {
      const score = tokens(sentence).filter((t) => queryTokens.has(t)).length;
      if (score > bestScore) {
        bestScore = score;
        best = sentence;
      }
    }
    const words = best.split(/\s+/).filter((w) => w.length > 0);
    let runStart = 0;
    let runLength = 0;
    let bestStart = 0;
    let bestLength = 0;
    for (let i = 0; i <= words.length; i++) {
      const fresh =
        i < words.length &&
        !queryTokens.has(stripPunct(words[i]).toLowerCase()) &&
        !STOPWORDS.has(stripPunct(words[i]).toLowerCase());
      if (fresh) {
        if (runLength === 0) runStart = i;
        runLength += 1;
        if (runLength > bestLength) {
          bestLength = runLength;
          bestStart = runStart;
        }
      } else {
        runLength = 0;
      }
    }
    if (bestLength === 0) {
      return stripPunct(words[0] ?? best);
    }
    const span = words.slice(bestStart, bestStart + Math.min(bestLength, 5)).join(' ');
    return stripPunct(span);
  }
}

/**
 * Capitalized runs (multi-word names), numbers, and the final content
 * word; every span is an exact substring of the input sentence.
 */
class UnitSpanExtractor implements ExtractModel {
  constructor(public id: string) {}

  extract(sentence: string): string[] {
    const spans: string[] = [];
    for (const match of sentence.matchAll(/(?:[A-Z][\p{L}]*)(?:\s+[A-Z][\p{L}]*)*/gu)) {
      if (match[0].length > 0) spans.push(match[0]);
    }
    for (const match of sentence.matchAll(/\d[\d,.]*\d|\d/g)) {
      spans.push(match[0]);
    }
    const words = sentence.split(/\s+/).filter((w) => stripPunct(w).length > 0);
    if (words.length > 0) {
      const last = stripPunct(words[words.length - 1]);
      if (last && sentence.includes(last)) spans.push(last);
    }
    const seen = new Set<string>();
    return spans.filter((span) => {
      if (seen.has(span) || !sentence.includes(span)) return false;
      seen.add(span);
      return true;
    });
  }
}

export function makeEmbedModel(id: string): EmbedModel {
  const match = /^hash-ngram-(\d+)$/.exec(id);
  if (match) return new HashNgramEmbedder(id, Number(match[1]));
  throw new Error(`embed: unknown model identifier '${id}'`);
}

export function makeGenerateModel(id: string): GenerateModel {
  if (id === 'cloze-template-1') return new ClozeTemplateGenerator(id);
  throw new Error(`generate: unknown model identifier '${id}'`);
}

export function makeQaModel(id: string): QaModel {
  if (id === 'overlap-span-1') return new OverlapSpanQa(id);
  throw new Error(`qa: unknown model identifier '${id}'`);
}

export function makeExtractModel(id: string): ExtractModel {
  if (id === 'unit-span-1') return new UnitSpanExtractor(id);
  throw new Error(`extract: unknown model identifier '${id}'`);
}

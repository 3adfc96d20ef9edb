/**
 * Deterministic demo corpus generator (testing aid).
 *
 * Emits template sentences over a synthetic vocabulary with strong
 * collocation structure: every noun owns a preferred verb, so a context
 * model has real signal to learn.  With --labels, each paragraph draws its
 * nouns from a label-specific slice and lines become "label<TAB>text".
 */

import { StreamCursor } from "./rng";

const CONSONANTS = "btkdmnprsvl";
const VOWELS = "aeiou";

function word(cursor: StreamCursor, syllables: number): string {
  let out = "";
  for (let s = 0; s < syllables; s++) {
    out += CONSONANTS[cursor.integer(CONSONANTS.length)];
    out += VOWELS[cursor.integer(VOWELS.length)];
  }
  return out;
}

function wordList(seed: number, stream: number, count: number, syllables: number): string[] {
  const cursor = new StreamCursor(seed, stream);
  const seen = new Set<string>();
  const out: string[] = [];
  while (out.length < count) {
    const w = word(cursor, syllables);
    if (!seen.has(w)) {
      seen.add(w);
      out.push(w);
    }
  }
  return out;
}

export interface CorpusOptions {
  paragraphs: number;
  seed: number;
  labels?: number;
  nouns?: number;
  verbs?: number;
}

export function makeCorpus(opts: CorpusOptions): string {
  const nNouns = opts.nouns ?? 240;
  const nVerbs = opts.verbs ?? 240;
  const nouns = wordList(opts.seed, 10, nNouns, 3);
  const verbs = wordList(opts.seed, 11, nVerbs, 2).map((w) => w + "s");
  const adjectives = wordList(opts.seed, 12, 40, 2);
  const adverbs = wordList(opts.seed, 13, 20, 2).map((w) => w + "ly");
  const draw = new StreamCursor(opts.seed, 14);
  const labels = opts.labels ?? 0;
  const lines: string[] = [];

  const pickNoun = (label: number): number => {
    // squared uniform skews toward low indices (frequent nouns)
    const u = draw.uniform();
    if (labels > 0) {
      const width = Math.floor(nNouns / labels);
      return label * width + Math.min(Math.floor(u * u * width), width - 1);
    }
    return Math.min(Math.floor(u * u * nNouns), nNouns - 1);
  };

  for (let p = 0; p < opts.paragraphs; p++) {
    const label = labels > 0 ? draw.integer(labels) : 0;
    const nSentences = 1 + draw.integer(3);
    const sentence: string[] = [];
    for (let s = 0; s < nSentences; s++) {
      const k = pickNoun(label);
      // collocate verb 90% of the time
      const verb =
        draw.uniform() < 0.9 ? verbs[k % nVerbs] : verbs[draw.integer(nVerbs)];
      if (draw.uniform() < 0.7) {
        const m = pickNoun(label);
        sentence.push(`the ${nouns[k]} ${verb} the ${nouns[m]} .`);
      } else {
        const adj = adjectives[draw.integer(adjectives.length)];
        const adv = adverbs[draw.integer(adverbs.length)];
        sentence.push(`a ${adj} ${nouns[k]} ${verb} ${adv} .`);
      }
    }
    const text = sentence.join(" ");
    lines.push(labels > 0 ? `${label}\t${text}` : text);
  }
  return lines.join("\n") + "\n";
}

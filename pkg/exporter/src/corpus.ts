/**
 * Corpus handling: whitespace tokenization, vocabulary construction, and
 * encoding paragraphs into fixed-length id sequences.
 *
 * The vocabulary reserves five special tokens at fixed ids; they are padded
 * or inserted structurally and are never eligible for masking.
 */

export const SPECIALS = ["[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"] as const;
export const PAD = 0;
export const CLS = 1;
export const SEP = 2;
export const MASK = 3;
export const UNK = 4;

export interface Vocab {
  texts: string[];
  frequencies: number[];
  index: Map<string, number>;
}

export function tokenize(line: string): string[] {
  return line.trim().split(/\s+/).filter((t) => t.length > 0);
}

/** Corpus-frequency vocabulary: specials first, then tokens by count desc, text asc. */
export function buildVocab(paragraphs: string[]): Vocab {
  const counts = new Map<string, number>();
  for (const para of paragraphs) {
    for (const tok of tokenize(para)) {
      counts.set(tok, (counts.get(tok) ?? 0) + 1);
    }
  }
  const ordered = [...counts.entries()].sort(
    (a, b) => b[1] - a[1] || (a[0] < b[0] ? -1 : 1)
  );
  const texts = [...SPECIALS, ...ordered.map(([t]) => t)];
  const frequencies = [
    ...SPECIALS.map(() => 0),
    ...ordered.map(([, c]) => c),
  ];
  const index = new Map(texts.map((t, i) => [t, i]));
  return { texts, frequencies, index };
}

/** [CLS] tokens... [SEP], truncated/padded to nInput. */
export function encode(paragraph: string, vocab: Vocab, nInput: number): number[] {
  const ids = [CLS];
  for (const tok of tokenize(paragraph)) {
    if (ids.length >= nInput - 1) break;
    ids.push(vocab.index.get(tok) ?? UNK);
  }
  ids.push(SEP);
  while (ids.length < nInput) ids.push(PAD);
  return ids;
}

export function isSpecial(id: number): boolean {
  return id < SPECIALS.length;
}

export function readParagraphs(text: string): string[] {
  return text.split("\n").map((l) => l.trim()).filter((l) => l.length > 0);
}

/** Labeled corpora use "label<TAB>text" lines. */
export function readLabeled(text: string): { label: number; text: string }[] {
  const out: { label: number; text: string }[] = [];
  for (const line of text.split("\n")) {
    if (!line.trim()) continue;
    const cut = line.indexOf("\t");
    if (cut < 0) throw new Error(`labeled corpus line missing tab: ${line.slice(0, 40)}`);
    out.push({ label: Number(line.slice(0, cut)), text: line.slice(cut + 1) });
  }
  return out;
}

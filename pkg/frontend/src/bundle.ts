/** Annotation bundle parsing and validation. */

import type { Bundle, BundleDoc, BundleSentence, Condition } from './types.js';

export class BundleError extends Error {}

function fail(path: string, message: string): never {
  throw new BundleError(`${path}: ${message}`);
}

function checkSentence(raw: unknown, path: string): BundleSentence {
  if (typeof raw !== 'object' || raw === null) fail(path, 'sentence must be an object');
  const s = raw as Record<string, unknown>;
  if (typeof s.text !== 'string') fail(path, 'text must be a string');
  if (typeof s.score !== 'number' || !Number.isFinite(s.score)) {
    fail(path, 'score must be a finite number');
  }
  if (typeof s.salient !== 'boolean') fail(path, 'salient must be a boolean');
  return { text: s.text, score: s.score, salient: s.salient };
}

function checkDoc(raw: unknown, path: string): BundleDoc {
  if (typeof raw !== 'object' || raw === null) fail(path, 'doc must be an object');
  const d = raw as Record<string, unknown>;
  if (typeof d.id !== 'number' || !Number.isInteger(d.id)) fail(path, 'id must be an integer');
  if (!Array.isArray(d.label_options) || d.label_options.length < 2) {
    fail(path, 'label_options must list at least two options');
  }
  if (!d.label_options.every((o) => typeof o === 'string')) {
    fail(path, 'label_options must be strings');
  }
  if (!Array.isArray(d.sentences) || d.sentences.length === 0) {
    fail(path, 'sentences must be a non-empty array');
  }
  const doc: BundleDoc = {
    id: d.id,
    label_options: d.label_options as string[],
    sentences: d.sentences.map((s, i) => checkSentence(s, `${path}.sentences[${i}]`)),
  };
  if (d.truth !== undefined) {
    if (
      typeof d.truth !== 'number' ||
      !Number.isInteger(d.truth) ||
      d.truth < 0 ||
      d.truth >= doc.label_options.length
    ) {
      fail(path, 'truth must index into label_options');
    }
    doc.truth = d.truth;
  }
  return doc;
}

export function parseBundle(raw: unknown): Bundle {
  if (typeof raw === 'string') {
    try {
      raw = JSON.parse(raw);
    } catch (exc) {
      throw new BundleError(`bundle is not valid JSON: ${exc}`);
    }
  }
  if (typeof raw !== 'object' || raw === null) fail('bundle', 'must be an object');
  const b = raw as Record<string, unknown>;
  if (b.version !== 1) fail('bundle.version', `unsupported version ${b.version}`);
  if (b.condition !== 'highlight' && b.condition !== 'plain') {
    fail('bundle.condition', `must be "highlight" or "plain", got ${JSON.stringify(b.condition)}`);
  }
  if (!Array.isArray(b.docs)) fail('bundle.docs', 'must be an array');
  const docs = b.docs.map((d, i) => checkDoc(d, `bundle.docs[${i}]`));
  const ids = new Set(docs.map((d) => d.id));
  if (ids.size !== docs.length) fail('bundle.docs', 'doc ids must be unique');
  return { version: 1, condition: b.condition as Condition, docs };
}

/** Ground truth by doc id (only docs that carry one). */
export function truthById(bundle: Bundle): Map<number, number> {
  const out = new Map<number, number>();
  for (const doc of bundle.docs) {
    if (doc.truth !== undefined) out.set(doc.id, doc.truth);
  }
  return out;
}

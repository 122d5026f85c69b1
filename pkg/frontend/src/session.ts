/**
 * One participant's pass through a bundle: documents are shown one at a
 * time in a per-session random order; timing for a document starts when
 * its render completes and ends at label submission. Duplicate
 * submissions for the same document are ignored. A session belongs to
 * exactly one condition (between-subject design).
 */

import type { Bundle, BundleDoc, Session, SessionRecord } from './types.js';

export interface SessionOptions {
  /** injectable clock (ms); defaults to performance.now/Date.now */
  now?: () => number;
  /** injectable uniform [0,1) source for the presentation order */
  random?: () => number;
}

function defaultNow(): number {
  return typeof performance !== 'undefined' ? performance.now() : Date.now();
}

export function shuffledOrder(n: number, random: () => number): number[] {
  const order = Array.from({ length: n }, (_, i) => i);
  for (let i = n - 1; i > 0; i--) {
    const j = Math.floor(random() * (i + 1));
    [order[i], order[j]] = [order[j]!, order[i]!];
  }
  return order;
}

export class StudySession {
  readonly participant: string;
  readonly bundle: Bundle;
  readonly order: number[];
  private readonly now: () => number;
  private position = 0;
  private renderedAt: number | null = null;
  private readonly records: SessionRecord[] = [];

  constructor(bundle: Bundle, participant: string, options: SessionOptions = {}) {
    this.bundle = bundle;
    this.participant = participant;
    this.now = options.now ?? defaultNow;
    this.order = shuffledOrder(bundle.docs.length, options.random ?? Math.random);
  }

  get complete(): boolean {
    return this.position >= this.order.length;
  }

  get progress(): { done: number; total: number } {
    return { done: this.position, total: this.order.length };
  }

  currentDoc(): BundleDoc | null {
    if (this.complete) return null;
    return this.bundle.docs[this.order[this.position]!]!;
  }

  /** Call when the current document finished rendering; starts its clock. */
  markRendered(): void {
    if (!this.complete) this.renderedAt = this.now();
  }

  /**
   * Record the label for the current document and advance. Returns false
   * (and records nothing) when the session is complete, the document was
   * never rendered, or the label is out of range.
   */
  submit(labelIndex: number): boolean {
    const doc = this.currentDoc();
    if (doc === null || this.renderedAt === null) return false;
    if (!Number.isInteger(labelIndex) || labelIndex < 0 || labelIndex >= doc.label_options.length) {
      return false;
    }
    const elapsed = Math.max(1, Math.round(this.now() - this.renderedAt));
    this.records.push({ id: doc.id, label: labelIndex, ms: elapsed });
    this.renderedAt = null; // a second submit for this doc is ignored
    this.position++;
    return true;
  }

  toSession(): Session {
    return {
      participant: this.participant,
      condition: this.bundle.condition,
      records: [...this.records],
    };
  }

  exportJSON(): string {
    return JSON.stringify(this.toSession(), null, 1);
  }
}

export function parseSession(raw: unknown): Session {
  if (typeof raw === 'string') raw = JSON.parse(raw);
  const s = raw as Record<string, unknown>;
  if (typeof s.participant !== 'string') throw new Error('session.participant must be a string');
  if (s.condition !== 'highlight' && s.condition !== 'plain') {
    throw new Error('session.condition must be "highlight" or "plain"');
  }
  if (!Array.isArray(s.records)) throw new Error('session.records must be an array');
  for (const r of s.records as Record<string, unknown>[]) {
    if (typeof r.id !== 'number' || typeof r.label !== 'number' || typeof r.ms !== 'number' || r.ms <= 0) {
      throw new Error('session records need numeric id, label and positive ms');
    }
  }
  return s as unknown as Session;
}

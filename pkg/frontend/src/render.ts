/**
 * Pure HTML generation for a document screen. Sentences flagged salient
 * get the "salient" class only in the highlight condition; ground truth is
 * never rendered. Output is injected via innerHTML, so all text is
 * escaped here.
 */

import type { BundleDoc, Condition } from './types.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

export function renderDocumentHTML(doc: BundleDoc, condition: Condition): string {
  const spans = doc.sentences.map((s) => {
    const cls = condition === 'highlight' && s.salient ? 'sentence salient' : 'sentence';
    return `<span class="${cls}">${escapeHtml(s.text)}</span>`;
  });
  return `<div class="document" data-doc-id="${doc.id}">${spans.join(' ')}</div>`;
}

export function renderChoicesHTML(doc: BundleDoc): string {
  const buttons = doc.label_options.map(
    (opt, i) =>
      `<button type="button" class="choice" data-label-index="${i}">${escapeHtml(opt)}</button>`,
  );
  return `<div class="choices">${buttons.join('')}</div>`;
}

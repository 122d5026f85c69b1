/** DOM wiring: study runner and the session-analysis panel. */

import { parseBundle, truthById, BundleError } from './bundle.js';
import { renderChoicesHTML, renderDocumentHTML } from './render.js';
import { parseSession, StudySession } from './session.js';
import { summarize, summaryCSV, SummaryError } from './summary.js';
import type { Bundle, Session } from './types.js';

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let bundle: Bundle | null = null;
let session: StudySession | null = null;
const loadedSessions: Session[] = [];

function setStatus(message: string, isError = false): void {
  const status = el<HTMLElement>('status');
  status.textContent = message;
  status.className = isError ? 'error' : '';
}

function download(filename: string, text: string, mime = 'application/json'): void {
  const blob = new Blob([text], { type: mime });
  const a = document.createElement('a');
  a.href = URL.createObjectURL(blob);
  a.download = filename;
  a.click();
  URL.revokeObjectURL(a.href);
}

function showCurrentDoc(): void {
  if (!session || !bundle) return;
  const screen = el<HTMLElement>('doc-screen');
  const doc = session.currentDoc();
  if (doc === null) {
    screen.innerHTML = '<p>All documents labeled. Thank you!</p>';
    el<HTMLButtonElement>('export-session').disabled = false;
    return;
  }
  const { done, total } = session.progress;
  screen.innerHTML =
    `<p class="progress">Document ${done + 1} of ${total} &mdash; ` +
    `which category best describes this text?</p>` +
    renderDocumentHTML(doc, bundle.condition) +
    renderChoicesHTML(doc);
  for (const btn of screen.querySelectorAll<HTMLButtonElement>('button.choice')) {
    btn.addEventListener('click', () => {
      if (session && session.submit(Number(btn.dataset.labelIndex))) showCurrentDoc();
    });
  }
  // timing starts once the document is in the DOM
  requestAnimationFrame(() => session && session.markRendered());
}

function startStudy(): void {
  if (!bundle) {
    setStatus('load a bundle file first', true);
    return;
  }
  const participant = el<HTMLInputElement>('participant').value.trim();
  if (!participant) {
    setStatus('enter a participant id', true);
    return;
  }
  session = new StudySession(bundle, participant);
  el<HTMLButtonElement>('export-session').disabled = true;
  setStatus(`running: condition "${bundle.condition}", ${bundle.docs.length} documents`);
  showCurrentDoc();
}

async function onBundleChosen(input: HTMLInputElement): Promise<void> {
  const file = input.files?.[0];
  if (!file) return;
  try {
    bundle = parseBundle(await file.text());
    setStatus(`bundle loaded: ${bundle.docs.length} docs, condition "${bundle.condition}"`);
  } catch (exc) {
    bundle = null;
    setStatus(exc instanceof BundleError ? exc.message : `failed to load bundle: ${exc}`, true);
  }
}

async function onSessionsChosen(input: HTMLInputElement): Promise<void> {
  if (!input.files) return;
  for (const file of input.files) {
    try {
      loadedSessions.push(parseSession(await file.text()));
    } catch (exc) {
      setStatus(`failed to load session ${file.name}: ${exc}`, true);
      return;
    }
  }
  setStatus(`${loadedSessions.length} session(s) loaded for analysis`);
}

function analyze(): void {
  if (!bundle) {
    setStatus('load the bundle first (ground truth lives there)', true);
    return;
  }
  try {
    const summary = summarize(loadedSessions, truthById(bundle));
    el<HTMLElement>('summary').textContent = JSON.stringify(summary, null, 1);
    download('study_summary.csv', summaryCSV(summary), 'text/csv');
  } catch (exc) {
    setStatus(exc instanceof SummaryError ? exc.message : `analysis failed: ${exc}`, true);
  }
}

export function init(): void {
  el<HTMLInputElement>('bundle-file').addEventListener('change', (e) =>
    onBundleChosen(e.target as HTMLInputElement),
  );
  el<HTMLButtonElement>('start').addEventListener('click', startStudy);
  el<HTMLButtonElement>('export-session').addEventListener('click', () => {
    if (session) download(`session_${session.participant}.json`, session.exportJSON());
  });
  el<HTMLInputElement>('session-files').addEventListener('change', (e) =>
    onSessionsChosen(e.target as HTMLInputElement),
  );
  el<HTMLButtonElement>('analyze').addEventListener('click', analyze);
}

if (typeof document !== 'undefined' && document.getElementById('doc-screen')) {
  init();
}

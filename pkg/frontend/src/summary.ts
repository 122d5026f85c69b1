/**
 * Session cleaning and condition-level statistics.
 *
 * Cleaning drops a session when any of:
 *   - accuracy below 0.6,
 *   - total time below 90 seconds,
 *   - more than 420 seconds spent on a single document.
 *
 * The Mann-Whitney results come from the same algorithm as the training
 * engine (see stats.ts) applied to per-session total seconds and
 * accuracies.
 */

import { mannWhitneyU, mean } from './stats.js';
import type { ConditionStats, Session, StudySummary } from './types.js';

export const MIN_ACCURACY = 0.6;
export const MIN_TOTAL_SECONDS = 90;
export const MAX_SINGLE_DOC_SECONDS = 420;

export class SummaryError extends Error {}

export function sessionAccuracy(session: Session, truth: Map<number, number>): number {
  if (session.records.length === 0) return 0;
  let hits = 0;
  let scored = 0;
  for (const rec of session.records) {
    const t = truth.get(rec.id);
    if (t === undefined) continue;
    scored++;
    if (rec.label === t) hits++;
  }
  return scored === 0 ? 0 : hits / scored;
}

export function sessionTotalSeconds(session: Session): number {
  return session.records.reduce((s, r) => s + r.ms, 0) / 1000;
}

export function passesCleaning(session: Session, truth: Map<number, number>): boolean {
  if (sessionAccuracy(session, truth) < MIN_ACCURACY) return false;
  if (sessionTotalSeconds(session) < MIN_TOTAL_SECONDS) return false;
  if (session.records.some((r) => r.ms / 1000 > MAX_SINGLE_DOC_SECONDS)) return false;
  return true;
}

export function cleanSessions(sessions: Session[], truth: Map<number, number>): Session[] {
  return sessions.filter((s) => passesCleaning(s, truth));
}

function conditionStats(sessions: Session[], truth: Map<number, number>): ConditionStats {
  return {
    n: sessions.length,
    meanTotalSeconds: mean(sessions.map(sessionTotalSeconds)),
    meanAccuracy: mean(sessions.map((s) => sessionAccuracy(s, truth))),
  };
}

export function summarize(sessions: Session[], truth: Map<number, number>): StudySummary {
  const kept = cleanSessions(sessions, truth);
  const highlight = kept.filter((s) => s.condition === 'highlight');
  const plain = kept.filter((s) => s.condition === 'plain');
  if (highlight.length === 0 || plain.length === 0) {
    throw new SummaryError(
      `need at least one session per condition after cleaning ` +
        `(highlight: ${highlight.length}, plain: ${plain.length})`,
    );
  }
  const [timeU, timeP] = mannWhitneyU(
    highlight.map(sessionTotalSeconds),
    plain.map(sessionTotalSeconds),
  );
  const [accuracyU, accuracyP] = mannWhitneyU(
    highlight.map((s) => sessionAccuracy(s, truth)),
    plain.map((s) => sessionAccuracy(s, truth)),
  );
  return {
    highlight: conditionStats(highlight, truth),
    plain: conditionStats(plain, truth),
    timeU,
    timeP,
    accuracyU,
    accuracyP,
  };
}

export function summaryCSV(summary: StudySummary): string {
  const lines = [
    'condition,n,mean_total_seconds,mean_accuracy',
    `highlight,${summary.highlight.n},${summary.highlight.meanTotalSeconds},${summary.highlight.meanAccuracy}`,
    `plain,${summary.plain.n},${summary.plain.meanTotalSeconds},${summary.plain.meanAccuracy}`,
    'measure,u_statistic,p_two_sided',
    `total_time,${summary.timeU},${summary.timeP}`,
    `accuracy,${summary.accuracyU},${summary.accuracyP}`,
  ];
  return lines.join('\n') + '\n';
}

/** Shared data shapes for the annotation study. */

export type Condition = 'highlight' | 'plain';

export interface BundleSentence {
  text: string;
  score: number;
  salient: boolean;
}

export interface BundleDoc {
  id: number;
  label_options: string[];
  /** index into label_options; present when the exporter had ground truth */
  truth?: number;
  sentences: BundleSentence[];
}

export interface Bundle {
  version: number;
  condition: Condition;
  docs: BundleDoc[];
}

export interface SessionRecord {
  /** document id */
  id: number;
  /** chosen index into label_options */
  label: number;
  /** time from render completion to submission */
  ms: number;
}

export interface Session {
  participant: string;
  condition: Condition;
  records: SessionRecord[];
}

export interface ConditionStats {
  n: number;
  meanTotalSeconds: number;
  meanAccuracy: number;
}

export interface StudySummary {
  highlight: ConditionStats;
  plain: ConditionStats;
  /** Mann-Whitney U (highlight group) and two-sided p over per-session total seconds */
  timeU: number;
  timeP: number;
  /** same over per-session accuracies */
  accuracyU: number;
  accuracyP: number;
}

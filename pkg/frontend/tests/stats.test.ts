import { readFileSync } from 'node:fs';
import { describe, expect, it } from 'vitest';

import { erfc, mannWhitneyU, mean } from '../src/stats.js';

const mwCases = JSON.parse(
  readFileSync(new URL('./fixtures/mann_whitney_cases.json', import.meta.url), 'utf-8'),
) as { note: string; a: number[]; b: number[]; u: number; p: number }[];

const erfcCases = JSON.parse(
  readFileSync(new URL('./fixtures/erfc_cases.json', import.meta.url), 'utf-8'),
) as { x: number; erfc: number }[];

describe('erfc', () => {
  it('matches the reference C library values', () => {
    for (const { x, erfc: expected } of erfcCases) {
      const got = erfc(x);
      const tol = Math.max(1e-13 * Math.abs(expected), 5e-16);
      expect(Math.abs(got - expected), `erfc(${x})`).toBeLessThan(tol + 1e-300);
    }
  });

  it('satisfies the reflection identity', () => {
    for (const x of [0.1, 0.9, 2.3, 5.5]) {
      expect(erfc(-x) + erfc(x)).toBeCloseTo(2.0, 14);
    }
  });
});

describe('mannWhitneyU', () => {
  it('matches the engine implementation to 1e-9 on fixture cases', () => {
    for (const c of mwCases) {
      const [u, p] = mannWhitneyU(c.a, c.b);
      expect(u, c.note).toBe(c.u);
      expect(Math.abs(p - c.p), `${c.note}: p=${p} vs ${c.p}`).toBeLessThan(1e-9);
    }
  });

  it('is symmetric in the group order', () => {
    const a = [1.2, 3.4, 2.2, 5.0, 4.4, 0.1, 2.8];
    const b = [2.0, 1.1, 6.3, 3.3, 2.5, 4.0];
    expect(mannWhitneyU(a, b)[1]).toBe(mannWhitneyU(b, a)[1]);
  });

  it('reports no effect for identical groups', () => {
    const [, p] = mannWhitneyU([1, 2, 3], [1, 2, 3]);
    expect(p).toBeGreaterThanOrEqual(0.99);
  });

  it('rejects empty groups', () => {
    expect(() => mannWhitneyU([], [1])).toThrow();
  });
});

describe('mean', () => {
  it('averages', () => {
    expect(mean([1, 2, 3, 4])).toBe(2.5);
  });
  it('rejects empty input', () => {
    expect(() => mean([])).toThrow();
  });
});

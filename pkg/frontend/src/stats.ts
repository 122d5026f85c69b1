/**
 * Rank statistics matching the training engine's implementation exactly:
 * exact permutation enumeration when the pooled sample has at most 10
 * observations, otherwise the tie-corrected normal approximation with a
 * 0.5 continuity correction,
 *
 *   p = erfc(max(0, |U - mu| - 0.5) / (sigma * sqrt(2)))
 *
 * erfc uses W. J. Cody's rational Chebyshev approximation (SPECFUN
 * "calerf"), accurate to ~1e-16 relative, so p agrees with an IEEE-double
 * reference implementation far below the 1e-9 contract.
 */

const ERF_A = [
  3.1611237438705656, 113.864154151050156, 377.485237685302021,
  3209.37758913846947, 0.185777706184603153,
];
const ERF_B = [
  23.6012909523441209, 244.024637934444173, 1282.61652607737228,
  2844.23683343917062,
];
const ERF_C = [
  0.564188496988670089, 8.88314979438837594, 66.1191906371416295,
  298.635138197400131, 881.95222124176909, 1712.04761263407058,
  2051.07837782607147, 1230.33935479799725, 2.15311535474403846e-8,
];
const ERF_D = [
  15.7449261107098347, 117.693950891312499, 537.181101862009858,
  1621.38957456669019, 3290.79923573345963, 4362.61909014324716,
  3439.36767414372164, 1230.33935480374942,
];
const ERF_P = [
  0.305326634961232344, 0.360344899949804439, 0.125781726111229246,
  0.0160837851487422766, 6.58749161529837803e-4, 0.0163153871373020978,
];
const ERF_Q = [
  2.56852019228982242, 1.87295284992346047, 0.527905102951428412,
  0.0605183413124413191, 2.33520497626869185e-3,
];
const INV_SQRT_PI = 0.5641895835477562869;

/** exp(-x*x) computed with the split trick to avoid cancellation. */
function expNegSquare(ax: number): number {
  const ysq = Math.trunc(ax * 16) / 16;
  const del = (ax - ysq) * (ax + ysq);
  return Math.exp(-ysq * ysq) * Math.exp(-del);
}

export function erfc(x: number): number {
  const ax = Math.abs(x);
  let result: number;
  if (ax <= 0.46875) {
    const z = ax * ax;
    let xnum = ERF_A[4]! * z;
    let xden = z;
    for (let i = 0; i < 3; i++) {
      xnum = (xnum + ERF_A[i]!) * z;
      xden = (xden + ERF_B[i]!) * z;
    }
    const erf = (x * (xnum + ERF_A[3]!)) / (xden + ERF_B[3]!);
    return 1.0 - erf;
  }
  if (ax <= 4.0) {
    let xnum = ERF_C[8]! * ax;
    let xden = ax;
    for (let i = 0; i < 7; i++) {
      xnum = (xnum + ERF_C[i]!) * ax;
      xden = (xden + ERF_D[i]!) * ax;
    }
    result = ((xnum + ERF_C[7]!) / (xden + ERF_D[7]!)) * expNegSquare(ax);
  } else if (ax >= 26.543) {
    result = 0.0;
  } else {
    const z = 1.0 / (ax * ax);
    let xnum = ERF_P[5]! * z;
    let xden = z;
    for (let i = 0; i < 4; i++) {
      xnum = (xnum + ERF_P[i]!) * z;
      xden = (xden + ERF_Q[i]!) * z;
    }
    let r = (z * (xnum + ERF_P[4]!)) / (xden + ERF_Q[4]!);
    r = (INV_SQRT_PI - r) / ax;
    result = r * expNegSquare(ax);
  }
  return x < 0 ? 2.0 - result : result;
}

export function mean(values: number[]): number {
  if (values.length === 0) throw new Error('mean of empty list');
  return values.reduce((s, v) => s + v, 0) / values.length;
}

/** wins count 1, ties 0.5, for the first group. */
function uStatistic(a: number[], b: number[]): number {
  let u = 0;
  for (const x of a) {
    for (const y of b) {
      if (x > y) u += 1;
      else if (x === y) u += 0.5;
    }
  }
  return u;
}

/** 1-based average ranks and tie group sizes for the pooled sample. */
function averageRanks(values: number[]): { ranks: number[]; tieSizes: number[] } {
  const order = values.map((_, i) => i).sort((i, j) => values[i]! - values[j]!);
  const ranks = new Array<number>(values.length);
  const tieSizes: number[] = [];
  let i = 0;
  while (i < values.length) {
    let j = i;
    while (j + 1 < values.length && values[order[j + 1]!] === values[order[i]!]) j++;
    const avg = (i + j + 2) / 2;
    for (let k = i; k <= j; k++) ranks[order[k]!] = avg;
    tieSizes.push(j - i + 1);
    i = j + 1;
  }
  return { ranks, tieSizes };
}

function* combinations(n: number, k: number): Generator<number[]> {
  const idx = Array.from({ length: k }, (_, i) => i);
  while (true) {
    yield [...idx];
    let i = k - 1;
    while (i >= 0 && idx[i]! === i + n - k) i--;
    if (i < 0) return;
    idx[i]!++;
    for (let j = i + 1; j < k; j++) idx[j] = idx[j - 1]! + 1;
  }
}

export const EXACT_LIMIT = 10;

/**
 * Two-sided Mann-Whitney U test; returns [U of groupA, p].
 * Mirrors the engine: exact when pooled size <= EXACT_LIMIT, else the
 * tie-corrected normal approximation with continuity correction.
 */
export function mannWhitneyU(groupA: number[], groupB: number[]): [number, number] {
  if (groupA.length === 0 || groupB.length === 0) {
    throw new Error('both groups must be non-empty');
  }
  const nA = groupA.length;
  const nB = groupB.length;
  const n = nA + nB;
  const uObs = uStatistic(groupA, groupB);

  if (n <= EXACT_LIMIT) {
    const pooled = [...groupA, ...groupB];
    const devObs = Math.abs(Math.round(2 * uObs) - nA * nB);
    let hits = 0;
    let total = 0;
    for (const idx of combinations(n, nA)) {
      const inA = new Array<boolean>(n).fill(false);
      for (const i of idx) inA[i] = true;
      const a: number[] = [];
      const b: number[] = [];
      for (let i = 0; i < n; i++) (inA[i] ? a : b).push(pooled[i]!);
      const u = uStatistic(a, b);
      if (Math.abs(Math.round(2 * u) - nA * nB) >= devObs) hits++;
      total++;
    }
    return [uObs, hits / total];
  }

  const pooled = [...groupA, ...groupB];
  const { tieSizes } = averageRanks(pooled);
  const mu = (nA * nB) / 2;
  let tieTerm = 0;
  for (const t of tieSizes) tieTerm += t * t * t - t;
  const sigma2 = ((nA * nB) / 12) * (n + 1 - tieTerm / (n * (n - 1)));
  if (sigma2 <= 0) return [uObs, 1.0];
  const z = Math.max(0, (Math.abs(uObs - mu) - 0.5) / Math.sqrt(sigma2));
  return [uObs, Math.min(1.0, erfc(z / Math.SQRT2))];
}

/** Quantile-based summaries for boxplots plus a rule-of-thumb KDE. */

export function quantile(sorted: number[], q: number): number {
  if (sorted.length === 0) {
    throw new Error("quantile of empty sample");
  }
  const pos = (sorted.length - 1) * q;
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  if (lo === hi) return sorted[lo];
  return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
}

export function median(values: number[]): number {
  return quantile([...values].sort((a, b) => a - b), 0.5);
}

export interface BoxStats {
  q1: number;
  median: number;
  q3: number;
  whiskerLow: number;
  whiskerHigh: number;
}

/** Five-number boxplot summary with 1.5 IQR whiskers clipped to the data. */
export function boxStats(values: number[]): BoxStats {
  const sorted = [...values].sort((a, b) => a - b);
  const q1 = quantile(sorted, 0.25);
  const med = quantile(sorted, 0.5);
  const q3 = quantile(sorted, 0.75);
  const iqr = q3 - q1;
  const lowFence = q1 - 1.5 * iqr;
  const highFence = q3 + 1.5 * iqr;
  let whiskerLow = sorted[0];
  let whiskerHigh = sorted[sorted.length - 1];
  for (const v of sorted) {
    if (v >= lowFence) {
      whiskerLow = v;
      break;
    }
  }
  for (let i = sorted.length - 1; i >= 0; i--) {
    if (sorted[i] <= highFence) {
      whiskerHigh = sorted[i];
      break;
    }
  }
  return { q1, median: med, q3, whiskerLow, whiskerHigh };
}

/** Gaussian KDE on a uniform grid; Silverman's rule-of-thumb bandwidth. */
export function kernelDensity(values: number[], points = 120): { x: number[]; y: number[] } {
  const n = values.length;
  if (n < 2) {
    throw new Error("kernel density needs at least two samples");
  }
  const mean = values.reduce((a, b) => a + b, 0) / n;
  const sd = Math.sqrt(values.reduce((a, b) => a + (b - mean) ** 2, 0) / (n - 1));
  const sorted = [...values].sort((a, b) => a - b);
  const iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  const spread = Math.min(sd, iqr / 1.349) || sd || 1.0;
  const bandwidth = 0.9 * spread * Math.pow(n, -0.2);
  const lo = sorted[0] - 3 * bandwidth;
  const hi = sorted[n - 1] + 3 * bandwidth;
  const x: number[] = [];
  const y: number[] = [];
  const norm = 1 / (n * bandwidth * Math.sqrt(2 * Math.PI));
  for (let i = 0; i < points; i++) {
    const xi = lo + ((hi - lo) * i) / (points - 1);
    let value = 0;
    for (const v of values) {
      const z = (xi - v) / bandwidth;
      value += Math.exp(-0.5 * z * z);
    }
    x.push(xi);
    y.push(value * norm);
  }
  return { x, y };
}

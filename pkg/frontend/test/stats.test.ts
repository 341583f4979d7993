import { describe, expect, it } from "vitest";

import { boxStats, kernelDensity, median, quantile } from "../src/stats.js";

describe("quantile", () => {
  it("interpolates linearly", () => {
    expect(quantile([1, 2, 3, 4], 0.5)).toBe(2.5);
    expect(quantile([1, 2, 3, 4, 5], 0.25)).toBe(2);
    expect(quantile([7], 0.9)).toBe(7);
  });

  it("rejects empty samples", () => {
    expect(() => quantile([], 0.5)).toThrow();
  });
});

describe("median", () => {
  it("does not mutate its input", () => {
    const values = [3, 1, 2];
    expect(median(values)).toBe(2);
    expect(values).toEqual([3, 1, 2]);
  });
});

describe("boxStats", () => {
  it("produces the five-number summary with clipped whiskers", () => {
    const values = [1, 2, 3, 4, 5, 6, 7, 8, 9, 100];
    const stats = boxStats(values);
    expect(stats.median).toBeCloseTo(5.5);
    expect(stats.q1).toBeCloseTo(3.25);
    expect(stats.q3).toBeCloseTo(7.75);
    // 100 lies beyond the 1.5 IQR fence, whisker stops at 9
    expect(stats.whiskerHigh).toBe(9);
    expect(stats.whiskerLow).toBe(1);
  });
});

describe("kernelDensity", () => {
  it("integrates to one", () => {
    const values = Array.from({ length: 300 }, (_, i) => Math.sin(i * 12.9898) * 43758.5453 % 1);
    const { x, y } = kernelDensity(values);
    let integral = 0;
    for (let i = 1; i < x.length; i++) {
      integral += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    }
    expect(integral).toBeGreaterThan(0.95);
    expect(integral).toBeLessThan(1.05);
  });

  it("needs at least two samples", () => {
    expect(() => kernelDensity([1])).toThrow();
  });
});

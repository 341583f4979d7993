/** Minimal deterministic SVG scene construction (no DOM, no randomness). */

export interface Scale {
  (value: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((value: number) => r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  fn.range = range;
  return fn;
}

export function extent(values: number[], pad = 0.05): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) {
    throw new Error("cannot compute extent of non-finite values");
  }
  const span = hi - lo || Math.abs(hi) || 1;
  return [lo - pad * span, hi + pad * span];
}

const fmt = (value: number) => {
  const rounded = Math.round(value * 1000) / 1000;
  return Object.is(rounded, -0) ? "0" : String(rounded);
};

export function tickValues([lo, hi]: [number, number], count = 5): number[] {
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen = candidates.find((s) => span / s <= count + 1) ?? 10 * step;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / chosen) * chosen; v <= hi + 1e-12; v += chosen) {
    ticks.push(Math.round(v / chosen) * chosen);
  }
  return ticks;
}

export class Panel {
  private parts: string[] = [];

  constructor(
    readonly x: Scale,
    readonly y: Scale,
  ) {}

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  rect(x: number, y: number, w: number, h: number, fill: string, stroke = "none"): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}" stroke="${stroke}"/>`,
    );
  }

  path(xs: number[], ys: number[], stroke: string, width = 1, opacity = 1): void {
    if (xs.length === 0) return;
    const steps = xs.map(
      (x, i) => `${i === 0 ? "M" : "L"}${fmt(this.x(x))} ${fmt(this.y(ys[i]))}`,
    );
    this.parts.push(
      `<path d="${steps.join(" ")}" fill="none" stroke="${stroke}" stroke-width="${width}" stroke-opacity="${opacity}"/>`,
    );
  }

  text(x: number, y: number, content: string, size = 11, anchor = "middle"): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" text-anchor="${anchor}" font-family="sans-serif">${content}</text>`,
    );
  }

  axes(xLabel: string, yLabel: string): void {
    const [x0, x1] = this.x.range;
    const [y0, y1] = this.y.range; // y0 is the bottom pixel (larger value)
    this.line(x0, y0, x1, y0, "#000000");
    this.line(x0, y0, x0, y1, "#000000");
    for (const t of tickValues(this.x.domain)) {
      const px = this.x(t);
      this.line(px, y0, px, y0 + 4, "#000000");
      this.text(px, y0 + 16, fmt(t), 9);
    }
    for (const t of tickValues(this.y.domain)) {
      const py = this.y(t);
      this.line(x0 - 4, py, x0, py, "#000000");
      this.text(x0 - 7, py + 3, fmt(t), 9, "end");
    }
    this.text((x0 + x1) / 2, y0 + 30, xLabel, 11);
    this.parts.push(
      `<text x="${fmt(x0 - 34)}" y="${fmt((y0 + y1) / 2)}" font-size="11" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 ${fmt(x0 - 34)} ${fmt((y0 + y1) / 2)})">${yLabel}</text>`,
    );
  }

  render(): string {
    return this.parts.join("\n");
  }
}

export function document(width: number, height: number, body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`,
    ...body,
    "</svg>",
    "",
  ].join("\n");
}

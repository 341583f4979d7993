/** Figure builders: contract-validated rows in, SVG text out. */

import { CONTRACTS, seriesColor } from "./contracts.js";
import { ContractError, Row, groupBy, loadTable } from "./csv.js";
import { boxStats, kernelDensity, median } from "./stats.js";
import { Panel, document as svgDocument, extent, linearScale } from "./svg.js";

import { join } from "node:path";

const PANEL_W = 360;
const PANEL_H = 240;
const MARGIN = { left: 56, right: 16, top: 28, bottom: 42 };

function panelScales(col: number, rowIdx: number, xDomain: [number, number], yDomain: [number, number]) {
  const originX = col * PANEL_W;
  const originY = rowIdx * PANEL_H;
  const x = linearScale(xDomain, [originX + MARGIN.left, originX + PANEL_W - MARGIN.right]);
  const y = linearScale(yDomain, [originY + PANEL_H - MARGIN.bottom, originY + MARGIN.top]);
  return { x, y };
}

function drawBox(panel: Panel, centerPx: number, widthPx: number, values: number[], color: string) {
  const stats = boxStats(values);
  const y = panel.y;
  panel.rect(
    centerPx - widthPx / 2,
    Math.min(y(stats.q3), y(stats.q1)),
    widthPx,
    Math.abs(y(stats.q1) - y(stats.q3)),
    "none",
    color,
  );
  panel.line(centerPx - widthPx / 2, y(stats.median), centerPx + widthPx / 2, y(stats.median), color, 2);
  panel.line(centerPx, y(stats.q3), centerPx, y(stats.whiskerHigh), color);
  panel.line(centerPx, y(stats.q1), centerPx, y(stats.whiskerLow), color);
}

/** Grouped boxplots of a value column against ordered categories. */
function boxPanel(
  rows: Row[],
  categoryKey: string,
  valueKey: string,
  seriesKey: string,
  col: number,
  rowIdx: number,
  title: string,
  xLabel: string,
): string {
  const categories = [...new Set(rows.map((r) => Number(r[categoryKey])))].sort((a, b) => a - b);
  const series = [...new Set(rows.map((r) => String(r[seriesKey])))].sort();
  const values = rows.map((r) => Number(r[valueKey]));
  const { x, y } = panelScales(col, rowIdx, [-0.5, categories.length - 0.5], extent(values));
  const panel = new Panel(x, y);
  panel.axes("", valueKey);
  categories.forEach((c, i) => panel.text(x(i), y.range[0] + 16, String(c), 9));
  panel.text((x.range[0] + x.range[1]) / 2, y.range[0] + 30, xLabel, 11);
  panel.text((x.range[0] + x.range[1]) / 2, rowIdx * PANEL_H + 16, title, 12);
  const slot = (x(1) - x(0)) || 60;
  categories.forEach((c, i) => {
    series.forEach((s, j) => {
      const sample = rows
        .filter((r) => Number(r[categoryKey]) === c && String(r[seriesKey]) === s)
        .map((r) => Number(r[valueKey]));
      if (sample.length === 0) return;
      const offset = (j - (series.length - 1) / 2) * 0.32 * slot;
      drawBox(panel, x(i) + offset, 0.26 * slot, sample, seriesColor(s));
    });
  });
  return panel.render();
}

export function renderFigure1(bundleDir: string): string {
  const rows = loadTable(join(bundleDir, CONTRACTS.figure1.file), CONTRACTS.figure1);
  const left = boxPanel(rows, "n_particles", "log_l1_loglik", "filter", 0, 0,
    "log-likelihood error", "number of particles");
  const right = boxPanel(rows, "n_particles", "log_l1_grad_phi", "filter", 1, 0,
    "gradient (phi) error", "number of particles");
  return svgDocument(2 * PANEL_W, PANEL_H, [left, right]);
}

export function renderFigure2(bundleDir: string): string {
  const rows = loadTable(join(bundleDir, CONTRACTS.figure2.file), CONTRACTS.figure2);
  const panels: string[] = [];
  const nValues = [...new Set(rows.map((r) => Number(r.n_particles)))].sort((a, b) => a - b);
  nValues.forEach((n, i) => {
    panels.push(
      boxPanel(
        rows.filter((r) => Number(r.n_particles) === n),
        "lag", "log_l1_grad_phi", "filter", i, 0, `N = ${n}`, "smoother lag",
      ),
    );
  });
  return svgDocument(nValues.length * PANEL_W, PANEL_H, panels);
}

export function renderFigure3(bundleDir: string): string {
  const traces = loadTable(join(bundleDir, CONTRACTS.figure3_traces.file), CONTRACTS.figure3_traces);
  const contour = loadTable(join(bundleDir, CONTRACTS.figure3_contour.file), CONTRACTS.figure3_contour);
  const parameterizations = [...new Set(traces.map((r) => String(r.parameterization)))].sort();
  const panels: string[] = [];
  parameterizations.forEach((label, col) => {
    const t = traces.filter((r) => String(r.parameterization) === label);
    const gridLabel = label.startsWith("rescaled") ? "rescaled" : "original";
    const c = contour.filter((r) => String(r.parameterization) === gridLabel);
    const xs = [...t.map((r) => Number(r.theta_1)), ...c.map((r) => Number(r.theta_1))];
    const ys = [...t.map((r) => Number(r.theta_2)), ...c.map((r) => Number(r.theta_2))];
    const { x, y } = panelScales(col, 0, extent(xs), extent(ys));
    const panel = new Panel(x, y);
    // density shading from the exact posterior grid
    const maxW = Math.max(...c.map((r) => Number(r.weight)));
    const x1s = [...new Set(c.map((r) => Number(r.theta_1)))].sort((a, b) => a - b);
    const y1s = [...new Set(c.map((r) => Number(r.theta_2)))].sort((a, b) => a - b);
    const cellW = x1s.length > 1 ? x(x1s[1]) - x(x1s[0]) : 4;
    const cellH = y1s.length > 1 ? Math.abs(y(y1s[1]) - y(y1s[0])) : 4;
    for (const r of c) {
      const w = Number(r.weight) / maxW;
      if (w < 0.02) continue;
      const shade = Math.round(255 - 130 * w);
      panel.rect(
        x(Number(r.theta_1)) - cellW / 2,
        y(Number(r.theta_2)) - cellH / 2,
        cellW,
        cellH,
        `rgb(${shade},${shade},${shade})`,
      );
    }
    panel.axes("theta_1", "theta_2");
    panel.text((x.range[0] + x.range[1]) / 2, 16, label, 12);
    for (const [variant, rows] of groupBy(t, "variant")) {
      const ordered = [...rows].sort((a, b) => Number(a.iteration) - Number(b.iteration));
      panel.path(
        ordered.map((r) => Number(r.theta_1)),
        ordered.map((r) => Number(r.theta_2)),
        seriesColor(variant),
        1.2,
        0.9,
      );
    }
    panels.push(panel.render());
  });
  return svgDocument(parameterizations.length * PANEL_W, PANEL_H, panels);
}

export function renderFigure4(bundleDir: string): string {
  const traceRows = loadTable(join(bundleDir, CONTRACTS.figure4_trace.file), CONTRACTS.figure4_trace);
  const sampleRows = loadTable(join(bundleDir, CONTRACTS.figure4_samples.file), CONTRACTS.figure4_samples);
  const panels: string[] = [];
  {
    const xs = traceRows.map((r) => Number(r.iteration));
    const ys = traceRows.map((r) => Number(r.beta));
    const { x, y } = panelScales(0, 0, extent(xs), extent(ys));
    const panel = new Panel(x, y);
    panel.axes("iteration", "beta");
    panel.text((x.range[0] + x.range[1]) / 2, 16, "trace", 12);
    for (const [algorithm, rows] of groupBy(traceRows, "algorithm")) {
      const ordered = [...rows].sort((a, b) => Number(a.iteration) - Number(b.iteration));
      panel.path(
        ordered.map((r) => Number(r.iteration)),
        ordered.map((r) => Number(r.beta)),
        seriesColor(algorithm),
        1,
        0.9,
      );
    }
    panels.push(panel.render());
  }
  {
    const groups = groupBy(sampleRows, "algorithm");
    const densities = new Map<string, { x: number[]; y: number[] }>();
    for (const [algorithm, rows] of groups) {
      densities.set(algorithm, kernelDensity(rows.map((r) => Number(r.beta))));
    }
    const xsAll = [...densities.values()].flatMap((d) => d.x);
    const ysAll = [...densities.values()].flatMap((d) => d.y);
    const { x, y } = panelScales(1, 0, extent(xsAll), [0, Math.max(...ysAll) * 1.05]);
    const panel = new Panel(x, y);
    panel.axes("beta", "density");
    panel.text((x.range[0] + x.range[1]) / 2, 16, "posterior estimate", 12);
    for (const [algorithm, density] of densities) {
      panel.path(density.x, density.y, seriesColor(algorithm), 1.5);
    }
    panels.push(panel.render());
  }
  return svgDocument(2 * PANEL_W, PANEL_H, panels);
}

export function renderFigure5(bundleDir: string): string {
  const rows = loadTable(join(bundleDir, CONTRACTS.figure5.file), CONTRACTS.figure5);
  const sweeps = [...new Set(rows.map((r) => String(r.sweep)))].sort();
  const parameters: Array<["iact_phi" | "iact_sigma" | "iact_beta", string]> = [
    ["iact_phi", "#000000"],
    ["iact_sigma", "#c23b22"],
    ["iact_beta", "#3b6fc2"],
  ];
  const panels: string[] = [];
  sweeps.forEach((sweep, rowIdx) => {
    const subset = rows.filter((r) => String(r.sweep) === sweep);
    const values = [...new Set(subset.map((r) => Number(r.value)))].sort((a, b) => a - b);
    const medians = new Map<string, number[]>();
    for (const [key] of parameters) {
      medians.set(
        key,
        values.map((v) =>
          median(subset.filter((r) => Number(r.value) === v).map((r) => Number(r[key]))),
        ),
      );
    }
    const yAll = [...medians.values()].flat();
    const { x, y } = panelScales(0, rowIdx, extent(values), extent([0, ...yAll]));
    const panel = new Panel(x, y);
    panel.axes(sweep === "gamma" ? "step length" : "smoother lag", "IACT (median over runs)");
    panel.text((x.range[0] + x.range[1]) / 2, rowIdx * PANEL_H + 16, `sweep: ${sweep}`, 12);
    for (const [key, color] of parameters) {
      panel.path(values, medians.get(key)!, color, 1.5);
    }
    panels.push(panel.render());
  });
  return svgDocument(PANEL_W, sweeps.length * PANEL_H, panels);
}

export interface RenderJob {
  id: string;
  inputs: string[];
  render: (bundleDir: string) => string;
  output: string;
}

export const RENDERERS: RenderJob[] = [
  { id: "figure1", inputs: ["figure1.csv"], render: renderFigure1, output: "figure1.svg" },
  { id: "figure2", inputs: ["figure2.csv"], render: renderFigure2, output: "figure2.svg" },
  {
    id: "figure3",
    inputs: ["figure3_traces.csv", "figure3_contour.csv"],
    render: renderFigure3,
    output: "figure3.svg",
  },
  {
    id: "figure4",
    inputs: ["figure4_trace.csv", "figure4_samples.csv"],
    render: renderFigure4,
    output: "figure4.svg",
  },
  { id: "figure5", inputs: ["figure5.csv"], render: renderFigure5, output: "figure5.svg" },
];

export { ContractError };

/**
 * Column contracts for the plot-data CSVs emitted by the experiment runner.
 * A bundle is valid for a figure when the file exists and carries exactly
 * these columns (order-insensitive); violations are reported by column name.
 */

export interface FigureContract {
  file: string;
  columns: string[];
  numeric: string[];
}

export const CONTRACTS: Record<string, FigureContract> = {
  figure1: {
    file: "figure1.csv",
    columns: ["filter", "n_particles", "replicate", "log_l1_loglik", "log_l1_grad_phi"],
    numeric: ["n_particles", "replicate", "log_l1_loglik", "log_l1_grad_phi"],
  },
  figure2: {
    file: "figure2.csv",
    columns: ["filter", "lag", "n_particles", "replicate", "log_l1_grad_phi"],
    numeric: ["lag", "n_particles", "replicate", "log_l1_grad_phi"],
  },
  figure3_traces: {
    file: "figure3_traces.csv",
    columns: ["parameterization", "variant", "iteration", "theta_1", "theta_2"],
    numeric: ["iteration", "theta_1", "theta_2"],
  },
  figure3_contour: {
    file: "figure3_contour.csv",
    columns: ["parameterization", "theta_1", "theta_2", "weight"],
    numeric: ["theta_1", "theta_2", "weight"],
  },
  figure4_trace: {
    file: "figure4_trace.csv",
    columns: ["algorithm", "chain", "iteration", "beta"],
    numeric: ["chain", "iteration", "beta"],
  },
  figure4_samples: {
    file: "figure4_samples.csv",
    columns: ["algorithm", "beta"],
    numeric: ["beta"],
  },
  figure5: {
    file: "figure5.csv",
    columns: ["sweep", "value", "run", "iact_phi", "iact_sigma", "iact_beta"],
    numeric: ["value", "run", "iact_phi", "iact_sigma", "iact_beta"],
  },
};

/** Variant/algorithm colours: baseline black, gradient red, Hessian blue. */
export function seriesColor(name: string): string {
  if (name.startsWith("pmh0")) return "#000000";
  if (name.startsWith("pmh1")) return "#c23b22";
  if (name.startsWith("pmh2")) return "#3b6fc2";
  if (name === "bootstrap") return "#000000";
  if (name === "fully_adapted") return "#c23b22";
  return "#666666";
}

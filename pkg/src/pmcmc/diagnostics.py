"""Chain and estimator diagnostics.

Integrated autocorrelation time with the insignificance cutoff, acceptance
rates, pooled posterior summaries with median/IQR aggregation across
chains, and the log absolute-error transform used by the estimator error
studies.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class IactResult:
    iact: float                    # >= 1
    cutoff: int                    # first lag with insignificant autocorrelation
    autocorrelations: np.ndarray   # lags 1..cutoff


class DegenerateChainError(ValueError):
    """The chain column has no variance (e.g. every proposal was rejected)."""


def _autocorrelations(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Empirical autocorrelations at lags 1..max_lag, M-denominator convention."""
    n = x.size
    centered = x - x.mean()
    size = 1
    while size < 2 * n:
        size <<= 1
    f = np.fft.rfft(centered, size)
    acov = np.fft.irfft(f * np.conj(f), size)[: max_lag + 1] / n
    return acov[1:] / acov[0]


def iact(chain_column) -> IactResult:
    """Integrated autocorrelation time of one chain column.

    Sums empirical autocorrelations up to (and including) the first lag
    whose coefficient is statistically insignificant, |rho_k| < 2/sqrt(M).
    If no lag qualifies the cutoff caps at M/2 with a warning.  The result
    is floored at one.
    """
    x = np.asarray(chain_column, dtype=float)
    if x.ndim != 1 or x.size < 10:
        raise ValueError("need a 1-D chain with at least 10 samples")
    if np.all(x == x[0]):
        raise DegenerateChainError("chain column has zero variance")
    m = x.size
    cap = m // 2
    rho = _autocorrelations(x, cap)
    threshold = 2.0 / np.sqrt(m)
    below = np.flatnonzero(np.abs(rho) < threshold)
    if below.size:
        cutoff = int(below[0]) + 1
    else:
        warnings.warn(f"no insignificant autocorrelation up to lag {cap}; truncating there", stacklevel=2)
        cutoff = cap
    value = 1.0 + 2.0 * float(np.sum(rho[:cutoff]))
    return IactResult(max(1.0, value), cutoff, rho[:cutoff].copy())


def acceptance_rate(accepted) -> float:
    """Mean of the acceptance indicators, exactly."""
    return float(np.mean(np.asarray(accepted, dtype=float)))


def log_l1_error(estimates, truth: float) -> np.ndarray:
    """Elementwise log absolute error against a scalar reference value.

    Exact zeros are clamped at log machine epsilon (with a warning) so the
    transform stays finite.
    """
    if not np.isfinite(truth):
        raise ValueError("truth must be finite")
    err = np.abs(np.asarray(estimates, dtype=float) - truth)
    zero = err == 0.0
    if np.any(zero):
        warnings.warn("exact zero error clamped at machine epsilon", stacklevel=2)
        err = np.where(zero, np.finfo(float).eps, err)
    return np.log(err)


def summarize(traces, burn_in: int, param_names=None) -> dict:
    """Cross-chain summary: acceptance, per-parameter IACT and pooled moments.

    IACT is computed per chain on the post-burn-in samples and aggregated
    by median and interquartile range; posterior means and standard
    deviations pool the post-burn-in samples of all chains.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("need at least one chain")
    n_iter, dim = traces[0].samples.shape
    if burn_in >= n_iter:
        raise ValueError("burn_in must be smaller than the chain length")
    if param_names is None:
        param_names = [f"theta_{j + 1}" for j in range(dim)]

    acc = [acceptance_rate(t.accepted[burn_in:]) for t in traces]
    pooled = np.vstack([t.samples[burn_in:] for t in traces])
    params = []
    for j in range(dim):
        iacts = np.array([iact(t.samples[burn_in:, j]).iact for t in traces])
        q25, q75 = np.percentile(iacts, [25, 75])
        params.append(
            {
                "name": param_names[j],
                "iact_median": float(np.median(iacts)),
                "iact_iqr": float(q75 - q25),
                "posterior_mean": float(pooled[:, j].mean()),
                "posterior_sd": float(pooled[:, j].std(ddof=1)),
            }
        )
    return {
        "n_chains": len(traces),
        "acceptance_median": float(np.median(acc)),
        "parameters": params,
    }


def summary_rows(label: dict, summary: dict) -> list[dict]:
    """Flatten a summary into one row per parameter for table output."""
    rows = []
    for p in summary["parameters"]:
        row = dict(label)
        row.update(
            {
                "acceptance_median": summary["acceptance_median"],
                "parameter": p["name"],
                "iact_median": p["iact_median"],
                "iact_iqr": p["iact_iqr"],
                "posterior_mean": p["posterior_mean"],
                "posterior_sd": p["posterior_sd"],
            }
        )
        rows.append(row)
    return rows


def write_table_csv(rows: list[dict], path) -> None:
    """Write summary rows as CSV with a stable column order."""
    if not rows:
        raise ValueError("no rows to write")
    columns = list(rows[0].keys())
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(row[c]) for c in columns) + "\n")


def format_table(rows: list[dict]) -> str:
    """Aligned plain-text rendering of summary rows."""
    if not rows:
        return ""
    columns = list(rows[0].keys())
    cells = [[_format_cell(row[c], text=True) for c in columns] for row in rows]
    widths = [max(len(c), *(len(r[j]) for r in cells)) for j, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(widths[j]) for j, c in enumerate(columns))]
    for r in cells:
        lines.append("  ".join(r[j].ljust(widths[j]) for j in range(len(columns))))
    return "\n".join(lines)


def _format_cell(value, text: bool = False) -> str:
    if isinstance(value, float):
        return f"{value:.4g}" if text else f"{value:.17g}"
    return str(value)

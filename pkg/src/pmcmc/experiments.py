"""Configuration-driven experiment runner.

Each experiment id reproduces one study: ``error-sweep`` (estimator error
versus particle count and lag), ``burnin-demo`` (first chain steps under
three parameterizations), ``lgss-iact`` (mixing table on simulated data),
``earthquake`` (count-model inference), and ``sensitivity`` (mixing versus
step size and lag).  Runs are deterministic given the master seed: job j
uses the stream seeded by SeedSequence([master_seed, j]), independent of
worker scheduling.  Results land in the output directory as a
manifest.json, per-chain trace CSVs, aggregate tables and plot-data CSVs.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .diagnostics import DegenerateChainError, iact
from .filtering import FilterConfig, run_filter
from .models.lgss import LgssParams, make_lgss, save_observations, simulate_lgss
from .models.poisson import load_earthquake_data, make_poisson_model, simulate_counts
from .oracle import grid_posterior, kalman_loglik, rts_exact_gradient
from .sampler import (
    HybridPolicy,
    PreconditionedPolicy,
    ProposalSpec,
    StandardPolicy,
    run_chain,
    save_chain_csv,
    step_matrix,
)
from .smoothing import estimate_gradient

EXPERIMENTS = ("error-sweep", "burnin-demo", "lgss-iact", "earthquake", "sensitivity")

LGSS_TRUE_THETA = (0.5, 1.0)
LGSS_SIGMA_E = 0.1


class ConfigError(ValueError):
    """The experiment configuration is malformed."""


def parse_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment; values keep commas."""
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {line_no}: expected 'key = value'")
            key, value = stripped.split("=", 1)
            key = key.strip()
            if not key:
                raise ConfigError(f"line {line_no}: empty key")
            if key in raw:
                raise ConfigError(f"line {line_no}: duplicate key {key!r}")
            raw[key] = value.strip()
    return raw


@dataclass
class ExperimentConfig:
    """Typed view over a flat key-value configuration."""

    raw: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls(parse_config_file(path))

    def experiment(self) -> str:
        name = self.str("experiment")
        if name not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {name!r}")
        return name

    def _get(self, key, default):
        if key in self.raw:
            return self.raw[key]
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default

    def str(self, key, default=None) -> str:
        return str(self._get(key, default))

    def int(self, key, default=None) -> int:
        value = self._get(key, default)
        try:
            return int(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"key {key!r}: expected integer, got {value!r}") from exc

    def float(self, key, default=None) -> float:
        value = self._get(key, default)
        try:
            return float(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"key {key!r}: expected number, got {value!r}") from exc

    def int_list(self, key, default=None) -> list[int]:
        return [int(v) for v in self._split(key, default)]

    def float_list(self, key, default=None) -> list[float]:
        return [float(v) for v in self._split(key, default)]

    def str_list(self, key, default=None) -> list[str]:
        return list(self._split(key, default))

    def _split(self, key, default):
        value = self._get(key, default)
        if isinstance(value, (list, tuple)):
            return [str(v) for v in value]
        parts = [p.strip() for p in str(value).split(",")]
        if any(not p for p in parts):
            raise ConfigError(f"key {key!r}: empty list element in {value!r}")
        return parts


def job_seed(master_seed: int, job_index: int) -> np.random.SeedSequence:
    """Documented seed-splitting rule: one stream per (master, job) pair."""
    return np.random.SeedSequence([int(master_seed), int(job_index)])


def resolve_workers(config: ExperimentConfig, n_jobs: int, cli_workers=None) -> int:
    """Worker count: PMCMC_WORKERS env > --workers flag > config > cores."""
    env = os.environ.get("PMCMC_WORKERS")
    if env is not None:
        return max(1, min(int(env), n_jobs))
    if cli_workers is not None:
        return max(1, min(int(cli_workers), n_jobs))
    configured = config.int("workers", os.cpu_count() or 1)
    return max(1, min(configured, n_jobs))


def build_model(name: str):
    if name == "lgss":
        return make_lgss(sigma_e=LGSS_SIGMA_E)
    if name == "lgss-sigmae1":
        return make_lgss(sigma_e=1.0)
    if name == "lgss-rescaled":
        return make_lgss(sigma_e=LGSS_SIGMA_E, rescale=True)
    if name == "earthquake":
        return make_poisson_model()
    raise ConfigError(f"unknown model {name!r}")


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_csv(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _run_jobs(jobs, worker_fn, n_workers):
    """Run jobs (ordered) on a pool; returns [(job, result-or-None, error)]."""
    results = [None] * len(jobs)
    errors = [None] * len(jobs)
    if n_workers <= 1:
        for i, job in enumerate(jobs):
            try:
                results[i] = worker_fn(job)
            except Exception as exc:  # job failures must not kill siblings
                errors[i] = f"{type(exc).__name__}: {exc}"
        return list(zip(jobs, results, errors))
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        futures = [pool.submit(worker_fn, job) for job in jobs]
        for i, future in enumerate(futures):
            try:
                results[i] = future.result()
            except Exception as exc:
                errors[i] = f"{type(exc).__name__}: {exc}"
    return list(zip(jobs, results, errors))


def _write_manifest(out_dir, experiment, config, artifacts, jobs_report) -> dict:
    manifest = {
        "experiment": experiment,
        "package_version": __version__,
        "config": dict(sorted(config.raw.items())),
        "artifacts": artifacts,
        "jobs": jobs_report,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def run_experiment(config: ExperimentConfig, out_dir=None, seed=None, workers=None) -> dict:
    """Run one experiment to completion; returns the manifest."""
    experiment = config.experiment()
    out_dir = out_dir or config.str("out_dir")
    os.makedirs(out_dir, exist_ok=True)
    master_seed = int(seed) if seed is not None else config.int("seed", 1)
    runner = {
        "error-sweep": _run_error_sweep,
        "burnin-demo": _run_burnin_demo,
        "lgss-iact": _run_lgss_iact,
        "earthquake": _run_earthquake,
        "sensitivity": _run_sensitivity,
    }[experiment]
    return runner(config, out_dir, master_seed, workers)


# ---------------------------------------------------------------------------
# error-sweep: estimator error versus particle count (and lag)
# ---------------------------------------------------------------------------


def _error_sweep_job(job):
    model = build_model(job["model"])
    theta = np.asarray(job["theta"])
    y = np.asarray(job["observations"])
    rng = np.random.default_rng(job_seed(job["seed"], job["index"]))
    rows = []
    for rep in range(job["replicates"]):
        config = FilterConfig(job["n_particles"], job["filter_variant"], seed=0)
        output = run_filter(model, theta, y, config, rng=rng)
        row = {
            "replicate": rep,
            "loglik": output.log_likelihood,
            "grads": {},
        }
        for lag in job["lags"]:
            row["grads"][lag] = float(estimate_gradient(model, theta, output, lag)[0])
        rows.append(row)
    return rows


def _run_error_sweep(config, out_dir, master_seed, workers):
    T = config.int("T", 100)
    sigma_e = config.float("sigma_e", LGSS_SIGMA_E)
    theta = np.array([config.float("phi", LGSS_TRUE_THETA[0]), config.float("sigma_v", LGSS_TRUE_THETA[1])])
    n_list = config.int_list("n_particles", [50, 200, 1000])
    lag_default = config.int("lag", 5)
    lag_list = config.int_list("lags", [1, 3, 5, 12, 25, 50])
    n_for_lags = config.int("n_particles_for_lags", 500)
    replicates = config.int("replicates", 500)
    filters = config.str_list("filters", ["bootstrap", "fully_adapted"])

    model = make_lgss(sigma_e=sigma_e)
    data_rng = np.random.default_rng(np.random.SeedSequence([master_seed, 0]))
    _, y = simulate_lgss(model, theta, T, data_rng)
    save_observations(os.path.join(out_dir, "dataset.csv"), y)
    params = LgssParams(theta[0], theta[1], sigma_e)
    true_ll = kalman_loglik(params, y)
    true_grad_phi = float(rts_exact_gradient(params, y)[0])

    jobs = []
    index = 1
    for variant in filters:
        for n in n_list:
            jobs.append(
                {
                    "index": index,
                    "seed": master_seed,
                    "model": "lgss" if sigma_e == LGSS_SIGMA_E else "lgss-sigmae1",
                    "theta": theta.tolist(),
                    "observations": y.tolist(),
                    "filter_variant": variant,
                    "n_particles": n,
                    "lags": [lag_default],
                    "replicates": replicates,
                    "kind": "vary_n",
                }
            )
            index += 1
        jobs.append(
            {
                "index": index,
                "seed": master_seed,
                "model": "lgss" if sigma_e == LGSS_SIGMA_E else "lgss-sigmae1",
                "theta": theta.tolist(),
                "observations": y.tolist(),
                "filter_variant": variant,
                "n_particles": n_for_lags,
                "lags": lag_list,
                "replicates": replicates,
                "kind": "vary_lag",
            }
        )
        index += 1

    n_workers = resolve_workers(config, len(jobs), workers)
    outcome = _run_jobs(jobs, _error_sweep_job, n_workers)

    fig1_rows, fig2_rows, report = [], [], []
    for job, rows, error in outcome:
        report.append({"job": job["index"], "kind": job["kind"], "status": "error" if error else "ok", "error": error})
        if error:
            continue
        for row in rows:
            err_ll = np.log(max(abs(row["loglik"] - true_ll), np.finfo(float).eps))
            if job["kind"] == "vary_n":
                err_grad = np.log(max(abs(row["grads"][job["lags"][0]] - true_grad_phi), np.finfo(float).eps))
                fig1_rows.append([job["filter_variant"], job["n_particles"], row["replicate"], err_ll, err_grad])
            else:
                for lag in job["lags"]:
                    err_grad = np.log(max(abs(row["grads"][lag] - true_grad_phi), np.finfo(float).eps))
                    fig2_rows.append([job["filter_variant"], lag, job["n_particles"], row["replicate"], err_grad])

    _write_csv(
        os.path.join(out_dir, "figure1.csv"),
        ["filter", "n_particles", "replicate", "log_l1_loglik", "log_l1_grad_phi"],
        sorted(fig1_rows, key=lambda r: (r[0], r[1], r[2])),
    )
    _write_csv(
        os.path.join(out_dir, "figure2.csv"),
        ["filter", "lag", "n_particles", "replicate", "log_l1_grad_phi"],
        sorted(fig2_rows, key=lambda r: (r[0], r[1], r[2], r[3])),
    )
    artifacts = {
        "figure1.csv": "estimator log-L1 error versus particle count",
        "figure2.csv": "gradient log-L1 error versus smoother lag",
        "dataset.csv": "simulated observation record",
    }
    return _write_manifest(out_dir, "error-sweep", config, artifacts, report)


# ---------------------------------------------------------------------------
# burnin-demo: first chain steps under three parameterizations
# ---------------------------------------------------------------------------


def _burnin_job(job):
    model = build_model(job["model"])
    y = np.asarray(job["observations"])
    spec = ProposalSpec(job["variant"], step_matrix(job["gamma"], model.dim_theta))
    fc = FilterConfig(job["n_particles"], job["filter_variant"], seed=0)
    seed = int(job_seed(job["seed"], job["index"]).generate_state(1)[0])
    trace = run_chain(model, y, spec, fc, job["lag"], job["n_iter"], np.asarray(job["theta_init"]), seed=seed)
    return {"samples": trace.samples.tolist(), "accepted": trace.accepted.tolist()}


def _run_burnin_demo(config, out_dir, master_seed, workers):
    T = config.int("T", 250)
    n_iter = config.int("iterations", 50)
    n_particles = config.int("n_particles", 100)
    lag = config.int("lag", 12)
    gammas_original = config.float_list("gammas_original", [0.04, 0.065, 1.0])
    gammas_retuned = config.float_list("gammas_retuned", [0.005, 0.0075, 1.0])
    theta_init = config.float_list("theta_init", [0.1, 2.0])

    model = make_lgss(sigma_e=LGSS_SIGMA_E)
    data_rng = np.random.default_rng(np.random.SeedSequence([master_seed, 0]))
    _, y = simulate_lgss(model, np.asarray(LGSS_TRUE_THETA), T, data_rng)
    save_observations(os.path.join(out_dir, "dataset.csv"), y)

    variants = ["pmh0", "pmh1", "pmh2"]
    setups = []
    for v, g in zip(variants, gammas_original):
        setups.append(("original", "lgss", v, g, theta_init))
    for v, g in zip(variants, gammas_original):
        setups.append(("rescaled-same-step", "lgss-rescaled", v, g, [theta_init[0], theta_init[1] / 10.0]))
    for v, g in zip(variants, gammas_retuned):
        setups.append(("rescaled-retuned", "lgss-rescaled", v, g, [theta_init[0], theta_init[1] / 10.0]))

    jobs = [
        {
            "index": i + 1,
            "seed": master_seed,
            "model": model_name,
            "observations": y.tolist(),
            "variant": variant,
            "gamma": gamma,
            "theta_init": init,
            "n_particles": n_particles,
            "filter_variant": "fully_adapted",
            "lag": lag,
            "n_iter": n_iter,
            "parameterization": label,
        }
        for i, (label, model_name, variant, gamma, init) in enumerate(setups)
    ]
    n_workers = resolve_workers(config, len(jobs), workers)
    outcome = _run_jobs(jobs, _burnin_job, n_workers)

    rows, report = [], []
    for job, result, error in outcome:
        report.append({"job": job["index"], "status": "error" if error else "ok", "error": error})
        if error:
            continue
        for k, sample in enumerate(result["samples"]):
            rows.append([job["parameterization"], job["variant"], k + 1, sample[0], sample[1]])
    _write_csv(
        os.path.join(out_dir, "figure3_traces.csv"),
        ["parameterization", "variant", "iteration", "theta_1", "theta_2"],
        sorted(rows, key=lambda r: (r[0], r[1], r[2])),
    )

    # posterior contours from the exact reference, both parameterizations
    grid_size = config.int("grid_size", 60)
    phi_axis = np.linspace(0.3, 0.75, grid_size)
    sv_axis = np.linspace(0.7, 1.45, grid_size)
    weights = grid_posterior(
        lambda th: kalman_loglik(LgssParams(th[0], th[1], LGSS_SIGMA_E), y),
        lambda th: 0.0 if (abs(th[0]) < 1 and th[1] > 0) else -np.inf,
        [phi_axis, sv_axis],
    )
    contour_rows = []
    for i, phi in enumerate(phi_axis):
        for j, sv in enumerate(sv_axis):
            contour_rows.append(["original", phi, sv, weights[i, j]])
            contour_rows.append(["rescaled", phi, sv / 10.0, weights[i, j]])
    _write_csv(
        os.path.join(out_dir, "figure3_contour.csv"),
        ["parameterization", "theta_1", "theta_2", "weight"],
        contour_rows,
    )
    artifacts = {
        "figure3_traces.csv": "first chain steps per variant and parameterization",
        "figure3_contour.csv": "exact posterior grid for the contour overlay",
        "dataset.csv": "simulated observation record",
    }
    return _write_manifest(out_dir, "burnin-demo", config, artifacts, report)


# ---------------------------------------------------------------------------
# lgss-iact: mixing table on simulated datasets
# ---------------------------------------------------------------------------


def _chain_job(job):
    """Run one chain and write its trace; returns summary statistics.

    With ``tolerate_degenerate`` set, a chain whose post-burn-in samples
    never move reports infinite autocorrelation times instead of raising
    (median-based aggregation stays well-defined); otherwise the
    degenerate-chain error propagates and the job is recorded as failed.
    """
    model = build_model(job["model"])
    y = np.asarray(job["observations"])
    policy = job.get("policy", "standard")
    if policy == "standard":
        policy_obj = StandardPolicy()
    elif policy == "hybrid":
        policy_obj = HybridPolicy(window=job["hybrid_window"], burn_in=job["burn_in"])
    elif policy == "precond":
        policy_obj = PreconditionedPolicy(scale_matrix=np.asarray(job["precond_matrix"]))
    else:
        raise ValueError(f"unknown policy {policy!r}")
    spec = ProposalSpec(job["variant"], step_matrix(job["gamma"], model.dim_theta), policy_obj)
    fc = FilterConfig(job["n_particles"], job["filter_variant"], seed=0)
    seed = int(job_seed(job["seed"], job["index"]).generate_state(1)[0])
    trace = run_chain(model, y, spec, fc, job["lag"], job["n_iter"], np.asarray(job["theta_init"]), seed=seed)
    if job.get("trace_path"):
        save_chain_csv(trace, job["trace_path"], param_names=model.param_names)
    burn = job["burn_in"]
    kept = trace.samples[burn:]

    def column_iact(column):
        try:
            return float(iact(column).iact)
        except DegenerateChainError:
            if job.get("tolerate_degenerate"):
                return float("inf")
            raise

    return {
        "acceptance": float(np.mean(trace.accepted[burn:])),
        "iact": [column_iact(kept[:, j]) for j in range(kept.shape[1])],
        "posterior_mean": kept.mean(axis=0).tolist(),
        "posterior_sd": kept.std(axis=0, ddof=1).tolist(),
        "kept_beta": kept[:, -1].tolist() if job.get("keep_last_column") else None,
        "n_filter_runs": trace.n_filter_runs,
    }


def _run_lgss_iact(config, out_dir, master_seed, workers):
    T = config.int("T", 250)
    n_datasets = config.int("datasets", 25)
    n_iter = config.int("iterations", 30000)
    burn_in = config.int("burn_in", 10000)
    lag = config.int("lag", 12)
    combos = config.str_list("combos", ["fully_adapted:100"])
    variants = config.str_list("variants", ["pmh0", "pmh1", "pmh2"])
    gammas = config.float_list("gammas", [0.08, 0.075, 1.50])

    model = make_lgss(sigma_e=LGSS_SIGMA_E)
    theta_true = np.asarray(LGSS_TRUE_THETA)
    datasets = []
    for d in range(n_datasets):
        rng = np.random.default_rng(np.random.SeedSequence([master_seed, 0, d]))
        _, y = simulate_lgss(model, theta_true, T, rng)
        save_observations(os.path.join(out_dir, f"dataset_{d:02d}.csv"), y)
        datasets.append(y)

    jobs = []
    index = 1
    for variant, gamma in zip(variants, gammas):
        for combo in combos:
            fv, n_str = combo.split(":")
            fv = {"bpf": "bootstrap", "fapf": "fully_adapted"}.get(fv, fv)
            for d, y in enumerate(datasets):
                jobs.append(
                    {
                        "index": index,
                        "seed": master_seed,
                        "model": "lgss",
                        "observations": y.tolist(),
                        "variant": variant,
                        "gamma": gamma,
                        "theta_init": theta_true.tolist(),
                        "n_particles": int(n_str),
                        "filter_variant": fv,
                        "lag": lag,
                        "n_iter": n_iter,
                        "burn_in": burn_in,
                        "dataset": d,
                        "combo": combo,
                        "trace_path": os.path.join(out_dir, f"chain_{variant}_{fv}{n_str}_d{d:02d}.csv"),
                    }
                )
                index += 1

    n_workers = resolve_workers(config, len(jobs), workers)
    outcome = _run_jobs(jobs, _chain_job, n_workers)

    table_rows, report = [], []
    grouped: dict[tuple, list] = {}
    for job, result, error in outcome:
        report.append(
            {"job": job["index"], "variant": job["variant"], "combo": job["combo"],
             "dataset": job["dataset"], "status": "error" if error else "ok", "error": error}
        )
        if error:
            continue
        grouped.setdefault((job["variant"], job["combo"]), []).append(result)
    for (variant, combo), results in sorted(grouped.items()):
        acc = np.array([r["acceptance"] for r in results])
        row = [variant, combo, float(np.median(acc))]
        for j, name in enumerate(model.param_names):
            vals = np.array([r["iact"][j] for r in results])
            q25, q75 = np.percentile(vals, [25, 75])
            row.extend([float(np.median(vals)), float(q75 - q25)])
        table_rows.append(row)
    header = ["variant", "combo", "acceptance_median"]
    for name in model.param_names:
        header.extend([f"iact_{name}_median", f"iact_{name}_iqr"])
    _write_csv(os.path.join(out_dir, "table1.csv"), header, table_rows)
    artifacts = {"table1.csv": "acceptance and IACT medians/IQRs across simulated datasets"}
    return _write_manifest(out_dir, "lgss-iact", config, artifacts, report)


# ---------------------------------------------------------------------------
# earthquake: count-model inference (table, beta trace and density data)
# ---------------------------------------------------------------------------


def _run_earthquake(config, out_dir, master_seed, workers):
    data_path = config.str("data", os.path.join("data", "earthquakes.csv"))
    y = load_earthquake_data(data_path)
    n_runs = config.int("runs", 10)
    n_iter = config.int("iterations", 30000)
    burn_in = config.int("burn_in", 10000)
    lag = config.int("lag", 12)
    n_list = config.int_list("n_particles", [1000])
    algorithms = config.str_list(
        "algorithms", ["pmh0:standard", "pmh1:standard", "pmh2:standard", "pmh2:hybrid"]
    )
    gammas = {
        "pmh0": config.float("gamma_pmh0", 0.06),
        "pmh1": config.float("gamma_pmh1", 0.006),
        "pmh2": config.float("gamma_pmh2", 0.85),
    }
    theta_init = config.float_list("theta_init", [0.5, 0.5, 18.0])
    hybrid_window = config.int("hybrid_window", 2500)

    model = make_poisson_model()
    precond_matrix = None
    if any(a.endswith(":precond") for a in algorithms):
        precond_matrix = _earthquake_pilot_covariance(config, y, master_seed)

    jobs = []
    index = 1
    for algo in algorithms:
        variant, policy = algo.split(":")
        for n in n_list:
            for run in range(n_runs):
                job = {
                    "index": index,
                    "seed": master_seed,
                    "model": "earthquake",
                    "observations": y.tolist(),
                    "variant": variant,
                    "policy": policy,
                    "gamma": gammas[variant],
                    "theta_init": theta_init,
                    "n_particles": n,
                    "filter_variant": "bootstrap",
                    "lag": lag,
                    "n_iter": n_iter,
                    "burn_in": burn_in,
                    "hybrid_window": hybrid_window,
                    "run": run,
                    "algo": algo,
                    "keep_last_column": True,
                    "trace_path": os.path.join(out_dir, f"chain_{variant}-{policy}_bpf{n}_r{run:02d}.csv"),
                }
                if policy == "precond":
                    job["precond_matrix"] = precond_matrix.tolist()
                jobs.append(job)
                index += 1

    n_workers = resolve_workers(config, len(jobs), workers)
    outcome = _run_jobs(jobs, _chain_job, n_workers)

    report = []
    grouped: dict[tuple, list] = {}
    for job, result, error in outcome:
        report.append(
            {"job": job["index"], "algo": job["algo"], "n_particles": job["n_particles"],
             "run": job["run"], "status": "error" if error else "ok", "error": error}
        )
        if error:
            continue
        grouped.setdefault((job["algo"], job["n_particles"]), []).append((job, result))

    table_rows = []
    fig4_trace_rows, fig4_sample_rows = [], []
    trace_stride = config.int("figure4_trace_stride", 10)
    for (algo, n), pairs in sorted(grouped.items()):
        results = [r for _, r in pairs]
        acc = np.array([r["acceptance"] for r in results])
        row = [algo, n, float(np.median(acc))]
        for j in range(model.dim_theta):
            vals = np.array([r["iact"][j] for r in results])
            q25, q75 = np.percentile(vals, [25, 75])
            row.extend([float(np.median(vals)), float(q75 - q25)])
        pooled = np.concatenate([r["kept_beta"] for r in results])
        row.extend([float(np.mean(pooled)), float(np.std(pooled, ddof=1))])
        table_rows.append(row)
        for run_idx, (job, result) in enumerate(pairs):
            beta = result["kept_beta"]
            fig4_sample_rows.extend([[algo, b] for b in beta[::trace_stride]])
            if run_idx == 0:
                for k, b in enumerate(beta[::trace_stride]):
                    fig4_trace_rows.append([algo, run_idx, k * trace_stride, b])
    header = ["algorithm", "n_particles", "acceptance_median"]
    for name in model.param_names:
        header.extend([f"iact_{name}_median", f"iact_{name}_iqr"])
    header.extend(["beta_posterior_mean", "beta_posterior_sd"])
    _write_csv(os.path.join(out_dir, "table2.csv"), header, table_rows)
    _write_csv(
        os.path.join(out_dir, "figure4_trace.csv"),
        ["algorithm", "chain", "iteration", "beta"], fig4_trace_rows,
    )
    _write_csv(os.path.join(out_dir, "figure4_samples.csv"), ["algorithm", "beta"], fig4_sample_rows)
    artifacts = {
        "table2.csv": "acceptance and IACT per algorithm on the count data",
        "figure4_trace.csv": "post-burn-in beta trace (thinned)",
        "figure4_samples.csv": "pooled beta samples for the density panel",
    }
    return _write_manifest(out_dir, "earthquake", config, artifacts, report)


def _earthquake_pilot_covariance(config, y, master_seed) -> np.ndarray:
    """Sample covariance from a short standard random-walk pilot chain."""
    model = make_poisson_model()
    pilot_iter = config.int("pilot_iterations", 5000)
    pilot_burn = config.int("pilot_burn_in", 2000)
    gamma = config.float("pilot_gamma", 0.06)
    n = config.int("pilot_n_particles", 500)
    spec = ProposalSpec("pmh0", step_matrix(gamma, model.dim_theta))
    fc = FilterConfig(n, "bootstrap", seed=0)
    seed = int(job_seed(master_seed, 999_983).generate_state(1)[0])
    theta_init = np.asarray(config.float_list("theta_init", [0.5, 0.5, 18.0]))
    trace = run_chain(model, y, spec, fc, config.int("lag", 12), pilot_iter, theta_init, seed=seed)
    cov = np.cov(trace.samples[pilot_burn:], rowvar=False, ddof=1)
    return 0.5 * (cov + cov.T)


# ---------------------------------------------------------------------------
# sensitivity: mixing versus step size and lag
# ---------------------------------------------------------------------------


def _run_sensitivity(config, out_dir, master_seed, workers):
    data_path = config.str("data", os.path.join("data", "earthquakes.csv"))
    y = load_earthquake_data(data_path)
    n_runs = config.int("runs", 10)
    n_iter = config.int("iterations", 15000)
    burn_in = config.int("burn_in", 5000)
    n_particles = config.int("n_particles", 1500)
    base_gamma = config.float("gamma", 0.85)
    base_lag = config.int("lag", 12)
    gamma_grid = config.float_list("gamma_grid", [0.2, 0.5, 0.85, 1.2, 2.0])
    lag_grid = config.int_list("lag_grid", [1, 3, 5, 12, 25, 50])
    theta_init = config.float_list("theta_init", [0.5, 0.5, 18.0])

    jobs = []
    index = 1
    for gamma in gamma_grid:
        for run in range(n_runs):
            jobs.append(_sensitivity_job_dict(index, master_seed, y, "gamma", gamma, gamma, base_lag,
                                              n_particles, n_iter, burn_in, theta_init, run))
            index += 1
    for lag in lag_grid:
        for run in range(n_runs):
            jobs.append(_sensitivity_job_dict(index, master_seed, y, "lag", lag, base_gamma, lag,
                                              n_particles, n_iter, burn_in, theta_init, run))
            index += 1

    n_workers = resolve_workers(config, len(jobs), workers)
    outcome = _run_jobs(jobs, _chain_job, n_workers)

    rows, report = [], []
    for job, result, error in outcome:
        report.append({"job": job["index"], "sweep": job["sweep"], "value": job["sweep_value"],
                       "run": job["run"], "status": "error" if error else "ok", "error": error})
        if error:
            continue
        rows.append([job["sweep"], job["sweep_value"], job["run"],
                     result["iact"][0], result["iact"][1], result["iact"][2]])
    _write_csv(
        os.path.join(out_dir, "figure5.csv"),
        ["sweep", "value", "run", "iact_phi", "iact_sigma", "iact_beta"],
        sorted(rows, key=lambda r: (r[0], r[1], r[2])),
    )
    artifacts = {"figure5.csv": "IACT per parameter for varying step size and lag"}
    return _write_manifest(out_dir, "sensitivity", config, artifacts, report)


def _sensitivity_job_dict(index, seed, y, sweep, value, gamma, lag, n, n_iter, burn_in, theta_init, run):
    return {
        "index": index,
        "seed": seed,
        "model": "earthquake",
        "observations": y.tolist(),
        "variant": "pmh2",
        "policy": "standard",
        "gamma": gamma,
        "theta_init": theta_init,
        "n_particles": n,
        "filter_variant": "bootstrap",
        "lag": lag,
        "n_iter": n_iter,
        "burn_in": burn_in,
        "sweep": sweep,
        "sweep_value": value,
        "run": run,
    }


# ---------------------------------------------------------------------------
# step-length tuning
# ---------------------------------------------------------------------------


def tune_step_report(config: ExperimentConfig, out_dir=None, seed=None, workers=None) -> dict:
    """Pilot chains over a step-length grid; recommends one value.

    Reports acceptance rate and total IACT per grid point.  The
    recommendation is the grid value whose acceptance falls inside the
    target band (ties broken by smallest total IACT); if the band is empty
    the value closest to the band is reported with a warning flag.  With
    criterion=iact the minimizer of total IACT is recommended instead.
    """
    out_dir = out_dir or config.str("out_dir")
    os.makedirs(out_dir, exist_ok=True)
    master_seed = int(seed) if seed is not None else config.int("seed", 1)
    model_name = config.str("model", "lgss")
    variant = config.str("variant", "pmh0")
    grid = config.float_list("gamma_grid")
    if not grid:
        raise ConfigError("gamma_grid must be non-empty")
    criterion = config.str("criterion", "band")
    band = config.float_list("target_band", [0.7, 0.8])
    n_iter = config.int("iterations", 3000)
    burn_in = config.int("burn_in", 1000)
    lag = config.int("lag", 12)
    n_particles = config.int("n_particles", 100)
    filter_variant = config.str("filter", "fully_adapted" if model_name.startswith("lgss") else "bootstrap")

    if model_name == "earthquake":
        y = load_earthquake_data(config.str("data", os.path.join("data", "earthquakes.csv")))
        theta_init = np.asarray(config.float_list("theta_init", [0.5, 0.5, 18.0]))
    else:
        model = build_model(model_name)
        T = config.int("T", 250)
        rng = np.random.default_rng(np.random.SeedSequence([master_seed, 0]))
        truth = np.asarray(LGSS_TRUE_THETA)
        if model_name == "lgss-rescaled":
            truth = np.array([truth[0], truth[1] / 10.0])
        _, y = simulate_lgss(model, truth, T, rng)
        theta_init = np.asarray(config.float_list("theta_init", truth.tolist()))

    jobs = [
        {
            "index": i + 1,
            "seed": master_seed,
            "model": model_name,
            "observations": y.tolist(),
            "variant": variant,
            "policy": "standard",
            "gamma": gamma,
            "theta_init": theta_init.tolist(),
            "n_particles": n_particles,
            "filter_variant": filter_variant,
            "lag": lag,
            "n_iter": n_iter,
            "burn_in": burn_in,
        }
        for i, gamma in enumerate(grid)
    ]
    n_workers = resolve_workers(config, len(jobs), workers)
    outcome = _run_jobs(jobs, _chain_job, n_workers)

    rows = []
    for job, result, error in outcome:
        if error:
            rows.append({"gamma": job["gamma"], "acceptance": np.nan, "total_iact": np.nan, "error": error})
        else:
            rows.append(
                {"gamma": job["gamma"], "acceptance": result["acceptance"],
                 "total_iact": float(np.sum(result["iact"])), "error": None}
            )
    valid = [r for r in rows if r["error"] is None]
    if not valid:
        raise RuntimeError("every pilot chain failed")
    warning = None
    if criterion == "iact":
        best = min(valid, key=lambda r: r["total_iact"])
    else:
        in_band = [r for r in valid if band[0] <= r["acceptance"] <= band[1]]
        if in_band:
            best = min(in_band, key=lambda r: r["total_iact"])
        else:
            mid = 0.5 * (band[0] + band[1])
            best = min(valid, key=lambda r: abs(r["acceptance"] - mid))
            warning = "no grid value reached the target acceptance band; nearest reported"
    result = {
        "variant": variant,
        "model": model_name,
        "criterion": criterion,
        "target_band": band,
        "grid": rows,
        "recommended_gamma": best["gamma"],
        "warning": warning,
    }
    _write_csv(
        os.path.join(out_dir, "tune.csv"),
        ["gamma", "acceptance", "total_iact"],
        [[r["gamma"], r["acceptance"], r["total_iact"]] for r in rows],
    )
    with open(os.path.join(out_dir, "tune.json"), "w", encoding="utf-8") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return result


# ---------------------------------------------------------------------------
# dataset simulation entry used by the command line
# ---------------------------------------------------------------------------


def simulate_to_csv(model_name: str, n_steps: int, seed: int, path) -> None:
    rng = np.random.default_rng(seed)
    if model_name in ("lgss", "lgss-sigmae1", "lgss-rescaled"):
        model = build_model(model_name)
        theta = np.asarray(LGSS_TRUE_THETA)
        if model_name == "lgss-rescaled":
            theta = np.array([theta[0], theta[1] / 10.0])
        _, y = simulate_lgss(model, theta, n_steps, rng)
    elif model_name == "earthquake":
        model = build_model(model_name)
        theta = np.array([0.88, 0.15, 16.58])
        _, y = simulate_counts(model, theta, n_steps, rng)
    else:
        raise ConfigError(f"unknown model {model_name!r}")
    save_observations(path, y)

"""Monte-Carlo harness: per-trial metrics, sweeps and phase-transition search.

Every trial draws its data from ``trial_rng(master_seed, *point_key, trial)``,
so results do not depend on worker count or scheduling. Aggregation walks
trials in index order.
"""

from __future__ import annotations

import csv
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bayesian_pursuit, classic_pursuit
from .bg_model import (
    GroundTruth,
    ModelParams,
    clamp_probabilities,
    generate_trial,
    perturb_priors,
    posterior_prior_draw,
    trial_rng,
)
from .config import ExperimentConfig, split_algorithm
from .core_linalg import Dictionary
from .state import StopRule

CSV_HEADER = ("sweep_var", "sweep_value", "algorithm", "MSE", "MSE_se", "Pe", "Pe_se", "runtime_s", "trials", "excluded")
NO_CROSSING = "no-crossing"
STOMP_FLOOR = 1e-5
FIXED_DICT_KEY = 0xD1C7
METADATA = {
    "mse_normalization": "per-trial mean over the true support (divide by K), then averaged over trials",
    "pe_definition": "per-trial fraction of mismatched support entries, averaged over trials",
    "standard_error": "sample std (ddof=1) / sqrt(trials used)",
    "dictionary": "fresh column-normalized Gaussian per trial unless fixed_dictionary = true",
    "runtime": "wall clock per run; written as nan unless metrics lists runtime",
    "bsp_P": "P = K unless bsp.P is set",
    "stomp_threshold": "CFAR baseline approximation: t_cfar * ||r|| / sqrt(N)",
}


def mse_on_true_support(truth: GroundTruth, estimate) -> float:
    """(1/K) sum over the true support of (s_hat x_hat - x)^2."""
    K = truth.K
    if K < 1:
        raise ValueError("MSE on the true support is undefined for K = 0")
    x_eff = np.where(estimate.s_hat, estimate.x_hat, 0.0)
    d = x_eff[truth.s] - truth.x[truth.s]
    return float(d @ d) / K


def support_error_rate(truth: GroundTruth, estimate) -> float:
    return float(np.mean(np.asarray(estimate.s_hat, dtype=bool) != truth.s))


@dataclass(frozen=True)
class MetricRow:
    algorithm: str
    sweep_var: str
    sweep_value: object
    mse: float
    mse_se: float
    pe: float
    pe_se: float
    runtime_s: float
    trials: int
    excluded: int
    note: str = ""

    def csv_fields(self) -> list:
        return [self.sweep_var, _fmt(self.sweep_value), self.algorithm, _fmt(self.mse), _fmt(self.mse_se),
                _fmt(self.pe), _fmt(self.pe_se), _fmt(self.runtime_s), str(self.trials), str(self.excluded)]


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "nan" if math.isnan(v) else repr(v)


def _mean_se(values):
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        return math.nan, math.nan
    se = float(np.std(a, ddof=1) / math.sqrt(a.size)) if a.size > 1 else math.nan
    return float(np.mean(a)), se


def pooled_se(se1: float, se2: float) -> float:
    return math.sqrt(se1 * se1 + se2 * se2)


def default_feed(cfg: ExperimentConfig) -> str:
    return {"uniform": "uniform", "beta": "informed", "beta-perturbed": "perturbed"}[cfg.prior_mode]


def make_trial(cfg: ExperimentConfig, N: int, K: int, sigma2_w: float, key, dictionary=None):
    """Data and prior vectors for one trial; the stream is fixed by ``key``."""
    rng = trial_rng(cfg.master_seed, *key)
    if dictionary is None:
        dictionary = Dictionary.gaussian(N, cfg.M, rng)
    M = cfg.M
    truth = generate_trial(dictionary, K, rng, sigma2_x=cfg.sigma2_x, sigma2_w=sigma2_w)
    informed = perturbed = None
    if cfg.prior_mode != "uniform":
        # support stays a uniform K-subset; priors are drawn given it
        informed = posterior_prior_draw(truth.s, cfg.beta_alpha, cfg.beta_beta, rng)
        perturbed = perturb_priors(informed, cfg.delta_p, rng)
    uniform = clamp_probabilities(np.full(M, K / M))
    priors = {"uniform": uniform, "informed": informed, "perturbed": perturbed}
    return dictionary, truth, priors


def run_algorithm(spec: str, cfg: ExperimentConfig, dictionary: Dictionary, truth: GroundTruth, priors, sigma2_w: float):
    """Run one configured algorithm on one trial and return its report."""
    algo, feed = split_algorithm(spec)
    K = truth.K
    y = truth.y
    max_iter = cfg.max_iter or None
    if algo in classic_pursuit.ALGORITHMS:
        if algo == "stomp":
            floor = STOMP_FLOOR * float(np.linalg.norm(y))
        elif algo in ("mp", "omp"):
            floor = math.sqrt(dictionary.n_rows * sigma2_w)
        else:
            floor = 0.0
        stop = StopRule(max_iter=max_iter, residual_floor=floor)
        return classic_pursuit.run(algo, dictionary, y, stop, K=K, t_cfar=cfg.t_cfar, max_stages=cfg.stomp_max_stages)
    p = priors[feed or default_feed(cfg)]
    params = ModelParams(sigma2_w, cfg.sigma2_x, p)
    adaptive = getattr(cfg, f"{algo}_adaptive_noise")
    return bayesian_pursuit.run(
        algo, dictionary, y, params, StopRule(max_iter=max_iter),
        adaptive_noise=adaptive, K=K, P=(cfg.bsp_P or K),
    )


def run_trial(args):
    """Worker entry point: metrics per algorithm for one trial.

    Returns a tuple of (mse, pe, runtime) per algorithm, or None where the
    run failed with a linear-algebra error.
    """
    cfg, algorithms, N, K, sigma2_w, key, dictionary = args
    dictionary, truth, priors = make_trial(cfg, N, K, sigma2_w, key, dictionary)
    out = []
    for spec in algorithms:
        t0 = time.perf_counter()
        try:
            report = run_algorithm(spec, cfg, dictionary, truth, priors, sigma2_w)
        except np.linalg.LinAlgError:
            out.append(None)
            continue
        elapsed = time.perf_counter() - t0
        out.append((mse_on_true_support(truth, report), support_error_rate(truth, report), elapsed))
    return out


def _workers(cfg: ExperimentConfig, override=None) -> int:
    w = override if override is not None else cfg.workers
    return w if w and w > 0 else (os.cpu_count() or 1)


def _fixed_dictionary(cfg: ExperimentConfig, N: int):
    if not cfg.fixed_dictionary:
        return None
    return Dictionary.gaussian(N, cfg.M, trial_rng(cfg.master_seed, FIXED_DICT_KEY, N))


def run_trials(cfg: ExperimentConfig, algorithms, N: int, K: int, sigma2_w: float, point_key, pool=None):
    """Per-trial results in trial order for one point."""
    dictionary = _fixed_dictionary(cfg, N)
    jobs = [(cfg, tuple(algorithms), N, K, sigma2_w, (*point_key, t), dictionary) for t in range(cfg.trials)]
    if pool is None:
        return [run_trial(j) for j in jobs]
    return list(pool.map(run_trial, jobs, chunksize=max(1, len(jobs) // 32)))


def aggregate(cfg: ExperimentConfig, algorithms, results, sweep_var, sweep_value):
    rows = []
    for a, spec in enumerate(algorithms):
        ok = [r[a] for r in results if r[a] is not None]
        mse, mse_se = _mean_se([m for m, _, _ in ok])
        pe, pe_se = _mean_se([p for _, p, _ in ok])
        runtime = float(np.mean([t for _, _, t in ok])) if ok and "runtime" in cfg.metrics else math.nan
        rows.append(MetricRow(spec, sweep_var, sweep_value, mse, mse_se, pe, pe_se, runtime, len(ok), len(results) - len(ok)))
    return rows


def run_sweep(cfg: ExperimentConfig, workers=None) -> list:
    """Rows for every (sweep point, algorithm) pair, in config order."""
    rows = []
    n_workers = _workers(cfg, workers)
    pool = ProcessPoolExecutor(max_workers=n_workers) if n_workers > 1 else None
    try:
        for index, value in enumerate(cfg.sweep_values):
            K, sigma2_w = cfg.point(value)
            if K == 0:
                rows.extend(
                    MetricRow(spec, cfg.sweep_var, value, math.nan, math.nan, math.nan, math.nan, math.nan,
                              0, cfg.trials, "skipped: K = 0 leaves the MSE undefined")
                    for spec in cfg.algorithms
                )
                continue
            results = run_trials(cfg, cfg.algorithms, cfg.N, K, sigma2_w, (index,), pool)
            rows.extend(aggregate(cfg, cfg.algorithms, results, cfg.sweep_var, value))
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


def write_csv(rows, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow(row.csv_fields())


def environment_stamp() -> dict:
    import scipy

    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }


def write_summary(path, cfg: ExperimentConfig, rows=(), extra=None) -> None:
    doc = {
        "config": cfg.to_dict(),
        "environment": environment_stamp(),
        "metadata": METADATA,
        "notes": {f"{r.algorithm}@{r.sweep_value}": r.note for r in rows if r.note},
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# phase transitions ---------------------------------------------------------


@dataclass(frozen=True)
class PhasePoint:
    algorithm: str
    N_over_M: float
    N: int
    K_cross: float        # nan when there is no crossing
    status: str           # "crossing" or NO_CROSSING

    @property
    def K_over_N(self) -> float:
        return self.K_cross / self.N


def find_crossing(metric, k_max: int, target: float):
    """Interpolated K where a metric increasing in K crosses ``target``.

    ``metric(K)`` is smoothed over K-1, K, K+1 (clipped to [1, k_max]) before
    a bisection on the grid. Returns None when the smoothed metric does not
    cross inside [1, k_max].
    """
    cache = {}

    def raw(k):
        if k not in cache:
            cache[k] = float(metric(k))
        return cache[k]

    def smooth(k):
        ks = [j for j in (k - 1, k, k + 1) if 1 <= j <= k_max]
        return sum(raw(j) for j in ks) / len(ks)

    if k_max < 2:
        return None
    lo, hi = 1, k_max
    m_lo, m_hi = smooth(lo), smooth(hi)
    if m_lo > target or m_hi <= target:
        return None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        m = smooth(mid)
        if m <= target:
            lo, m_lo = mid, m
        else:
            hi, m_hi = mid, m
    return lo + (target - m_lo) / (m_hi - m_lo)


def phase_transition(cfg: ExperimentConfig, target_metric=None, target_value=None, evaluate=None, workers=None) -> list:
    """Crossing points (N/M, K/N) per algorithm and N on ``cfg.phase_N_over_M``.

    ``evaluate(algorithm, N, K)`` returns the metric; by default it runs
    ``cfg.trials`` Monte-Carlo trials keyed by (N, K).
    """
    target_metric = target_metric or cfg.phase_metric
    target_value = cfg.phase_target if target_value is None else target_value
    if not target_value > 0:
        raise ValueError("target value must be positive")
    if target_metric not in ("mse", "pe"):
        raise ValueError("target metric must be mse or pe")
    n_workers = _workers(cfg, workers)
    pool = ProcessPoolExecutor(max_workers=n_workers) if evaluate is None and n_workers > 1 else None

    def monte_carlo(spec, N, K):
        results = run_trials(cfg, (spec,), N, K, cfg.sigma2_w[0], (N, K), pool)
        row = aggregate(cfg, (spec,), results, "K", K)[0]
        return row.mse if target_metric == "mse" else row.pe

    evaluate = evaluate or monte_carlo
    points = []
    try:
        for spec in cfg.algorithms:
            for ratio in cfg.phase_N_over_M:
                N = max(1, round(ratio * cfg.M))
                k_max = max(1, min(cfg.M, int(cfg.phase_k_max_ratio * N)))
                k = find_crossing(lambda K: evaluate(spec, N, K), k_max, target_value)
                if k is None:
                    points.append(PhasePoint(spec, ratio, N, math.nan, NO_CROSSING))
                else:
                    points.append(PhasePoint(spec, ratio, N, k, "crossing"))
    finally:
        if pool is not None:
            pool.shutdown()
    return points


def write_phase_csv(points, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("algorithm", "N_over_M", "N", "K_over_N", "K_cross", "status"))
        for p in points:
            w.writerow((p.algorithm, _fmt(p.N_over_M), p.N, _fmt(p.K_over_N), _fmt(p.K_cross), p.status))


# exact small-scale check ---------------------------------------------------

THEOREM_KEY = 0x7E01


@dataclass(frozen=True)
class TheoremInstance:
    index: int
    dictionary: Dictionary
    y: np.ndarray
    noise_free: bool
    K: int


def theorem1_instances(cfg: ExperimentConfig):
    """Seeded instances; the first ``theorem.noise_free`` have y = D x exactly with ||x||_0 < N."""
    N, M = cfg.theorem_N, cfg.theorem_M
    for i in range(cfg.theorem_instances):
        rng = trial_rng(cfg.master_seed, THEOREM_KEY, i)
        dictionary = Dictionary.gaussian(N, M, rng)
        K = int(rng.integers(1, min(N, M + 1)))
        noise_free = i < cfg.theorem_noise_free
        truth = generate_trial(dictionary, K, rng, sigma2_x=1.0, sigma2_w=0.0 if noise_free else cfg.theorem_sigma2_w)
        yield TheoremInstance(i, dictionary, truth.y, noise_free, K)

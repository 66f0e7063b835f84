"""Brute-force solvers for the l0-penalized problem and the Bernoulli-Gaussian MAP problem.

Both enumerate all 2^M supports, ordered by popcount then lexicographically,
so M is limited to 20.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .bg_model import ModelParams, log_joint
from .core_linalg import Dictionary, lsq_pinv_on_support, ridge_solve_on_support

MAX_ATOMS = 20
VALUE_TOL = 1e-9
ZERO_TOL = 1e-9


@dataclass
class SolutionSet:
    supports: list
    coefs: list
    objective_value: float

    def __len__(self):
        return len(self.coefs)


@dataclass
class Theorem1Report:
    match: bool
    l0_set: SolutionSet
    map_set: SolutionSet
    lambda_used: float
    tolerance: float


def all_supports(M: int):
    """Every boolean mask of length M, by increasing popcount then lexicographic order."""
    if M > MAX_ATOMS:
        raise ValueError(f"exhaustive enumeration refused for M={M} > {MAX_ATOMS}")
    for k in range(M + 1):
        for idx in combinations(range(M), k):
            s = np.zeros(M, dtype=bool)
            s[list(idx)] = True
            yield s


def l0_count(x) -> int:
    """Entries with |x_i| > 1e-9 ||x||."""
    x = np.asarray(x, dtype=float)
    scale = np.linalg.norm(x)
    return int(np.sum(np.abs(x) > ZERO_TOL * scale)) if scale > 0 else 0


def l0_cost(dictionary: Dictionary, y, s, lam: float):
    """f(s) and its minimizer x*(s) = pinv(D_s) y."""
    x = lsq_pinv_on_support(dictionary, s, y)
    r = y - dictionary.data @ x
    return float(r @ r) + lam * l0_count(x), x


def map_estimate(dictionary: Dictionary, y, s, params: ModelParams) -> np.ndarray:
    """Per-support maximizer of log p(y, x, s) over x."""
    if params.flat_prior:
        return lsq_pinv_on_support(dictionary, s, y)
    return ridge_solve_on_support(dictionary, s, y, params.eps)


def map_cost(dictionary: Dictionary, y, s, params: ModelParams):
    """g(s, sigma2_x) = ||y - D x_hat||^2 + eps ||x_hat||^2 + sum_i lam_i s_i.

    Equal to -2 sigma2_w log p(y, x_hat(s), s) up to an additive constant
    that does not depend on s.
    """
    x = map_estimate(dictionary, y, s, params)
    r = y - dictionary.data @ x
    return float(r @ r) + params.eps * float(x @ x) + float(params.penalty @ s), x


def _collect(candidates, best, tol_value, tol_coef):
    supports, coefs = [], []
    for value, s, x in candidates:
        if value > best + tol_value:
            continue
        if any(np.allclose(x, other, rtol=0, atol=tol_coef) for other in coefs):
            continue
        supports.append(s)
        coefs.append(x)
    return supports, coefs


def solve_l0(dictionary: Dictionary, y, lam: float) -> SolutionSet:
    """All minimizers of ||y - Dx||^2 + lam ||x||_0, deduplicated by coefficient vector."""
    y = np.asarray(y, dtype=float)
    results = []
    for s in all_supports(dictionary.n_cols):
        value, x = l0_cost(dictionary, y, s, lam)
        results.append((value, s, x))
    best = min(v for v, _, _ in results)
    tol_coef = 1e-9 * (1.0 + float(np.linalg.norm(y)))
    supports, coefs = _collect(results, best, VALUE_TOL, tol_coef)
    return SolutionSet(supports, coefs, best)


def solve_bg_map(dictionary: Dictionary, y, params: ModelParams) -> SolutionSet:
    """All maximizers of log p(y, x, s); ``objective_value`` is the maximum log-probability."""
    y = np.asarray(y, dtype=float)
    results = []
    for s in all_supports(dictionary.n_cols):
        x = map_estimate(dictionary, y, s, params)
        results.append((-log_joint(dictionary, params, x, s, y), s, x))
    best = min(v for v, _, _ in results)
    tol_coef = 1e-9 * (1.0 + float(np.linalg.norm(y)))
    supports, coefs = _collect(results, best, VALUE_TOL, tol_coef)
    return SolutionSet(supports, coefs, -best)


def same_sets(a, b, tol: float) -> bool:
    """Set equality of coefficient vectors up to ``tol`` in max-norm."""
    def covered(xs, ys):
        return all(any(np.max(np.abs(x - z)) <= tol for z in ys) for x in xs)

    return covered(a, b) and covered(b, a)


def theorem1_lambda(p: float, sigma2_w: float) -> float:
    return 2.0 * sigma2_w * math.log((1.0 - p) / p)


def verify_theorem1(dictionary: Dictionary, y, p: float, sigma2_w: float, sigma2_x_large: float = 1e10) -> Theorem1Report:
    """Compare the l0 solution set with the BG MAP solution set at large sigma2_x."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if sigma2_x_large < 1e8:
        raise ValueError("sigma2_x_large must be at least 1e8")
    y = np.asarray(y, dtype=float)
    lam = theorem1_lambda(p, sigma2_w)
    params = ModelParams.uniform(dictionary.n_cols, p, sigma2_w, sigma2_x_large)
    l0_set = solve_l0(dictionary, y, lam)
    map_set = solve_bg_map(dictionary, y, params)
    tol = 1e-5 * (1.0 + float(np.linalg.norm(y)))
    return Theorem1Report(same_sets(l0_set.coefs, map_set.coefs, tol), l0_set, map_set, lam, tol)


def objective_table(dictionary: Dictionary, y, p: float, sigma2_w: float, sigma2_x_large: float = 1e10):
    """Rows (support indices, f(s), g(s)) over every support, for CSV export."""
    y = np.asarray(y, dtype=float)
    lam = theorem1_lambda(p, sigma2_w)
    params = ModelParams.uniform(dictionary.n_cols, p, sigma2_w, sigma2_x_large)
    rows = []
    for s in all_supports(dictionary.n_cols):
        f, _ = l0_cost(dictionary, y, s, lam)
        g, _ = map_cost(dictionary, y, s, params)
        rows.append((tuple(int(i) for i in np.flatnonzero(s)), f, g))
    return rows

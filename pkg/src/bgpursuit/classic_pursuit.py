"""Reference MP, OMP, StOMP (CFAR thresholding) and SP.

Used as experiment baselines and as the limit cases the Bayesian algorithms
must reproduce. All argmax ties resolve to the lowest atom index.
"""

from __future__ import annotations

import math

import numpy as np

from .core_linalg import Dictionary, RankDeficientError, correlate_all, lsq_pinv_on_support, residual, PINV_RCOND
from .state import AlgoReport, PursuitState, StopRule

ALGORITHMS = ("mp", "omp", "stomp", "sp")
T_CFAR = 2.5
STOMP_STAGES = 10


def _state(dictionary, y, x, s, n) -> PursuitState:
    x = np.where(s, x, 0.0)
    r = residual(dictionary, x, y)
    return PursuitState(x, s, r, n, -float(r @ r))


def _pinv_refit(dictionary, y, s, check_rank=True) -> np.ndarray:
    if check_rank:
        ds = dictionary.columns(s)
        k = ds.shape[1]
        if k > dictionary.n_rows:
            raise RankDeficientError(f"{k} atoms exceed dimension {dictionary.n_rows}")
        if k:
            sv = np.linalg.svd(ds, compute_uv=False)
            rank = int(np.sum(sv > PINV_RCOND * sv[0]))
            if rank < k:
                raise RankDeficientError(f"support columns have rank {rank} < {k}")
    return lsq_pinv_on_support(dictionary, s, y)


def mp_step(state: PursuitState, dictionary: Dictionary, y) -> PursuitState:
    c = correlate_all(dictionary, state.r)
    j = int(np.argmax(c * c))
    x, s = state.x_hat.copy(), state.s_hat.copy()
    x[j] = x[j] + c[j]
    s[j] = True
    return _state(dictionary, y, x, s, state.n + 1)


def omp_step(state: PursuitState, dictionary: Dictionary, y) -> PursuitState:
    c = correlate_all(dictionary, state.r)
    j = int(np.argmax(c * c))
    s = state.s_hat.copy()
    s[j] = True
    return _state(dictionary, y, _pinv_refit(dictionary, y, s), s, state.n + 1)


def stomp_threshold(r, t_cfar: float = T_CFAR) -> float:
    """Squared-correlation threshold (t * ||r|| / sqrt(N))^2."""
    r = np.asarray(r, dtype=float)
    return (t_cfar * float(np.linalg.norm(r)) / math.sqrt(r.shape[0])) ** 2


def stomp_step(state: PursuitState, dictionary: Dictionary, y, t_cfar: float = T_CFAR) -> PursuitState:
    """Add every atom whose squared correlation exceeds the stage threshold.

    Returns the unchanged iterate (with n advanced) when nothing passes.
    """
    if not t_cfar > 0:
        raise ValueError("t_cfar must be positive")
    c = correlate_all(dictionary, state.r)
    new = (c * c > stomp_threshold(state.r, t_cfar)) & ~state.s_hat
    if not new.any():
        return PursuitState(state.x_hat, state.s_hat, state.r, state.n + 1, state.objective)
    s = state.s_hat | new
    return _state(dictionary, y, _pinv_refit(dictionary, y, s, check_rank=False), s, state.n + 1)


def sp_expand(state: PursuitState, dictionary: Dictionary, y, K: int) -> PursuitState:
    """First SP half-step: add the K inactive atoms best correlated with r."""
    c = correlate_all(dictionary, state.r)
    idx = np.flatnonzero(~state.s_hat)
    add = idx[np.argsort(-(c[idx] ** 2), kind="stable")[:K]]
    s = state.s_hat.copy()
    s[add] = True
    return _state(dictionary, y, _pinv_refit(dictionary, y, s), s, state.n)


def sp_step(state: PursuitState, dictionary: Dictionary, y, K: int) -> PursuitState:
    half = sp_expand(state, dictionary, y, K)
    idx = half.support
    keep = idx[np.argsort(-np.abs(half.x_hat[idx]), kind="stable")[:K]]
    s = np.zeros_like(state.s_hat)
    s[keep] = True
    return _state(dictionary, y, _pinv_refit(dictionary, y, s), s, state.n + 1)


def run(
    algorithm: str,
    dictionary: Dictionary,
    y,
    stop: StopRule = StopRule(),
    *,
    K: int | None = None,
    t_cfar: float = T_CFAR,
    max_stages: int = STOMP_STAGES,
) -> AlgoReport:
    """Run a classic pursuit from the zero state.

    MP/OMP stop once ``||r|| <= stop.residual_floor``; StOMP runs at most
    ``max_stages`` stages and stops when no atom passes the threshold; SP
    stops (keeping the previous iterate) once the support repeats or the
    residual norm stops decreasing. The trace records ``-||r||^2``.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
    y = np.asarray(y, dtype=float)
    M, N = dictionary.n_cols, dictionary.n_rows
    if y.shape != (N,):
        raise ValueError(f"y must have {N} entries")
    if algorithm == "sp" and K is None:
        raise ValueError("sp needs the target sparsity K")
    default_iter = {"mp": 4 * M, "omp": min(N, M), "stomp": max_stages, "sp": M}[algorithm]
    max_iter = default_iter if stop.max_iter is None else stop.max_iter
    if algorithm == "stomp":
        max_iter = min(max_iter, max_stages)

    state = PursuitState.initial(y, M)
    state = PursuitState(state.x_hat, state.s_hat, state.r, 0, -float(y @ y))
    report = AlgoReport(algorithm, state, 0, "max_iter", options={"K": K, "t_cfar": t_cfar, "max_stages": max_stages})
    if state.residual_norm <= stop.residual_floor:
        report.stop_reason = "residual_floor"
        return report
    for _ in range(max_iter):
        if algorithm == "mp":
            new = mp_step(state, dictionary, y)
        elif algorithm == "omp":
            if state.s_hat.sum() >= N:
                report.stop_reason = "full_support"
                break
            new = omp_step(state, dictionary, y)
        elif algorithm == "stomp":
            new = stomp_step(state, dictionary, y, t_cfar)
            if np.array_equal(new.s_hat, state.s_hat):
                report.stop_reason = "no_selection"
                break
        else:
            new = sp_step(state, dictionary, y, K)
            if state.n > 0 and np.array_equal(new.s_hat, state.s_hat):
                report.stop_reason = "fixed_point"
                break
            if state.n > 0 and new.residual_norm >= state.residual_norm:
                report.stop_reason = "residual_increase"
                break
        report.trace.append(new.objective)
        report.supports.append(new.support)
        report.iterations += 1
        state = new
        report.state = state
        if state.residual_norm <= stop.residual_floor:
            report.stop_reason = "residual_floor"
            break
    return report

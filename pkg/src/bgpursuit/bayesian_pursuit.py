"""Bayesian pursuit algorithms: BMP, BOMP, BStOMP and BSP.

Each step is a policy over the local decisions of :mod:`local_metrics`.
BMP and BOMP are block-coordinate ascent methods on log p(y, x, s);
BStOMP and BSP trade the ascent property for faster support moves.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .bg_model import ModelParams, _log_joint_terms
from .core_linalg import Dictionary, residual, ridge_solve_on_support
from .local_metrics import decisions
from .state import AlgoReport, PursuitState, StopRule

ALGORITHMS = ("bmp", "bomp", "bstomp", "bsp")
ASCENT = frozenset({"bmp", "bomp"})
NOISE_FLOOR = 1e-12


def objective(params: ModelParams, r, x, s) -> float:
    return _log_joint_terms(params, float(r @ r), np.where(s, x, 0.0), s, r.shape[0])


def _finish(dictionary, y, params, x, s, n) -> PursuitState:
    x = np.where(s, x, 0.0)
    r = residual(dictionary, x, y)
    return PursuitState(x, s, r, n, objective(params, r, x, s))


def _refit(dictionary, y, params, s, n) -> PursuitState:
    x = ridge_solve_on_support(dictionary, s, y, params.eps)
    return _finish(dictionary, y, params, x, s, n)


def bmp_step(state: PursuitState, dictionary: Dictionary, y, params: ModelParams) -> PursuitState:
    """Replace the single coordinate pair giving the largest objective increase."""
    dec = decisions(dictionary, params, state)
    j = int(np.argmax(dec.gain))
    if not dec.gain[j] > 0:
        return _finish(dictionary, y, params, state.x_hat, state.s_hat, state.n + 1)
    x, s = state.x_hat.copy(), state.s_hat.copy()
    x[j], s[j] = dec.x_tilde[j], dec.s_tilde[j]
    return _finish(dictionary, y, params, x, s, state.n + 1)


def bomp_step(state: PursuitState, dictionary: Dictionary, y, params: ModelParams) -> PursuitState:
    """BMP's support move followed by a ridge refit of all active coefficients."""
    dec = decisions(dictionary, params, state)
    j = int(np.argmax(dec.gain))
    s = state.s_hat.copy()
    if dec.gain[j] > 0:
        s[j] = dec.s_tilde[j]
    return _refit(dictionary, y, params, s, state.n + 1)


def bstomp_step(state: PursuitState, dictionary: Dictionary, y, params: ModelParams) -> PursuitState:
    """Set every support entry to its locally optimal value, then refit."""
    dec = decisions(dictionary, params, state)
    return _refit(dictionary, y, params, dec.s_tilde.copy(), state.n + 1)


def _largest(values, candidates, count):
    """Indices of the ``count`` largest values among candidates, lowest index first on ties."""
    idx = np.flatnonzero(candidates)
    order = np.argsort(-values[idx], kind="stable")
    return idx[order[:count]]


def _smallest(values, candidates, count):
    idx = np.flatnonzero(candidates)
    order = np.argsort(values[idx], kind="stable")
    return idx[order[:count]]


def bsp_half_support(state, dictionary, params, P: int, forward_only: bool = False) -> np.ndarray:
    """Support after the first BSP half-step (at most P flips)."""
    dec = decisions(dictionary, params, state)
    s = state.s_hat.copy()
    if forward_only:
        add = _largest(dec.flip_value, ~s, P)
        s[add] = True
        return s
    flips = _largest(dec.bsp_gain, dec.s_tilde != s, P)
    s[flips] = ~s[flips]
    return s


def bsp_final_support(state, dictionary, params, K: int, forward_only: bool = False) -> np.ndarray:
    """Support with exactly K atoms, chosen around the half-step iterate."""
    dec = decisions(dictionary, params, state)
    if forward_only:
        s = np.zeros_like(state.s_hat)
        s[_largest(dec.flip_value, state.s_hat, K)] = True
        return s
    s = dec.s_tilde.copy()
    active = int(s.sum())
    if active > K:
        s[_smallest(dec.flip_value, s, active - K)] = False
    elif active < K:
        s[_largest(dec.flip_value, ~s, K - active)] = True
    return s


def bsp_step(
    state: PursuitState,
    dictionary: Dictionary,
    y,
    params: ModelParams,
    P: int,
    K: int,
    forward_only: bool = False,
) -> PursuitState:
    """Two half-steps: at most P local flips, then a move to an exactly K-sparse support.

    ``forward_only`` restricts the first half-step to adding exactly P atoms
    and the second to removing atoms, which is the subspace-pursuit limit.
    """
    M, N = dictionary.n_cols, dictionary.n_rows
    if not 1 <= P <= M:
        raise ValueError(f"P must lie in [1, {M}], got {P}")
    if not 0 <= K <= min(N, M):
        raise ValueError(f"K must lie in [0, {min(N, M)}], got {K}")
    s_half = bsp_half_support(state, dictionary, params, P, forward_only)
    half = _refit(dictionary, y, params, s_half, state.n)
    s_new = bsp_final_support(half, dictionary, params, K, forward_only)
    return _refit(dictionary, y, params, s_new, state.n + 1)


def run(
    algorithm: str,
    dictionary: Dictionary,
    y,
    params: ModelParams,
    stop: StopRule = StopRule(),
    *,
    adaptive_noise: bool = False,
    P: int | None = None,
    K: int | None = None,
    forward_only: bool = False,
) -> AlgoReport:
    """Iterate one Bayesian pursuit algorithm from the zero state.

    With ``adaptive_noise`` the noise variance is re-estimated before every
    step as ||r||^2 / N (floored at 1e-12).
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
    y = np.asarray(y, dtype=float)
    M, N = dictionary.n_cols, dictionary.n_rows
    if y.shape != (N,) or params.p.shape != (M,):
        raise ValueError(f"y must have {N} entries and p must have {M}")
    if algorithm == "bsp":
        if K is None:
            raise ValueError("bsp needs the target sparsity K")
        P = K if P is None else P
        P = max(P, 1)
    max_iter = stop.max_iter if stop.max_iter is not None else 4 * M

    def step_params(state):
        if not adaptive_noise:
            return params
        return params.with_noise(max(float(state.r @ state.r) / N, NOISE_FLOOR))

    state = PursuitState.initial(y, M)
    state = PursuitState(state.x_hat, state.s_hat, state.r, 0, objective(step_params(state), state.r, state.x_hat, state.s_hat))
    options = {"adaptive_noise": adaptive_noise, "P": P, "K": K, "forward_only": forward_only}
    report = AlgoReport(algorithm, state, 0, "max_iter", options=options)
    if state.residual_norm <= stop.residual_floor:
        report.stop_reason = "residual_floor"
        return report

    recent = deque(maxlen=2)
    recent.append(state.s_hat)
    for _ in range(max_iter):
        prm = step_params(state)
        if algorithm == "bmp":
            new = bmp_step(state, dictionary, y, prm)
        elif algorithm == "bomp":
            new = bomp_step(state, dictionary, y, prm)
        elif algorithm == "bstomp":
            new = bstomp_step(state, dictionary, y, prm)
        else:
            new = bsp_step(state, dictionary, y, prm, P, K, forward_only)
        before = objective(prm, state.r, state.x_hat, state.s_hat)
        report.trace.append(new.objective)
        report.supports.append(new.support)
        report.iterations += 1
        prev, state = state, new
        report.state = state

        if stop.fixed_point and state.same_point(prev):
            report.stop_reason = "fixed_point"
            break
        if algorithm in ASCENT and stop.objective_tol is not None and state.objective - before < stop.objective_tol:
            report.stop_reason = "objective_tol"
            break
        if algorithm not in ASCENT and stop.fixed_point and any(np.array_equal(state.s_hat, s) for s in recent):
            report.stop_reason = "support_cycle"
            break
        if state.residual_norm <= stop.residual_floor:
            report.stop_reason = "residual_floor"
            break
        recent.append(state.s_hat)
    return report

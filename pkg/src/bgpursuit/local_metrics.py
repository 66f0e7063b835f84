"""Per-atom decision engine shared by the Bayesian pursuit algorithms.

For atom i, with every other coordinate frozen at the current iterate,

    rho(x_i, s_i) = -||r + (s_hat_i x_hat_i - s_i x_i) d_i||^2 - eps x_i^2 - lam_i s_i

where eps = sigma2_w / sigma2_x and lam_i = 2 sigma2_w log((1 - p_i) / p_i).
This equals 2 sigma2_w log p(y, x, s) up to an additive constant that does
not depend on (x_i, s_i).

Vectorized quantities are stored relative to -||r||^2 so that the gains
used for index selection are computed without cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bg_model import ModelParams
from .core_linalg import Dictionary, correlate_all
from .state import PursuitState


@dataclass(frozen=True)
class AtomDecision:
    x_tilde: float
    s_tilde: bool
    rho_at_decision: float
    rho_s1: float
    rho_s0: float


@dataclass(frozen=True)
class Decisions:
    """Locally optimal (x_tilde, s_tilde) for all atoms at one iterate."""

    corr: np.ndarray        # <r, d_i>
    u: np.ndarray           # <r + x_hat_i d_i, d_i>
    x_tilde: np.ndarray
    s_tilde: np.ndarray
    rel_s1: np.ndarray      # rho_i(1) + ||r||^2
    rel_s0: np.ndarray      # rho_i(0) + ||r||^2
    rel_current: np.ndarray
    gain: np.ndarray        # rho(x_tilde, s_tilde) - rho(current)
    r2: float

    @property
    def rho_s1(self) -> np.ndarray:
        return self.rel_s1 - self.r2

    @property
    def rho_s0(self) -> np.ndarray:
        return self.rel_s0 - self.r2

    @property
    def rho_at_decision(self) -> np.ndarray:
        return np.where(self.s_tilde, self.rho_s1, self.rho_s0)

    @property
    def flip_value(self) -> np.ndarray:
        """rho_i(1) - rho_i(0)."""
        return self.rel_s1 - self.rel_s0

    @property
    def bsp_gain(self) -> np.ndarray:
        return np.abs(self.flip_value)

    def atom(self, i: int) -> AtomDecision:
        return AtomDecision(
            float(self.x_tilde[i]),
            bool(self.s_tilde[i]),
            float(self.rho_at_decision[i]),
            float(self.rho_s1[i]),
            float(self.rho_s0[i]),
        )


def threshold(params: ModelParams, i=None):
    """Correlation-energy level above which activating atom i is locally optimal."""
    t = params.penalty / params.shrink
    return t if i is None else float(t[i])


def adaptive_threshold(r, params: ModelParams, i=None, N: int | None = None):
    """Threshold with sigma2_w replaced by the residual energy ||r||^2 / N."""
    r = np.asarray(r, dtype=float)
    N = r.shape[0] if N is None else N
    s2 = float(r @ r) / N
    scale = 1.0 if params.flat_prior else (params.sigma2_x + s2) / params.sigma2_x
    t = 2.0 * s2 * params.log_odds * scale
    return t if i is None else float(t[i])


def rho(dictionary: Dictionary, params: ModelParams, state: PursuitState, i: int, x_i: float, s_i) -> float:
    """Direct evaluation of rho for atom i (reference formula, O(N))."""
    d = dictionary.data[:, i]
    a = state.x_hat[i] * state.s_hat[i]
    v = state.r + (a - float(s_i) * x_i) * d
    return float(-(v @ v) - params.eps * x_i**2 - params.penalty[i] * float(s_i))


def decisions(dictionary: Dictionary, params: ModelParams, state: PursuitState) -> Decisions:
    """All M local decisions from one correlation sweep."""
    c = correlate_all(dictionary, state.r)
    s = state.s_hat
    a = np.where(s, state.x_hat, 0.0)
    u = c + a
    pen = params.penalty
    shrink, eps = params.shrink, params.eps

    s_tilde = u * u > pen / shrink
    x_tilde = np.where(s_tilde, shrink * u, 0.0)

    rel_s0 = -(2.0 * a * c + a * a)
    rel_s1 = rel_s0 + shrink * u * u - pen
    rel_current = -eps * a * a - pen * s

    # rho(x_tilde, s_tilde) - rho(current), rearranged to avoid cancellation
    gain_on = shrink * (c - eps * a) ** 2 - pen * ~s
    gain_off = pen * s - 2.0 * a * c - (1.0 - eps) * a * a
    gain = np.where(s_tilde, gain_on, gain_off)

    return Decisions(c, u, x_tilde, s_tilde, rel_s1, rel_s0, rel_current, gain, float(state.r @ state.r))


def local_optimum(dictionary: Dictionary, params: ModelParams, state: PursuitState, i: int) -> AtomDecision:
    return decisions(dictionary, params, state).atom(i)


def bsp_gain(decision: AtomDecision) -> float:
    """rho_i(s_tilde) - rho_i(1 - s_tilde); never negative."""
    return abs(decision.rho_s1 - decision.rho_s0)

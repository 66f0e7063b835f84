"""Bernoulli-Gaussian generative model, prior construction and joint log-probability."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core_linalg import Dictionary, DimensionError, read_vector_csv, write_vector_csv

P_CLAMP = 1e-6


def trial_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Counter-based stream for one trial, independent of execution order."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def clamp_probabilities(p) -> np.ndarray:
    return np.clip(np.asarray(p, dtype=float), P_CLAMP, 1.0 - P_CLAMP)


@dataclass(frozen=True)
class ModelParams:
    """Noise variance, coefficient variance and per-atom activation probabilities.

    ``sigma2_x = math.inf`` selects the non-informative coefficient prior:
    shrinkage factors become exactly 1 and the ridge penalty exactly 0.
    """

    sigma2_w: float
    sigma2_x: float
    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.array(self.p, dtype=float, copy=True).reshape(-1)
        if not self.sigma2_w > 0:
            raise ValueError(f"sigma2_w must be positive, got {self.sigma2_w}")
        if not self.sigma2_x > 0:
            raise ValueError(f"sigma2_x must be positive, got {self.sigma2_x}")
        if np.any((p <= 0) | (p >= 1)) or not np.all(np.isfinite(p)):
            raise ValueError("occurrence probabilities must lie strictly inside (0, 1)")
        p.setflags(write=False)
        object.__setattr__(self, "sigma2_w", float(self.sigma2_w))
        object.__setattr__(self, "sigma2_x", float(self.sigma2_x))
        object.__setattr__(self, "p", p)

    @classmethod
    def uniform(cls, n_atoms: int, p: float, sigma2_w: float, sigma2_x: float) -> "ModelParams":
        return cls(sigma2_w, sigma2_x, np.full(n_atoms, float(p)))

    @property
    def flat_prior(self) -> bool:
        return math.isinf(self.sigma2_x)

    @property
    def eps(self) -> float:
        """Ridge weight sigma2_w / sigma2_x."""
        return 0.0 if self.flat_prior else self.sigma2_w / self.sigma2_x

    @property
    def shrink(self) -> float:
        """sigma2_x / (sigma2_x + sigma2_w)."""
        return 1.0 if self.flat_prior else self.sigma2_x / (self.sigma2_x + self.sigma2_w)

    @property
    def log_odds(self) -> np.ndarray:
        """log((1 - p_i) / p_i)."""
        return np.log1p(-self.p) - np.log(self.p)

    @property
    def penalty(self) -> np.ndarray:
        """Per-atom activation cost 2 sigma2_w log((1 - p_i) / p_i)."""
        return 2.0 * self.sigma2_w * self.log_odds

    def with_noise(self, sigma2_w: float) -> "ModelParams":
        return replace(self, sigma2_w=sigma2_w)

    def with_p(self, p) -> "ModelParams":
        return replace(self, p=p)


@dataclass(frozen=True)
class GroundTruth:
    s: np.ndarray
    x: np.ndarray
    y: np.ndarray

    @property
    def K(self) -> int:
        return int(self.s.sum())

    def save(self, prefix) -> None:
        """Write ``<prefix>_s.csv``, ``<prefix>_x.csv`` and ``<prefix>_y.csv``."""
        write_vector_csv(f"{prefix}_s.csv", self.s.astype(float))
        write_vector_csv(f"{prefix}_x.csv", self.x)
        write_vector_csv(f"{prefix}_y.csv", self.y)

    @classmethod
    def load(cls, prefix) -> "GroundTruth":
        s = read_vector_csv(f"{prefix}_s.csv").astype(bool)
        return cls(s, read_vector_csv(f"{prefix}_x.csv"), read_vector_csv(f"{prefix}_y.csv"))


def generate_trial(dictionary: Dictionary, K: int, rng, *, sigma2_x: float, sigma2_w: float) -> GroundTruth:
    """Draw a uniformly random K-subset support, Gaussian amplitudes and noise.

    ``sigma2_w = 0`` is accepted here to produce noise-free observations.
    """
    M, N = dictionary.n_cols, dictionary.n_rows
    if not 0 <= K <= M:
        raise ValueError(f"K must lie in [0, {M}], got {K}")
    if sigma2_w < 0 or not sigma2_x > 0 or math.isinf(sigma2_x):
        raise ValueError("generation needs finite sigma2_x > 0 and sigma2_w >= 0")
    rng = np.random.default_rng(rng)
    idx = np.sort(rng.choice(M, size=K, replace=False))
    s = np.zeros(M, dtype=bool)
    s[idx] = True
    x = np.zeros(M)
    x[idx] = rng.normal(0.0, math.sqrt(sigma2_x), size=K)
    w = rng.normal(0.0, math.sqrt(sigma2_w), size=N) if sigma2_w > 0 else np.zeros(N)
    y = dictionary.data[:, idx] @ x[idx] + w
    return GroundTruth(s, x, y)


def beta_priors(M: int, alpha: float, beta: float, rng) -> np.ndarray:
    if alpha <= 0 or beta <= 0:
        raise ValueError("Beta parameters must be positive")
    return clamp_probabilities(np.random.default_rng(rng).beta(alpha, beta, size=M))


def posterior_prior_draw(s, alpha: float, beta: float, rng) -> np.ndarray:
    """Draw p_i ~ Beta(alpha + s_i, beta + 1 - s_i) for each atom."""
    if alpha <= 0 or beta <= 0:
        raise ValueError("Beta parameters must be positive")
    s = np.asarray(s, dtype=float)
    draws = np.random.default_rng(rng).beta(alpha + s, beta + 1.0 - s)
    return clamp_probabilities(draws)


def perturb_priors(p, delta_p: float, rng) -> np.ndarray:
    """Noisy prior estimates, uniform on [max(0, p_i - dp), min(1, p_i + dp)]."""
    if not 0 <= delta_p <= 1:
        raise ValueError(f"delta_p must lie in [0, 1], got {delta_p}")
    p = np.asarray(p, dtype=float)
    lo = np.maximum(0.0, p - delta_p)
    hi = np.minimum(1.0, p + delta_p)
    u = np.random.default_rng(rng).random(p.shape)
    return clamp_probabilities(lo + (hi - lo) * u)


def log_joint(dictionary: Dictionary, params: ModelParams, x, s, y) -> float:
    """log p(y, x, s) including normalizing constants.

    With the flat coefficient prior (``sigma2_x = inf``) the Gaussian prior
    on x, constant included, is dropped.
    """
    s = np.asarray(s).astype(bool)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    M = dictionary.n_cols
    if s.shape != (M,) or x.shape != (M,) or params.p.shape != (M,):
        raise DimensionError("x, s and p must all have one entry per atom")
    r = y - dictionary.data[:, s] @ x[s]
    return _log_joint_terms(params, float(r @ r), x, s, dictionary.n_rows)


def _log_joint_terms(params: ModelParams, r2: float, x, s, N: int) -> float:
    value = -r2 / (2.0 * params.sigma2_w) - 0.5 * N * math.log(2.0 * math.pi * params.sigma2_w)
    if not params.flat_prior:
        M = x.shape[0]
        value += -float(x @ x) / (2.0 * params.sigma2_x) - 0.5 * M * math.log(2.0 * math.pi * params.sigma2_x)
    p = params.p
    value += float(np.sum(np.where(s, np.log(p), np.log1p(-p))))
    return value


def save_priors(path, p) -> None:
    write_vector_csv(path, p)


def load_priors(path) -> np.ndarray:
    return read_vector_csv(path)

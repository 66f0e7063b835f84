"""Iterate, stopping rule and run report shared by all pursuit algorithms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PursuitState:
    x_hat: np.ndarray
    s_hat: np.ndarray
    r: np.ndarray
    n: int = 0
    objective: float = float("nan")

    @classmethod
    def initial(cls, y, n_atoms: int) -> "PursuitState":
        y = np.asarray(y, dtype=float)
        return cls(np.zeros(n_atoms), np.zeros(n_atoms, dtype=bool), y.copy())

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.s_hat)

    @property
    def effective_x(self) -> np.ndarray:
        return np.where(self.s_hat, self.x_hat, 0.0)

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.r))

    def same_point(self, other: "PursuitState") -> bool:
        return bool(np.array_equal(self.s_hat, other.s_hat) and np.array_equal(self.x_hat, other.x_hat))


@dataclass(frozen=True)
class StopRule:
    """When to end a run.

    ``objective_tol`` only applies to ascent algorithms; ``None`` disables it.
    ``max_iter=None`` lets the algorithm pick its default.
    """

    max_iter: int | None = None
    residual_floor: float = 0.0
    objective_tol: float | None = 1e-10
    fixed_point: bool = True

    def __post_init__(self):
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.residual_floor < 0:
            raise ValueError("residual_floor must be non-negative")


@dataclass
class AlgoReport:
    algorithm: str
    state: PursuitState
    iterations: int
    stop_reason: str
    trace: list = field(default_factory=list)
    supports: list = field(default_factory=list)
    options: dict = field(default_factory=dict)

    @property
    def x_hat(self) -> np.ndarray:
        return self.state.effective_x

    @property
    def s_hat(self) -> np.ndarray:
        return self.state.s_hat

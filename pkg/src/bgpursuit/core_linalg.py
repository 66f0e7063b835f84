"""Dense linear-algebra primitives shared by every pursuit algorithm."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg as sla

NORM_TOL = 1e-12
PINV_RCOND = 1e-10


class DimensionError(ValueError):
    pass


class RankDeficientError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class Dictionary:
    """An N x M matrix whose columns (atoms) have unit l2 norm.

    The stored array is made read-only so that one instance can be shared
    between trials and worker processes.
    """

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=float, copy=True)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise DimensionError(f"dictionary must be a non-empty 2-D array, got shape {data.shape}")
        norms = np.linalg.norm(data, axis=0)
        bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL)
        if bad.size:
            raise ValueError(
                f"dictionary columns must have unit norm; column {bad[0]} has norm {norms[bad[0]]!r}"
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_raw(cls, matrix) -> "Dictionary":
        """Normalize the columns of ``matrix`` and wrap the result."""
        matrix = np.asarray(matrix, dtype=float)
        norms = np.linalg.norm(matrix, axis=0)
        if np.any(norms == 0):
            raise ValueError("cannot normalize a dictionary with an all-zero column")
        return cls(matrix / norms)

    @classmethod
    def gaussian(cls, n_rows: int, n_cols: int, rng) -> "Dictionary":
        """Column-normalized iid Gaussian dictionary."""
        rng = np.random.default_rng(rng)
        return cls.from_raw(rng.standard_normal((n_rows, n_cols)))

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]

    def columns(self, s) -> np.ndarray:
        return self.data[:, _mask(self, s)]


def _mask(dictionary: Dictionary, s) -> np.ndarray:
    s = np.asarray(s)
    if s.shape != (dictionary.n_cols,):
        raise DimensionError(f"support mask has shape {s.shape}, expected ({dictionary.n_cols},)")
    return s.astype(bool)


def _vector(v, n: int, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise DimensionError(f"{what} has shape {v.shape}, expected ({n},)")
    return v


def correlate_all(dictionary: Dictionary, v) -> np.ndarray:
    """Inner products <d_i, v> for every atom."""
    v = _vector(v, dictionary.n_rows, "vector")
    return dictionary.data.T @ v


def residual(dictionary: Dictionary, x, y) -> np.ndarray:
    x = _vector(x, dictionary.n_cols, "coefficient vector")
    y = _vector(y, dictionary.n_rows, "observation")
    nz = np.flatnonzero(x)
    return y - dictionary.data[:, nz] @ x[nz]


def ridge_solve_on_support(dictionary: Dictionary, s, y, eps: float) -> np.ndarray:
    """Solve (D_s^T D_s + eps I) x_s = D_s^T y; zeros outside the support.

    With ``eps == 0`` the masked columns must be linearly independent; the
    system is then solved as an ordinary least-squares problem on D_s, which
    avoids squaring the condition number.
    """
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    mask = _mask(dictionary, s)
    y = _vector(y, dictionary.n_rows, "observation")
    x = np.zeros(dictionary.n_cols)
    k = int(mask.sum())
    if k == 0:
        return x
    ds = dictionary.data[:, mask]
    if eps == 0:
        if k > dictionary.n_rows:
            raise RankDeficientError(
                f"{k} atoms on a support in dimension {dictionary.n_rows}: columns are dependent"
            )
        sol, _, rank, sv = np.linalg.lstsq(ds, y, rcond=PINV_RCOND)
        if rank < k:
            raise RankDeficientError(f"support columns have rank {rank} < {k} (smallest singular value {sv[-1]:.3g})")
        x[mask] = sol
        return x
    if k <= dictionary.n_rows:
        gram = ds.T @ ds
        gram[np.diag_indices_from(gram)] += eps
        try:
            x[mask] = sla.cho_solve(sla.cho_factor(gram, lower=True, check_finite=False), ds.T @ y)
            return x
        except np.linalg.LinAlgError:
            pass
    # singular Gram matrix with eps near rounding level: use the stacked form
    stacked = np.vstack([ds, np.sqrt(eps) * np.eye(k)])
    x[mask] = np.linalg.lstsq(stacked, np.concatenate([y, np.zeros(k)]), rcond=None)[0]
    return x


def lsq_pinv_on_support(dictionary: Dictionary, s, y) -> np.ndarray:
    """Minimum-norm least-squares coefficients on the masked columns."""
    mask = _mask(dictionary, s)
    y = _vector(y, dictionary.n_rows, "observation")
    x = np.zeros(dictionary.n_cols)
    if mask.any():
        x[mask] = np.linalg.pinv(dictionary.data[:, mask], rcond=PINV_RCOND) @ y
    return x


def read_matrix_csv(path, n_cols: int | None = None) -> np.ndarray:
    """Read a CSV of reals, one matrix row per line.

    Errors name the file and the offending line.
    """
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row) or row[0].lstrip().startswith("#"):
                continue
            try:
                values = [float(c) for c in row]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if n_cols is None:
                n_cols = len(values)
            if len(values) != n_cols:
                raise DimensionError(f"{path}:{lineno}: expected {n_cols} columns, found {len(values)}")
            rows.append(values)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def read_vector_csv(path) -> np.ndarray:
    """A vector file holds one value per line."""
    return read_matrix_csv(path, n_cols=1)[:, 0]


def load_dictionary(path) -> Dictionary:
    matrix = read_matrix_csv(path)
    try:
        return Dictionary(matrix)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def write_matrix_csv(path, matrix) -> None:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in matrix:
            w.writerow([repr(float(v)) for v in row])


def write_vector_csv(path, v) -> None:
    write_matrix_csv(path, np.asarray(v, dtype=float).reshape(-1, 1))

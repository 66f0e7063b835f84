"""Flat ``key = value`` configuration files.

Lines starting with ``#`` are comments; nested options use dotted keys
(``bsp.P = 10``). Lists are comma separated; integer grids also accept
``start:stop:step`` (inclusive). All validation problems are reported at once.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

PRIOR_MODES = ("uniform", "beta", "beta-perturbed")
FEEDS = ("uniform", "informed", "perturbed")
METRICS = ("mse", "pe", "runtime")
SWEEP_VARS = ("K", "sigma2_w")
SEED_ENV = "BGPURSUIT_SEED"


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _int_grid(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            start, stop = bits[0], bits[1]
            step = bits[2] if len(bits) > 2 else 1
            if step <= 0:
                raise ValueError(f"non-positive step in {part!r}")
            out.extend(range(start, stop + 1, step))
        else:
            out.append(int(part))
    return tuple(out)


def _float(text: str) -> float:
    text = text.strip().lower()
    if text in ("inf", "+inf", "infinity"):
        return math.inf
    return float(text)


def _float_list(text: str) -> tuple:
    return tuple(_float(t) for t in text.split(",") if t.strip())


def _str_list(text: str) -> tuple:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    return str(value)


# field name -> (config key, parser)
_SCHEMA = {
    "N": ("N", int),
    "M": ("M", int),
    "K": ("K", _int_grid),
    "sigma2_w": ("sigma2_w", _float_list),
    "sigma2_x": ("sigma2_x", _float),
    "sweep_var": ("sweep_var", str.strip),
    "trials": ("trials", int),
    "master_seed": ("master_seed", int),
    "algorithms": ("algorithms", _str_list),
    "prior_mode": ("prior_mode", str.strip),
    "beta_alpha": ("beta.alpha", _float),
    "beta_beta": ("beta.beta", _float),
    "delta_p": ("delta_p", _float),
    "metrics": ("metrics", _str_list),
    "workers": ("workers", int),
    "fixed_dictionary": ("fixed_dictionary", _bool),
    "max_iter": ("max_iter", int),
    "t_cfar": ("stomp.t_cfar", _float),
    "stomp_max_stages": ("stomp.max_stages", int),
    "bsp_P": ("bsp.P", int),
    "bmp_adaptive_noise": ("bmp.adaptive_noise", _bool),
    "bomp_adaptive_noise": ("bomp.adaptive_noise", _bool),
    "bstomp_adaptive_noise": ("bstomp.adaptive_noise", _bool),
    "bsp_adaptive_noise": ("bsp.adaptive_noise", _bool),
    "phase_N_over_M": ("phase.N_over_M", _float_list),
    "phase_metric": ("phase.metric", str.strip),
    "phase_target": ("phase.target", _float),
    "phase_k_max_ratio": ("phase.k_max_ratio", _float),
    "theorem_instances": ("theorem.instances", int),
    "theorem_noise_free": ("theorem.noise_free", int),
    "theorem_N": ("theorem.N", int),
    "theorem_M": ("theorem.M", int),
    "theorem_p": ("theorem.p", _float),
    "theorem_sigma2_w": ("theorem.sigma2_w", _float),
    "theorem_sigma2_x": ("theorem.sigma2_x", _float),
}
_BY_KEY = {key: name for name, (key, _) in _SCHEMA.items()}


@dataclass(frozen=True)
class ExperimentConfig:
    N: int = 154
    M: int = 256
    K: tuple = (20,)
    sigma2_w: tuple = (1e-4,)
    sigma2_x: float = 1.0
    sweep_var: str = "K"
    trials: int = 200
    master_seed: int = 0
    algorithms: tuple = ("mp", "omp", "stomp", "sp", "bmp", "bomp", "bstomp", "bsp")
    prior_mode: str = "uniform"
    beta_alpha: float = 0.4
    beta_beta: float = 0.4
    delta_p: float = 0.3
    metrics: tuple = ("mse", "pe")
    workers: int = 0                  # 0: available cores
    fixed_dictionary: bool = False
    max_iter: int = 0                 # 0: each algorithm's default
    t_cfar: float = 2.5
    stomp_max_stages: int = 10
    bsp_P: int = 0                    # 0: P = K
    bmp_adaptive_noise: bool = False
    bomp_adaptive_noise: bool = False
    bstomp_adaptive_noise: bool = True
    bsp_adaptive_noise: bool = True
    phase_N_over_M: tuple = (0.3, 0.5, 0.7)
    phase_metric: str = "pe"
    phase_target: float = 1e-2
    phase_k_max_ratio: float = 0.6
    theorem_instances: int = 100
    theorem_noise_free: int = 20
    theorem_N: int = 5
    theorem_M: int = 8
    theorem_p: float = 0.25
    theorem_sigma2_w: float = 1e-3
    theorem_sigma2_x: float = 1e10

    @property
    def sweep_values(self) -> tuple:
        return self.K if self.sweep_var == "K" else self.sigma2_w

    def point(self, value):
        """(K, sigma2_w) at one sweep value."""
        if self.sweep_var == "K":
            return int(value), self.sigma2_w[0]
        return self.K[0], float(value)

    def to_dict(self) -> dict:
        return {_SCHEMA[f.name][0]: _fmt(getattr(self, f.name)) for f in fields(self)}

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_dict().items())


def split_algorithm(spec: str):
    """``"bsp:informed"`` -> ``("bsp", "informed")``; feed is None when absent."""
    algo, _, feed = spec.partition(":")
    return algo.strip(), (feed.strip() or None)


def validate(cfg: ExperimentConfig) -> list:
    from .bayesian_pursuit import ALGORITHMS as BAYES
    from .classic_pursuit import ALGORITHMS as CLASSIC

    problems = []
    if cfg.N < 1:
        problems.append("N must be >= 1")
    if cfg.M < 1:
        problems.append("M must be >= 1")
    if cfg.trials < 1:
        problems.append("trials must be >= 1")
    if not cfg.K:
        problems.append("K grid is empty")
    if any(k < 0 or k > cfg.M for k in cfg.K):
        problems.append(f"K values must lie in [0, M={cfg.M}]")
    if not cfg.sigma2_w:
        problems.append("sigma2_w grid is empty")
    if any(not v > 0 or math.isinf(v) for v in cfg.sigma2_w):
        problems.append("sigma2_w values must be positive and finite")
    if not cfg.sigma2_x > 0 or math.isinf(cfg.sigma2_x):
        problems.append("sigma2_x must be positive and finite for data generation")
    if cfg.sweep_var not in SWEEP_VARS:
        problems.append(f"sweep_var must be one of {', '.join(SWEEP_VARS)}")
    elif cfg.sweep_var == "K" and len(cfg.sigma2_w) != 1:
        problems.append("sigma2_w must be a single value when sweeping K")
    elif cfg.sweep_var == "sigma2_w" and len(cfg.K) != 1:
        problems.append("K must be a single value when sweeping sigma2_w")
    if cfg.prior_mode not in PRIOR_MODES:
        problems.append(f"prior_mode must be one of {', '.join(PRIOR_MODES)}")
    if cfg.beta_alpha <= 0 or cfg.beta_beta <= 0:
        problems.append("beta.alpha and beta.beta must be positive")
    if not 0 <= cfg.delta_p <= 1:
        problems.append("delta_p must lie in [0, 1]")
    if not cfg.algorithms:
        problems.append("algorithms list is empty")
    for spec in cfg.algorithms:
        algo, feed = split_algorithm(spec)
        if algo not in BAYES + CLASSIC:
            problems.append(f"unknown algorithm {algo!r}; valid ids: {', '.join(CLASSIC + BAYES)}")
        if feed is not None and (feed not in FEEDS or algo in CLASSIC):
            problems.append(f"bad prior feed in {spec!r}; only Bayesian ids take :{'|:'.join(FEEDS)}")
        if feed in ("informed", "perturbed") and cfg.prior_mode == "uniform":
            problems.append(f"{spec!r} needs prior_mode beta or beta-perturbed")
    if len(set(cfg.algorithms)) != len(cfg.algorithms):
        problems.append("algorithms list has duplicates")
    for m in cfg.metrics:
        if m not in METRICS:
            problems.append(f"unknown metric {m!r}; valid: {', '.join(METRICS)}")
    if cfg.workers < 0:
        problems.append("workers must be >= 0")
    if cfg.max_iter < 0:
        problems.append("max_iter must be >= 0")
    if cfg.t_cfar <= 0:
        problems.append("stomp.t_cfar must be positive")
    if cfg.stomp_max_stages < 1:
        problems.append("stomp.max_stages must be >= 1")
    if cfg.bsp_P < 0:
        problems.append("bsp.P must be >= 0")
    if not cfg.phase_N_over_M or any(not 0 < v <= 1 for v in cfg.phase_N_over_M):
        problems.append("phase.N_over_M values must lie in (0, 1]")
    if cfg.phase_metric not in ("mse", "pe"):
        problems.append("phase.metric must be mse or pe")
    if not cfg.phase_target > 0:
        problems.append("phase.target must be positive")
    if not 0 < cfg.phase_k_max_ratio <= 1:
        problems.append("phase.k_max_ratio must lie in (0, 1]")
    if cfg.theorem_M > 20:
        problems.append("theorem.M must be <= 20")
    if not 0 < cfg.theorem_p < 1:
        problems.append("theorem.p must lie in (0, 1)")
    if not 0 <= cfg.theorem_noise_free <= cfg.theorem_instances:
        problems.append("theorem.noise_free must lie in [0, theorem.instances]")
    if cfg.theorem_sigma2_x < 1e8:
        problems.append("theorem.sigma2_x must be >= 1e8")
    return problems


def parse_pairs(pairs, source: str = "<overrides>", base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Build a config from (line number, key, value) triples; collects every error."""
    values, problems = {}, []
    for lineno, key, raw in pairs:
        name = _BY_KEY.get(key)
        if name is None:
            problems.append(f"{source}:{lineno}: unknown key {key!r}")
            continue
        try:
            values[name] = _SCHEMA[name][1](raw)
        except ValueError as exc:
            problems.append(f"{source}:{lineno}: bad value for {key}: {exc}")
    cfg = replace(base or ExperimentConfig(), **values)
    problems.extend(validate(cfg))
    if problems:
        raise ConfigError(problems)
    return cfg


def _lines(text: str, source: str):
    pairs, problems = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            problems.append(f"{source}:{lineno}: expected key = value")
            continue
        pairs.append((lineno, key.strip(), value.strip()))
    return pairs, problems


def parse_text(text: str, source: str = "<config>", overrides=(), env=None) -> ExperimentConfig:
    pairs, problems = _lines(text, source)
    for n, item in enumerate(overrides, start=1):
        key, sep, value = item.partition("=")
        if not sep:
            problems.append(f"--set #{n}: expected key=value, got {item!r}")
            continue
        pairs.append((f"--set #{n}", key.strip(), value.strip()))
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        pairs.append((SEED_ENV, "master_seed", env[SEED_ENV]))
    try:
        cfg = parse_pairs(pairs, source)
    except ConfigError as exc:
        raise ConfigError(problems + exc.problems) from None
    if problems:
        raise ConfigError(problems)
    return cfg


def load(path, overrides=(), env=None) -> ExperimentConfig:
    path = Path(path)
    return parse_text(path.read_text(), str(path), overrides, env)


def from_dict(d: dict) -> ExperimentConfig:
    return parse_pairs([(k, k, v) for k, v in d.items()], "<dict>")

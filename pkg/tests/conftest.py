import math
from pathlib import Path

import numpy as np
import pytest

from bgpursuit.bg_model import ModelParams, generate_trial, trial_rng
from bgpursuit.core_linalg import Dictionary

DATA = Path(__file__).parent / "data"
ROOT = Path(__file__).resolve().parents[1]


def make_instance(seed, N=32, M=64, K=8, sigma2_w=1e-4, sigma2_x=1.0):
    """Seeded dictionary plus a K-sparse observation."""
    rng = trial_rng(seed, N, M, K)
    dictionary = Dictionary.gaussian(N, M, rng)
    truth = generate_trial(dictionary, K, rng, sigma2_x=sigma2_x, sigma2_w=sigma2_w)
    return dictionary, truth


def flat_params(M, p=0.1, sigma2_w=1e-10):
    """Limit-case parameters: flat coefficient prior, tiny noise variance."""
    return ModelParams.uniform(M, p, sigma2_w, math.inf)


@pytest.fixture
def instance():
    return make_instance(7)


@pytest.fixture
def data_dir():
    return DATA


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

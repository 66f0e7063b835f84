"""Flat key = value configuration parsing."""

import pytest

from bgpursuit.config import ConfigError, ExperimentConfig, from_dict, load, parse_text, split_algorithm

from conftest import ROOT


def test_defaults_are_valid():
    assert parse_text("", env={}) == ExperimentConfig()


def test_comments_dotted_keys_and_grids():
    cfg = parse_text(
        "# comment\nN = 10  # trailing\nM = 20\nK = 2:8:3, 10\nbsp.P = 4\nsigma2_x = 2.5\nbstomp.adaptive_noise = no\n",
        env={},
    )
    assert (cfg.N, cfg.M, cfg.K, cfg.bsp_P) == (10, 20, (2, 5, 8, 10), 4)
    assert cfg.sigma2_x == 2.5
    assert cfg.bstomp_adaptive_noise is False


def test_all_errors_reported_together():
    with pytest.raises(ConfigError) as exc:
        parse_text("trials = 0\nalgorithms = mp, nope\nfoo = 1\nN = x\nprior_mode = odd\n", "c.cfg", env={})
    text = "\n".join(exc.value.problems)
    for needle in ("trials", "nope", "unknown key 'foo'", "c.cfg:4", "prior_mode"):
        assert needle in text
    assert len(exc.value.problems) >= 5


def test_overrides_and_seed_env():
    cfg = parse_text("trials = 5\nmaster_seed = 1\n", overrides=["trials=9"], env={"BGPURSUIT_SEED": "77"})
    assert cfg.trials == 9 and cfg.master_seed == 77


def test_malformed_override():
    with pytest.raises(ConfigError, match="--set"):
        parse_text("", overrides=["trials"], env={})


def test_round_trip():
    cfg = parse_text("K = 1:9:4\nsigma2_x = 0.5\nalgorithms = bsp:informed, bsp:uniform\nprior_mode = beta\n", env={})
    assert from_dict(cfg.to_dict()) == cfg
    assert parse_text(cfg.to_text(), env={}) == cfg


def test_prior_feed_needs_beta_mode():
    with pytest.raises(ConfigError, match="beta"):
        parse_text("algorithms = bsp:informed\n", env={})


def test_feed_on_classic_rejected():
    with pytest.raises(ConfigError):
        parse_text("algorithms = omp:informed\nprior_mode = beta\n", env={})


def test_flat_prior_rejected_for_generation():
    with pytest.raises(ConfigError, match="sigma2_x"):
        parse_text("sigma2_x = inf\n", env={})


def test_single_value_off_the_sweep_axis():
    with pytest.raises(ConfigError, match="sigma2_w must be a single value"):
        parse_text("sigma2_w = 1e-4, 1e-3\n", env={})
    cfg = parse_text("sweep_var = sigma2_w\nsigma2_w = 1e-4, 1e-3\nK = 5\n", env={})
    assert cfg.sweep_values == (1e-4, 1e-3) and cfg.point(1e-3) == (5, 1e-3)


def test_split_algorithm():
    assert split_algorithm("bsp:informed") == ("bsp", "informed")
    assert split_algorithm("mp") == ("mp", None)


@pytest.mark.parametrize("name", sorted(p.name for p in (ROOT / "configs").glob("*.cfg")))
def test_shipped_configs_parse(name):
    load(ROOT / "configs" / name, env={})


def test_paper_uniform_values():
    cfg = load(ROOT / "configs" / "paper-uniform.cfg", env={})
    assert (cfg.N, cfg.M, cfg.sigma2_w, cfg.sigma2_x) == (154, 256, (1e-4,), 1.0)

"""Bayes-oracle checks: the Gaussian machinery against scipy, the exact
symmetry results, and the Monte-Carlo AUC behavior used as ground truth."""

import numpy as np
import numpy.testing as npt
import pytest
from scipy.stats import multivariate_normal

from tiavc.dataio import SynthConfig, generate
from tiavc.errors import NumericError, ValidationError
from tiavc.oracle import (BayesOracle, _Gaussian, bayes_oracle_auc,
                          score_dataset_pairs)

SMALL = dict(num_themes=4, latent_dim=3, visual_dim=8, audio_dim=6,
             num_frames=4, audio_steps=5, seed=0)


def _config(**kw):
    return SynthConfig(**{**SMALL, **kw})


def test_gaussian_logpdf_matches_scipy():
    rng = np.random.default_rng(0)
    dim = 7
    a = rng.standard_normal((dim, dim))
    cov = a @ a.T + dim * np.eye(dim)
    mean = rng.standard_normal(dim)
    x = rng.standard_normal((20, dim))
    ours = _Gaussian(mean, cov).logpdf(x)
    ref = multivariate_normal(mean=mean, cov=cov).logpdf(x)
    npt.assert_allclose(ours, ref, rtol=1e-10, atol=1e-10)


def test_degenerate_covariance_raises():
    with pytest.raises(NumericError):
        BayesOracle(_config(sigma_visual=0.0, sigma_audio=0.0))


def test_blind_oracle_is_exactly_chance_on_hard_mode():
    # gamma=0 theme-flip: matched and mismatched mixtures are the same set
    # of components, so every blind LLR is identically zero
    cfg = _config(negative_mode="theme-flip", gamma=0.0)
    result = bayes_oracle_auc(cfg, mode="blind", n_pairs=2000)
    assert result.auc == 0.5
    oracle = BayesOracle(cfg)
    rng = np.random.default_rng(1)
    v = rng.standard_normal((50, cfg.visual_dim))
    a = rng.standard_normal((50, cfg.audio_dim))
    scores = oracle.scores(v, a, np.zeros(50, dtype=int), "blind")
    npt.assert_allclose(scores, 0.0, rtol=0, atol=1e-9)


def test_aware_oracle_separates_hard_mode():
    cfg = _config(negative_mode="theme-flip", gamma=0.0)
    result = bayes_oracle_auc(cfg, mode="aware", n_pairs=4000)
    assert result.auc >= 0.95


def test_blind_auc_increases_with_gamma():
    # the draws share random numbers across gamma, so the sweep is smooth
    aucs = []
    for gamma in (0.0, 0.25, 0.5):
        cfg = _config(negative_mode="theme-flip", gamma=gamma)
        aucs.append(bayes_oracle_auc(cfg, mode="blind", n_pairs=4000).auc)
    assert aucs[0] == 0.5
    assert aucs[1] > aucs[0] + 0.05
    assert aucs[2] >= aucs[1] - 0.005


@pytest.mark.parametrize("mode_kw", [
    dict(negative_mode="theme-flip", gamma=0.0),
    dict(negative_mode="theme-flip", gamma=0.5),
    dict(negative_mode="shuffle", gamma=0.5),
])
def test_aware_is_at_least_blind(mode_kw):
    cfg = _config(**mode_kw)
    aware = bayes_oracle_auc(cfg, mode="aware", n_pairs=4000).auc
    blind = bayes_oracle_auc(cfg, mode="blind", n_pairs=4000).auc
    assert aware >= blind - 0.01


def test_shuffle_mode_is_separable_for_both_modes():
    cfg = _config(negative_mode="shuffle")
    for mode in ("aware", "blind"):
        assert bayes_oracle_auc(cfg, mode=mode, n_pairs=4000).auc >= 0.95


def test_oracle_result_is_deterministic_with_sane_ci():
    cfg = _config(negative_mode="theme-flip", gamma=0.25)
    a = bayes_oracle_auc(cfg, mode="blind", n_pairs=3000)
    b = bayes_oracle_auc(cfg, mode="blind", n_pairs=3000)
    assert a == b
    assert 0.0 <= a.ci_low <= a.auc <= a.ci_high <= 1.0
    assert a.ci_high - a.ci_low < 0.1
    assert a.n_pairs == 3000


def test_score_dataset_pairs_consistency():
    # scoring a generated dataset's own pairs reproduces the MC picture:
    # aware separates theme-flip records, blind is chance at gamma=0
    cfg = _config(negative_mode="theme-flip", gamma=0.0, n_records=300)
    ds = generate(cfg)
    labels = [p.label for p in ds.pairs]
    from tiavc.evaluation import roc_auc
    aware = roc_auc(score_dataset_pairs(ds, "aware"), labels)
    blind = roc_auc(score_dataset_pairs(ds, "blind"), labels)
    assert aware >= 0.95
    assert blind == pytest.approx(0.5, abs=1e-9)


def test_oracle_validation_errors(tmp_path):
    cfg = _config()
    with pytest.raises(ValidationError):
        bayes_oracle_auc(cfg, mode="psychic")
    with pytest.raises(ValidationError):
        bayes_oracle_auc(cfg, n_pairs=2)
    # datasets loaded from disk carry no generator truth
    from tiavc.dataio import generate_synthetic, read_dataset
    out = tmp_path / "ds"
    generate_synthetic(_config(n_records=20), out)
    with pytest.raises(ValidationError):
        score_dataset_pairs(read_dataset(out), "aware")

"""Closed-form optimal scorer for the synthetic generator.

Pairs are scored with the exact Gaussian log-likelihood ratio of their
sufficient statistics (frame-mean visual, step-mean audio) under the
matched vs mismatched hypotheses of the generator. `aware` conditions on
the true theme of the visual side; `blind` marginalizes the theme over
its uniform prior. This is the derived ground truth the learned systems
are measured against.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.special import logsumexp

from .dataio import SynthConfig, sample_truth
from .errors import NumericError, ValidationError
from .evaluation import roc_auc

MODES = ("aware", "blind")


@dataclass
class OracleResult:
    auc: float
    ci_low: float
    ci_high: float
    n_pairs: int


class _Gaussian:
    def __init__(self, mean, cov):
        self.mean = mean
        self.dim = len(mean)
        try:
            self._chol = cholesky(cov, lower=True)
        except LinAlgError as exc:
            raise NumericError("oracle covariance is not positive definite") from exc
        self._logdet = 2.0 * float(np.log(np.diag(self._chol)).sum())

    def logpdf(self, x):
        y = solve_triangular(self._chol, (x - self.mean).T, lower=True)
        quad = np.sum(y * y, axis=0)
        return -0.5 * (self.dim * np.log(2.0 * np.pi) + self._logdet + quad)


class BayesOracle:
    """Hypothesis components over the joint sufficient statistic [v_bar, a_bar]."""

    def __init__(self, config: SynthConfig, truth=None):
        self.config = config
        self.truth = truth if truth is not None else sample_truth(config)
        p = self.truth.visual_basis
        q = self.truth.audio_basis
        dv, da = config.visual_dim, config.audio_dim
        sigma_v = p @ p.T + (config.sigma_visual ** 2 / config.num_frames) * np.eye(dv)
        sigma_a = q @ q.T + (config.sigma_audio ** 2 / config.audio_steps) * np.eye(da)
        cross = p @ q.T   # latent variance is 1, scaled by the theme sign
        self.matched = []
        self.mismatched = []
        for t in range(config.num_themes):
            mean = np.concatenate([config.gamma * self.truth.theme_means[t],
                                   np.zeros(da)])
            sign = self.truth.theme_signs[t]
            self.matched.append(_Gaussian(mean, self._joint(sigma_v, sigma_a,
                                                            sign * cross)))
            if config.negative_mode == "theme-flip":
                mis_cross = -sign * cross
            else:
                # shuffled audio comes from an independent record
                mis_cross = 0.0 * cross
            self.mismatched.append(_Gaussian(mean, self._joint(sigma_v, sigma_a,
                                                               mis_cross)))

    @staticmethod
    def _joint(sigma_v, sigma_a, cross):
        top = np.concatenate([sigma_v, cross], axis=1)
        bottom = np.concatenate([cross.T, sigma_a], axis=1)
        return np.concatenate([top, bottom], axis=0)

    def scores(self, v_bar, a_bar, themes, mode):
        """Log-likelihood ratio matched/mismatched for each row."""
        if mode not in MODES:
            raise ValidationError(f"oracle mode must be one of {MODES}, got {mode!r}")
        x = np.concatenate([v_bar, a_bar], axis=1)
        if mode == "aware":
            themes = np.asarray(themes)
            out = np.empty(len(x))
            for t in range(self.config.num_themes):
                idx = themes == t
                if idx.any():
                    out[idx] = (self.matched[t].logpdf(x[idx])
                                - self.mismatched[t].logpdf(x[idx]))
            return out
        log_match = np.stack([g.logpdf(x) for g in self.matched])
        log_mis = np.stack([g.logpdf(x) for g in self.mismatched])
        # uniform prior: the log K offsets cancel in the ratio
        return logsumexp(log_match, axis=0) - logsumexp(log_mis, axis=0)


def _draw_stats(config, truth, n, rng, flip_sign=False):
    """Sufficient statistics of n fresh records (optionally sign-flipped audio)."""
    t = rng.integers(config.num_themes, size=n)
    z = rng.standard_normal((n, config.latent_dim))
    noise_v = rng.standard_normal((n, config.visual_dim)) \
        * (config.sigma_visual / np.sqrt(config.num_frames))
    noise_a = rng.standard_normal((n, config.audio_dim)) \
        * (config.sigma_audio / np.sqrt(config.audio_steps))
    v_bar = z @ truth.visual_basis.T + config.gamma * truth.theme_means[t] + noise_v
    signs = truth.theme_signs[t] * (-1.0 if flip_sign else 1.0)
    a_bar = signs[:, None] * (z @ truth.audio_basis.T) + noise_a
    return t, v_bar, a_bar


def _hanley_mcneil_ci(auc, n_pos, n_neg):
    q1 = auc / (2.0 - auc)
    q2 = 2.0 * auc * auc / (1.0 + auc)
    var = (auc * (1.0 - auc) + (n_pos - 1) * (q1 - auc * auc)
           + (n_neg - 1) * (q2 - auc * auc)) / (n_pos * n_neg)
    half = 1.96 * np.sqrt(max(var, 0.0))
    return max(0.0, auc - half), min(1.0, auc + half)


def bayes_oracle_auc(config: SynthConfig, mode="aware", n_pairs=10000, seed=None):
    """Monte-Carlo AUC of the oracle over balanced fresh pairs.

    Draw order does not depend on gamma, so sweeps over gamma share their
    random numbers.
    """
    if n_pairs < 4:
        raise ValidationError("n_pairs must be at least 4")
    truth = sample_truth(config)
    oracle = BayesOracle(config, truth)
    rng = np.random.default_rng([config.seed if seed is None else seed, 5])
    n_pos = n_pairs // 2
    n_neg = n_pairs - n_pos
    t_pos, v_pos, a_pos = _draw_stats(config, truth, n_pos, rng)
    if config.negative_mode == "theme-flip":
        t_neg, v_neg, a_neg = _draw_stats(config, truth, n_neg, rng, flip_sign=True)
    else:
        t_neg, v_neg, _ = _draw_stats(config, truth, n_neg, rng)
        _, _, a_neg = _draw_stats(config, truth, n_neg, rng)
    scores = np.concatenate([
        oracle.scores(v_pos, a_pos, t_pos, mode),
        oracle.scores(v_neg, a_neg, t_neg, mode)])
    labels = np.concatenate([np.ones(n_pos, dtype=int), np.zeros(n_neg, dtype=int)])
    auc = roc_auc(scores, labels)
    lo, hi = _hanley_mcneil_ci(auc, n_pos, n_neg)
    return OracleResult(auc=auc, ci_low=lo, ci_high=hi, n_pairs=n_pairs)


def score_dataset_pairs(dataset, mode="aware"):
    """Oracle scores for a generated dataset's own pair list.

    Requires the in-memory generator truth (datasets loaded from disk do
    not carry it).
    """
    if dataset.truth is None or dataset.config is None:
        raise ValidationError("oracle scoring needs the in-memory generator truth")
    oracle = BayesOracle(dataset.config, dataset.truth)
    by_id = {r.id: r for r in dataset.records}
    v_bar = np.stack([by_id[p.visual_id].visual.mean(axis=0) for p in dataset.pairs])
    a_bar = np.stack([by_id[p.audio_id].audio.mean(axis=0) for p in dataset.pairs])
    themes = np.array([p.theme_true for p in dataset.pairs])
    return oracle.scores(v_bar.astype(np.float64), a_bar.astype(np.float64),
                         themes, mode)

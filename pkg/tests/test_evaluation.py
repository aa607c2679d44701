"""AUC against a brute-force reference, contribution analysis identities,
per-theme reports, threaded scoring, and the CSV artifact formats."""

import csv
import warnings

import numpy as np
import numpy.testing as npt
import pytest

from tiavc.dataio import SynthConfig, generate, index_by_id
from tiavc.errors import ValidationError
from tiavc.evaluation import (ContributionReport, PerThemeReport, ScoredPair,
                              ThemeAUCRow, contribution, contribution_report,
                              experiment_table, group_masses, per_theme_auc,
                              roc_auc, score_pairs, scored_pairs,
                              write_contribution, write_per_theme,
                              write_table1)
from tiavc.models import CLModel, ModelConfig, TiAVCSystem, TLModel

TINY_DATA = dict(n_records=12, num_themes=4, latent_dim=3, visual_dim=5,
                 audio_dim=4, num_frames=3, audio_steps=4,
                 negative_mode="theme-flip")
TINY_MODEL = dict(num_themes=4, num_frames=3, audio_dim=4, visual_dim=5,
                  embed_width=6, fusion_conv1=7, fusion_conv2=7,
                  fusion_hidden=5, baseline_multiplier=1.0)


def _brute_force_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0
               for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


# ---------------------------------------------------------------------- auc

def test_auc_matches_brute_force_with_ties():
    rng = np.random.default_rng(0)
    for trial in range(100):
        n = int(rng.integers(2, 201))
        labels = rng.integers(0, 2, size=n)
        labels[0], labels[1] = 0, 1   # at least one of each class
        if trial % 2:
            # coarse grid forces score ties, including across classes
            scores = rng.integers(0, 5, size=n).astype(np.float64)
        else:
            scores = rng.standard_normal(n)
        got = roc_auc(scores, labels)
        assert abs(got - _brute_force_auc(scores, labels)) < 1e-12, trial


def test_auc_complement_is_exact():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(2, 120))
        labels = rng.integers(0, 2, size=n)
        labels[0], labels[1] = 0, 1
        scores = rng.integers(0, 7, size=n).astype(np.float64)
        assert roc_auc(scores, labels) + roc_auc(scores, 1 - labels) == 1.0


def test_auc_known_values():
    assert roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert roc_auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0
    assert roc_auc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5
    assert roc_auc([0.3, 0.7], [0, 1]) == 1.0
    # 2x2 comparisons: one tie, one loss, two wins -> 2.5 / 4
    assert roc_auc([0.6, 0.4, 0.6, 0.2], [1, 1, 0, 0]) == 0.625


def test_auc_validation():
    with pytest.raises(ValidationError, match="equal length"):
        roc_auc([0.5], [1, 0])
    with pytest.raises(ValidationError, match="finite"):
        roc_auc([np.nan, 0.2], [1, 0])
    with pytest.raises(ValidationError, match="0 or 1"):
        roc_auc([0.5, 0.2], [1, 2])
    with pytest.raises(ValidationError, match="each class"):
        roc_auc([0.5, 0.2], [1, 1])


# ------------------------------------------------------------- contribution

def _hand_example_cl():
    cfg = ModelConfig(**TINY_MODEL)
    cl = CLModel(cfg)
    cl.first_conv.weight.value[:] = 0.0
    return cl


def test_contribution_hand_example_is_exact():
    # groups as channel masses: vision |1*0.5| + |-2*0.25| = 1.0 against
    # audio |3*1.0| = 3.0 gives exactly 25% / 75%
    cl = _hand_example_cl()
    w = cl.first_conv.weight.value
    w[0, 0, 0], w[0, 1, 0], w[0, 6, 0] = 0.5, 0.25, 1.0
    x = np.zeros((1, 1, cl.first_conv.in_ch))
    x[0, 0, 0], x[0, 0, 1], x[0, 0, 6] = 1.0, -2.0, 3.0
    report = contribution(cl, x)
    assert report.masses["vision"] == 1.0
    assert report.masses["audio"] == 3.0
    assert report.proportions == {"vision": 0.25, "audio": 0.75,
                                  "predicted_themes": 0.0, "true_themes": 0.0}
    assert report.composition == "positive" and report.n_pairs == 1


def test_contribution_proportions_sum_to_one_and_scale_invariant():
    cfg = ModelConfig(**TINY_MODEL)
    cl = CLModel(cfg)
    rng = np.random.default_rng(2)
    x = rng.standard_normal((9, cfg.num_frames, cl.first_conv.in_ch))
    base = contribution(cl, x)
    assert abs(sum(base.proportions.values()) - 1.0) < 1e-9
    scaled = contribution(cl, 2.375 * x)
    for group in base.proportions:
        assert abs(base.proportions[group] - scaled.proportions[group]) < 1e-9


def test_contribution_zero_mass_raises():
    cl = _hand_example_cl()
    x = np.ones((2, 1, cl.first_conv.in_ch))
    with pytest.raises(ValidationError, match="total mass is zero"):
        contribution(cl, x)


def test_group_masses_same_padding_by_hand():
    # k=3 over two positions: pad contributes nothing, so the channel mass
    # is w0*a + w1*(a+b) + w2*b
    weight = np.array([1.0, 10.0, 100.0]).reshape(3, 1, 1)
    inputs = np.array([2.0, 3.0]).reshape(1, 2, 1)
    masses = group_masses(weight, inputs, {"all": (0, 1)})
    assert masses["all"] == 2.0 + 10.0 * 5.0 + 100.0 * 3.0


def test_contribution_report_composition_filtering():
    ds = generate(SynthConfig(**TINY_DATA, seed=3))
    cfg = ModelConfig(**TINY_MODEL)
    tl = TLModel(cfg)
    tl.trained = True
    system = TiAVCSystem(tl, CLModel(cfg))
    by_id = index_by_id(ds.records)
    pos = contribution_report(system, by_id, ds.pairs, "positive")
    both = contribution_report(system, by_id, ds.pairs, "both")
    assert pos.n_pairs == sum(p.label == 1 for p in ds.pairs)
    assert both.n_pairs == len(ds.pairs)
    with pytest.raises(ValidationError, match="composition"):
        contribution_report(system, by_id, ds.pairs, "sideways")
    with pytest.raises(ValidationError, match="no pairs"):
        contribution_report(system, by_id, [p for p in ds.pairs if p.label == 1],
                            "negative")


# ----------------------------------------------------------- theme grouping

def _scored(theme_scores):
    out = []
    for theme, (scores, labels) in theme_scores.items():
        out += [ScoredPair(s, y, theme, "ti-avc")
                for s, y in zip(scores, labels)]
    return out


def test_per_theme_auc_partitions_and_matches_subsets():
    data = {
        0: ([0.9, 0.1, 0.8, 0.3], [1, 0, 1, 0]),
        1: ([0.2, 0.7, 0.6], [1, 0, 0]),
        2: ([0.5, 0.6], [1, 1]),   # single class, skipped
    }
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = per_theme_auc(_scored(data))
    assert [r.theme_id for r in report.rows] == [0, 1, 2]
    assert report.skipped == [2]
    assert report.n_pairs == 9
    for row in report.rows[:2]:
        scores, labels = data[row.theme_id]
        assert row.auc == roc_auc(scores, labels)
        assert row.n_pairs == len(labels)
    assert report.rows[2].auc is None


def test_per_theme_auc_warns_on_single_class():
    with pytest.warns(UserWarning, match="single class"):
        per_theme_auc(_scored({0: ([0.4, 0.6], [1, 1]),
                               1: ([0.1, 0.9], [0, 1])}))
    with pytest.raises(ValidationError, match="empty"):
        per_theme_auc([])


# ----------------------------------------------------------------- scoring

def test_score_pairs_threaded_matches_sequential(monkeypatch):
    ds = generate(SynthConfig(**TINY_DATA, seed=4))
    cfg = ModelConfig(**TINY_MODEL)
    tl = TLModel(cfg)
    tl.trained = True
    system = TiAVCSystem(tl, CLModel(cfg))
    by_id = index_by_id(ds.records)
    sequential = score_pairs(system, by_id, ds.pairs, threads=1)
    assert sequential.shape == (len(ds.pairs),)
    npt.assert_array_equal(score_pairs(system, by_id, ds.pairs, threads=3),
                           sequential)
    monkeypatch.setenv("TI_AVC_THREADS", "2")
    npt.assert_array_equal(score_pairs(system, by_id, ds.pairs), sequential)


def test_scored_pairs_carries_pair_fields():
    ds = generate(SynthConfig(**TINY_DATA, seed=5))
    scores = np.linspace(0.1, 0.9, len(ds.pairs))
    rows = scored_pairs("joint", ds.pairs, scores)
    assert all(r.system == "joint" for r in rows)
    assert [r.label for r in rows] == [p.label for p in ds.pairs]
    assert [r.theme_true for r in rows] == [p.theme_true for p in ds.pairs]
    npt.assert_allclose([r.score for r in rows], scores, rtol=0, atol=0)


def test_experiment_table_deltas():
    rows = experiment_table([("baseline1", 0.50), ("baseline2", 0.93),
                             ("ti-avc", 0.97), ("joint", 0.88)])
    assert rows[0] == ("baseline1", 0.50, 0.0)
    assert rows[2] == ("ti-avc", 0.97, pytest.approx(0.47))
    no_base = experiment_table([("joint", 0.9)])
    assert no_base == [("joint", 0.9, None)]


# ----------------------------------------------------------- csv artifacts

def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_write_table1_format(tmp_path):
    path = tmp_path / "table1.csv"
    write_table1(path, [("baseline1", 0.5, 0.0), ("ti-avc", 0.971234567, None)])
    assert _read_csv(path) == [
        ["system", "auc", "delta_vs_baseline1"],
        ["baseline1", "0.500000", "0.000000"],
        ["ti-avc", "0.971235", ""],
    ]


def test_write_per_theme_format(tmp_path):
    path = tmp_path / "per_theme.csv"
    report = PerThemeReport(rows=[ThemeAUCRow(0, 1.0, 2)], skipped=[],
                            baseline_auc=0.5)
    write_per_theme(path, report)
    assert _read_csv(path) == [
        ["theme_id", "auc", "n_pairs", "baseline1_auc"],
        ["0", "1.000000", "2", "0.500000"],
    ]


def test_write_contribution_format(tmp_path):
    path = tmp_path / "contribution.csv"
    report = ContributionReport(
        masses={"vision": 1.0, "audio": 3.0},
        proportions={"vision": 0.25, "audio": 0.75},
        composition="positive", n_pairs=8)
    write_contribution(path, report)
    assert _read_csv(path) == [
        ["group", "raw_mass", "proportion", "composition"],
        ["vision", "1.000000", "0.250000000", "positive"],
        ["audio", "3.000000", "0.750000000", "positive"],
    ]

"""ROC-AUC, per-theme reports, and first-layer contribution analysis.

All reductions here run in 64-bit so results are independent of batch
chunking and thread count.
"""

import copy
import csv
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass
class ScoredPair:
    score: float
    label: int
    theme_true: int
    system: str


def _average_ranks(values):
    """Ranks 1..n with ties sharing their mean rank (exact halves)."""
    n = len(values)
    order = np.argsort(values, kind="mergesort")
    sv = values[order]
    boundaries = np.nonzero(np.diff(sv))[0]
    starts = np.concatenate([[0], boundaries + 1])
    ends = np.concatenate([boundaries, [n - 1]])
    group_rank = (starts + ends + 2) / 2.0
    group_of = np.zeros(n, dtype=np.int64)
    group_of[starts[1:]] = 1
    group_of = np.cumsum(group_of)
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = group_rank[group_of]
    return ranks


def roc_auc(scores, labels):
    """Mann-Whitney AUC with ties counted as 1/2, computed by ranking.

    The result is arranged so that roc_auc(s, y) + roc_auc(s, 1-y) is
    exactly 1.0 in floating point: both calls reduce to the same small
    rank-sum count and one of them returns its complement.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ValidationError("scores and labels must have equal length")
    if not np.isfinite(scores).all():
        raise ValidationError("scores must be finite")
    pos = labels == 1
    neg = labels == 0
    n_pos = int(pos.sum())
    n_neg = int(neg.sum())
    if n_pos + n_neg != len(labels):
        raise ValidationError("labels must be 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("roc_auc needs at least one pair of each class")
    ranks = _average_ranks(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    total = float(n_pos) * float(n_neg)
    u_flip = total - u
    q = min(u, u_flip) / total
    return q if u <= u_flip else 1.0 - q


# ---------------------------------------------------------------------------
# per-theme report


@dataclass
class ThemeAUCRow:
    theme_id: int
    auc: float        # None when the theme lacks one of the classes
    n_pairs: int


@dataclass
class PerThemeReport:
    rows: list
    skipped: list                  # theme ids lacking both classes
    baseline_auc: float = None     # overall baseline-1 reference

    @property
    def n_pairs(self):
        return sum(r.n_pairs for r in self.rows)


def per_theme_auc(scored):
    """AUC grouped by the visual-side theme of each ScoredPair."""
    if not scored:
        raise ValidationError("per_theme_auc: empty input")
    scores = np.array([s.score for s in scored])
    labels = np.array([s.label for s in scored])
    themes = np.array([s.theme_true for s in scored])
    rows = []
    skipped = []
    for theme in sorted(set(int(t) for t in themes)):
        mask = themes == theme
        group_labels = labels[mask]
        if group_labels.min() == group_labels.max():
            skipped.append(theme)
            warnings.warn(f"theme {theme} has a single class; AUC skipped")
            rows.append(ThemeAUCRow(theme, None, int(mask.sum())))
            continue
        rows.append(ThemeAUCRow(theme, roc_auc(scores[mask], group_labels),
                                int(mask.sum())))
    return PerThemeReport(rows=rows, skipped=skipped)


# ---------------------------------------------------------------------------
# contribution analysis


@dataclass
class ContributionReport:
    masses: dict          # group -> raw absolute mass
    proportions: dict     # group -> mass / total
    composition: str      # positive | negative | both
    n_pairs: int


def group_masses(weight, inputs, groups):
    """Per-group sum of |W * X| over batch, positions, filters and taps.

    weight has shape (k, in_ch, out_ch) and inputs (B, F, in_ch); zero
    padding at the sequence edges contributes nothing.
    """
    w_abs = np.abs(np.asarray(weight, dtype=np.float64)).sum(axis=2)  # (k, in_ch)
    x_abs = np.abs(np.asarray(inputs, dtype=np.float64))
    b, f, in_ch = x_abs.shape
    k = w_abs.shape[0]
    pad = (k - 1) // 2
    if pad:
        xp = np.zeros((b, f + 2 * pad, in_ch))
        xp[:, pad:pad + f, :] = x_abs
    else:
        xp = x_abs
    channel_mass = np.zeros(in_ch)
    for tap in range(k):
        channel_mass += w_abs[tap] * xp[:, tap:tap + f, :].sum(axis=(0, 1))
    return {name: float(channel_mass[lo:hi].sum())
            for name, (lo, hi) in groups.items()}


def contribution(cl_model, inputs, composition="positive", n_pairs=None):
    """ContributionReport from a CL model's first conv layer and an
    assembled input batch."""
    masses = group_masses(cl_model.first_conv.weight.value, inputs,
                          cl_model.input_groups)
    total = sum(masses.values())
    if total == 0.0:
        raise ValidationError("degenerate contribution report: total mass is zero")
    proportions = {name: mass / total for name, mass in masses.items()}
    return ContributionReport(masses=masses, proportions=proportions,
                              composition=composition,
                              n_pairs=len(inputs) if n_pairs is None else n_pairs)


def contribution_report(system, records_by_id, pairs, composition="positive"):
    """Contribution analysis of a trained two-stage system on a pair set."""
    if composition == "positive":
        subset = [p for p in pairs if p.label == 1]
    elif composition == "negative":
        subset = [p for p in pairs if p.label == 0]
    elif composition == "both":
        subset = list(pairs)
    else:
        raise ValidationError(
            f"composition must be positive, negative or both, got {composition!r}")
    if not subset:
        raise ValidationError(f"no pairs with composition {composition!r}")
    inputs = system.cl_inputs(records_by_id, subset)
    return contribution(system.cl, inputs, composition, len(subset))


# ---------------------------------------------------------------------------
# scoring and experiment tables


def score_pairs(system, records_by_id, pairs, threads=None, batch=256):
    """Match probabilities for pairs, in order.

    TI_AVC_THREADS caps the worker count. Forward caches live on layer
    instances, so each extra worker scores on its own deep copy of the
    frozen system; results are identical to the sequential path.
    """
    if threads is None:
        threads = int(os.environ.get("TI_AVC_THREADS", "1") or "1")
    threads = max(1, min(threads, len(pairs)))
    if threads == 1:
        return system.score(records_by_id, pairs, batch)
    chunk = math.ceil(len(pairs) / threads)
    parts = [pairs[i:i + chunk] for i in range(0, len(pairs), chunk)]
    workers = [system] + [copy.deepcopy(system) for _ in parts[1:]]
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        results = list(pool.map(
            lambda wp: wp[0].score(records_by_id, wp[1], batch), zip(workers, parts)))
    return np.concatenate(results)


def scored_pairs(system_name, pairs, scores):
    return [ScoredPair(float(s), p.label, p.theme_true, system_name)
            for p, s in zip(pairs, scores)]


def experiment_table(results):
    """(system, auc) tuples -> (system, auc, delta_vs_baseline1) rows."""
    base = next((auc for name, auc in results if name == "baseline1"), None)
    return [(name, auc, None if base is None else auc - base)
            for name, auc in results]


# ---------------------------------------------------------------------------
# CSV artifacts


def write_table1(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["system", "auc", "delta_vs_baseline1"])
        for name, auc, delta in rows:
            writer.writerow([name, f"{auc:.6f}", "" if delta is None else f"{delta:.6f}"])


def write_per_theme(path, report: PerThemeReport):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theme_id", "auc", "n_pairs", "baseline1_auc"])
        base = "" if report.baseline_auc is None else f"{report.baseline_auc:.6f}"
        for row in report.rows:
            auc = "" if row.auc is None else f"{row.auc:.6f}"
            writer.writerow([row.theme_id, auc, row.n_pairs, base])


def write_contribution(path, report: ContributionReport):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "raw_mass", "proportion", "composition"])
        for group in report.masses:
            writer.writerow([group, f"{report.masses[group]:.6f}",
                             f"{report.proportions[group]:.9f}", report.composition])

"""Synthetic audio-visual dataset: generation, splits, pairs, and file formats.

Each record carries a short stack of visual frame features and a longer
audio feature sequence that share a latent content vector. The audio is
coupled to the content through a per-theme sign, so in the hard setting
(gamma = 0, theme-flip negatives) the pairing can only be resolved by a
model that knows the theme.

On disk a dataset is a directory with records.jsonl, pairs.jsonl and
manifest.json. Arrays are stored as float32 values in plain JSON lists.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ValidationError
from .nn.params import TRAIN_DTYPE

SPLITS = ("train", "val", "test")
SPLIT_FRACTIONS = (0.8, 0.1, 0.1)
COMPANION_FLAG = "companion"
COMPANION_SUFFIX = "-flip"
NEGATIVE_MODES = ("shuffle", "theme-flip")


@dataclass
class SynthConfig:
    n_records: int = 2400
    num_themes: int = 6
    latent_dim: int = 16
    visual_dim: int = 64
    audio_dim: int = 32
    num_frames: int = 8
    audio_steps: int = 24
    gamma: float = 0.5
    sigma_visual: float = 0.3
    sigma_audio: float = 0.3
    negative_mode: str = "shuffle"
    seed: int = 0

    def __post_init__(self):
        if self.negative_mode not in NEGATIVE_MODES:
            raise ValidationError(
                f"negative_mode must be one of {NEGATIVE_MODES}, got {self.negative_mode!r}")
        if self.num_themes < 2:
            raise ValidationError("num_themes must be >= 2")
        if self.num_themes % 2:
            raise ValidationError("num_themes must be even so theme signs balance")
        if self.gamma < 0:
            raise ValidationError("gamma must be >= 0")
        if min(self.n_records, self.latent_dim, self.visual_dim, self.audio_dim,
               self.num_frames, self.audio_steps) < 1:
            raise ValidationError("all sizes must be positive")
        if self.latent_dim > min(self.visual_dim, self.audio_dim):
            raise ValidationError("latent_dim cannot exceed the feature dims")

    def content_hash(self):
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class EmbeddingRecord:
    id: str
    theme_id: int
    split: str
    audio: np.ndarray    # (audio_steps, audio_dim)
    visual: np.ndarray   # (num_frames, visual_dim)
    flags: list = field(default_factory=list)

    @property
    def is_companion(self):
        return COMPANION_FLAG in self.flags


@dataclass
class PairSample:
    visual_id: str
    audio_id: str
    label: int          # 1 = matched, 0 = mismatched
    theme_true: int     # theme of the visual side


@dataclass
class DatasetManifest:
    num_themes: int
    visual_dim: int
    audio_dim: int
    num_frames: int
    audio_steps: int
    negative_mode: str
    gamma: float
    seed: int
    split_counts: dict
    companion_count: int
    config_hash: str


@dataclass
class GeneratorTruth:
    """The sampled generator parameters, kept for oracle analysis."""
    visual_basis: np.ndarray   # (visual_dim, latent_dim), orthonormal columns
    audio_basis: np.ndarray    # (audio_dim, latent_dim), orthonormal columns
    theme_means: np.ndarray    # (num_themes, visual_dim)
    theme_signs: np.ndarray    # (num_themes,), +1/-1 balanced


@dataclass
class SynthDataset:
    config: SynthConfig
    records: list
    pairs: list
    manifest: DatasetManifest
    truth: GeneratorTruth

    def base_records(self):
        return [r for r in self.records if not r.is_companion]


def _orthonormal_columns(rng, rows, cols):
    q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
    # fix column signs so the basis is a canonical function of the seed
    return q * np.sign(np.diag(r))


def _theme_signs(num_themes):
    # alternate so both signs get floor/ceil(K/2) themes
    return np.array([1.0 if t % 2 == 0 else -1.0 for t in range(num_themes)])


def sample_truth(config: SynthConfig):
    """The dataset-level generator parameters, a pure function of the seed."""
    rng = np.random.default_rng([config.seed, 0])
    means = rng.standard_normal((config.num_themes, config.visual_dim))
    # unit-norm theme directions: gamma alone sets the cue strength, and the
    # cue stays comparable to the latent content instead of dwarfing it
    means /= np.linalg.norm(means, axis=1, keepdims=True)
    return GeneratorTruth(
        visual_basis=_orthonormal_columns(rng, config.visual_dim, config.latent_dim),
        audio_basis=_orthonormal_columns(rng, config.audio_dim, config.latent_dim),
        theme_means=means,
        theme_signs=_theme_signs(config.num_themes),
    )


def generate(config: SynthConfig):
    """Sample a full synthetic dataset in memory."""
    truth = sample_truth(config)
    records = []
    for i in range(config.n_records):
        rec_rng = np.random.default_rng([config.seed, 1, i])
        theme = int(rec_rng.integers(config.num_themes))
        z = rec_rng.standard_normal(config.latent_dim)
        visual = (z @ truth.visual_basis.T
                  + config.gamma * truth.theme_means[theme]
                  + config.sigma_visual
                  * rec_rng.standard_normal((config.num_frames, config.visual_dim)))
        sign = truth.theme_signs[theme]
        audio = (sign * (z @ truth.audio_basis.T)
                 + config.sigma_audio
                 * rec_rng.standard_normal((config.audio_steps, config.audio_dim)))
        records.append(EmbeddingRecord(
            id=f"rec{i:06d}", theme_id=theme, split="train",
            audio=audio.astype(TRAIN_DTYPE), visual=visual.astype(TRAIN_DTYPE)))
        if config.negative_mode == "theme-flip":
            # same content, opposite theme sign, fresh noise; used only as
            # the audio side of negative pairs
            flip_audio = (-sign * (z @ truth.audio_basis.T)
                          + config.sigma_audio
                          * rec_rng.standard_normal((config.audio_steps, config.audio_dim)))
            records.append(EmbeddingRecord(
                id=f"rec{i:06d}{COMPANION_SUFFIX}", theme_id=theme, split="train",
                audio=flip_audio.astype(TRAIN_DTYPE),
                visual=records[-1].visual,
                flags=[COMPANION_FLAG]))
    _assign_splits(records, config.seed)
    pairs = sample_pairs(records, config.negative_mode, config.seed)
    manifest = _build_manifest(config, records)
    return SynthDataset(config=config, records=records, pairs=pairs,
                        manifest=manifest, truth=truth)


def _largest_remainder_counts(n, fractions):
    """Integer counts summing to n, each >= 1 where n allows it."""
    raw = [n * f for f in fractions]
    counts = [int(x) for x in raw]
    remainders = [x - c for x, c in zip(raw, counts)]
    short = n - sum(counts)
    for j in sorted(range(len(fractions)), key=lambda j: -remainders[j])[:short]:
        counts[j] += 1
    if n >= len(fractions):
        for j in range(len(counts)):
            while counts[j] == 0:
                k = counts.index(max(counts))
                counts[k] -= 1
                counts[j] += 1
    return counts


def _assign_splits(records, seed):
    """Stratified 80/10/10 by theme over base records; companions follow."""
    rng = np.random.default_rng([seed, 3])
    base = [r for r in records if not r.is_companion]
    by_id = {r.id: r for r in records}
    themes = sorted({r.theme_id for r in base})
    for theme in themes:
        group = [r for r in base if r.theme_id == theme]
        order = rng.permutation(len(group))
        counts = _largest_remainder_counts(len(group), SPLIT_FRACTIONS)
        cursor = 0
        for split, count in zip(SPLITS, counts):
            for j in order[cursor:cursor + count]:
                group[j].split = split
                companion = by_id.get(group[j].id + COMPANION_SUFFIX)
                if companion is not None:
                    companion.split = split
            cursor += count


def sample_pairs(records, negative_mode, seed):
    """1:1 matched/mismatched pairs, sampled within each split.

    shuffle mode draws the mismatched audio from another record in the
    same split (theme not constrained). theme-flip mode uses the flipped
    companion of the same record, so the mismatch differs only in sign.
    """
    if negative_mode not in NEGATIVE_MODES:
        raise ValidationError(f"unknown negative mode {negative_mode!r}")
    rng = np.random.default_rng([seed, 4])
    by_id = {r.id: r for r in records}
    pairs = []
    for split in SPLITS:
        base = [r for r in records if r.split == split and not r.is_companion]
        for i, rec in enumerate(base):
            pairs.append(PairSample(rec.id, rec.id, 1, rec.theme_id))
            if negative_mode == "shuffle":
                if len(base) < 2:
                    raise ValidationError(
                        f"split {split!r} needs >= 2 records for shuffle negatives")
                j = int(rng.integers(len(base) - 1))
                if j >= i:
                    j += 1
                pairs.append(PairSample(rec.id, base[j].id, 0, rec.theme_id))
            else:
                companion_id = rec.id + COMPANION_SUFFIX
                if companion_id not in by_id:
                    raise ValidationError(
                        f"record {rec.id!r} has no flipped companion for theme-flip pairs")
                pairs.append(PairSample(rec.id, companion_id, 0, rec.theme_id))
    return pairs


def _build_manifest(config, records):
    base = [r for r in records if not r.is_companion]
    counts = {s: sum(1 for r in base if r.split == s) for s in SPLITS}
    return DatasetManifest(
        num_themes=config.num_themes,
        visual_dim=config.visual_dim,
        audio_dim=config.audio_dim,
        num_frames=config.num_frames,
        audio_steps=config.audio_steps,
        negative_mode=config.negative_mode,
        gamma=config.gamma,
        seed=config.seed,
        split_counts=counts,
        companion_count=len(records) - len(base),
        config_hash=config.content_hash(),
    )


# ---------------------------------------------------------------------------
# file formats


def write_dataset(dataset: SynthDataset, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    save_records(os.path.join(out_dir, "records.jsonl"), dataset.records)
    save_pairs(os.path.join(out_dir, "pairs.jsonl"), dataset.pairs)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(asdict(dataset.manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def generate_synthetic(config: SynthConfig, out_dir):
    dataset = generate(config)
    write_dataset(dataset, out_dir)
    return dataset


def save_records(path, records):
    with open(path, "w") as fh:
        for rec in records:
            row = {"id": rec.id, "theme_id": rec.theme_id, "split": rec.split,
                   "audio": [[float(x) for x in step] for step in rec.audio],
                   "visual": [[float(x) for x in frame] for frame in rec.visual]}
            if rec.flags:
                row["flags"] = list(rec.flags)
            fh.write(json.dumps(row) + "\n")


def _require(row, key, where):
    if key not in row:
        raise ValidationError(f"{where}: missing key '{key}'")
    return row[key]


def _as_matrix(value, where):
    arr = np.asarray(value, dtype=TRAIN_DTYPE)
    if arr.ndim != 2 or arr.size == 0:
        raise ValidationError(f"{where}: expected a non-empty 2-d array")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{where}: non-finite values")
    return arr


def load_records(path):
    records = []
    shapes = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{os.path.basename(path)} line {lineno}"
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{where}: invalid JSON ({exc})") from exc
            split = _require(row, "split", where)
            if split not in SPLITS:
                raise ValidationError(f"{where}: unknown split {split!r}")
            theme = _require(row, "theme_id", where)
            if not isinstance(theme, int) or theme < 0:
                raise ValidationError(f"{where}: theme_id must be a non-negative int")
            rec = EmbeddingRecord(
                id=str(_require(row, "id", where)),
                theme_id=theme,
                split=split,
                audio=_as_matrix(_require(row, "audio", where), where + " audio"),
                visual=_as_matrix(_require(row, "visual", where), where + " visual"),
                flags=list(row.get("flags", [])),
            )
            for kind, arr in (("audio", rec.audio), ("visual", rec.visual)):
                if kind in shapes and shapes[kind] != arr.shape:
                    raise ValidationError(
                        f"{where}: {kind} shape {arr.shape} differs from {shapes[kind]}")
                shapes[kind] = arr.shape
            records.append(rec)
    if not records:
        raise ValidationError(f"{path}: no records")
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise ValidationError(f"{path}: duplicate record ids")
    return records


def save_pairs(path, pairs):
    with open(path, "w") as fh:
        for p in pairs:
            fh.write(json.dumps({"visual_id": p.visual_id, "audio_id": p.audio_id,
                                 "label": p.label, "theme_true": p.theme_true}) + "\n")


def load_pairs(path):
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{os.path.basename(path)} line {lineno}"
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{where}: invalid JSON ({exc})") from exc
            label = _require(row, "label", where)
            if label not in (0, 1):
                raise ValidationError(f"{where}: label must be 0 or 1")
            pairs.append(PairSample(
                visual_id=str(_require(row, "visual_id", where)),
                audio_id=str(_require(row, "audio_id", where)),
                label=int(label),
                theme_true=int(_require(row, "theme_true", where))))
    if not pairs:
        raise ValidationError(f"{path}: no pairs")
    return pairs


def load_manifest(path):
    with open(path) as fh:
        raw = json.load(fh)
    try:
        return DatasetManifest(**raw)
    except TypeError as exc:
        raise ValidationError(f"{os.path.basename(path)}: {exc}") from exc


def read_dataset(dir_path):
    """Load a dataset directory and cross-check records, pairs and manifest.

    The generator truth is not stored on disk, so the returned dataset has
    truth=None and config=None; everything needed for training and
    evaluation is present.
    """
    records = load_records(os.path.join(dir_path, "records.jsonl"))
    pairs = load_pairs(os.path.join(dir_path, "pairs.jsonl"))
    manifest = load_manifest(os.path.join(dir_path, "manifest.json"))
    by_id = {r.id: r for r in records}
    for p in pairs:
        for rid in (p.visual_id, p.audio_id):
            if rid not in by_id:
                raise ValidationError(f"pairs.jsonl references unknown record {rid!r}")
        if not 0 <= p.theme_true < manifest.num_themes:
            raise ValidationError(f"pairs.jsonl theme_true {p.theme_true} out of range")
    sample = records[0]
    if sample.audio.shape != (manifest.audio_steps, manifest.audio_dim):
        raise ValidationError(
            f"audio shape {sample.audio.shape} does not match manifest "
            f"({manifest.audio_steps}, {manifest.audio_dim})")
    if sample.visual.shape != (manifest.num_frames, manifest.visual_dim):
        raise ValidationError(
            f"visual shape {sample.visual.shape} does not match manifest "
            f"({manifest.num_frames}, {manifest.visual_dim})")
    for r in records:
        if not 0 <= r.theme_id < manifest.num_themes:
            raise ValidationError(f"record {r.id!r} theme_id out of range")
    return SynthDataset(config=None, records=records, pairs=pairs,
                        manifest=manifest, truth=None)


def index_by_id(records):
    return {r.id: r for r in records}

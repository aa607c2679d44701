"""The four correspondence systems and their training wiring.

Systems:
  * theme learner (TL): predicts the theme from both modalities
  * correspondence learner (CL): predicts match probability from the
    frozen TL's embeddings plus predicted and true theme vectors
  * baseline-1/2: TL-shaped networks with a sigmoid match head, fusion
    widths calibrated so parameter counts match the two-stage system
  * joint: shared trunk trained on theme and match losses together

Naming convention for checkpoints: parameter names are unique within a
model, so one model maps to one tensor file.
"""

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .dataio import index_by_id
from .errors import DimensionError, ValidationError
from .nn.layers import (AttentionPool, Conv1D, Dense, LSTM, MaxPoolTime, ReLU,
                        Stack, TimeDistributedDense, softmax, softmax_vjp)
from .nn.losses import binary_cross_entropy, softmax_cross_entropy
from .nn.checkpoint import EXTENSION, load_model_params, save_model_params
from .nn.params import TRAIN_DTYPE
from .optim import TrainConfig, fit

SYSTEM_NAMES = ("baseline1", "baseline2", "ti-avc", "joint")

# distinct initialization streams per system component
_TL_STREAM, _CL_STREAM, _B1_STREAM, _B2_STREAM, _JOINT_STREAM = 10, 11, 12, 13, 14

EVAL_BATCH = 256


@dataclass
class ModelConfig:
    num_themes: int = 6
    num_frames: int = 8
    audio_dim: int = 32
    visual_dim: int = 64
    embed_width: int = 128
    fusion_conv1: int = 256
    fusion_conv2: int = 256
    fusion_hidden: int = 128
    kernel: int = 1
    # None calibrates the baseline fusion-width multiplier for parameter
    # parity with TL+CL; plain width doubling overshoots at these dims
    baseline_multiplier: float = None
    seed: int = 0

    def __post_init__(self):
        if self.num_themes < 2:
            raise ValidationError("num_themes must be >= 2")
        if min(self.num_frames, self.audio_dim, self.visual_dim, self.embed_width,
               self.fusion_conv1, self.fusion_conv2, self.fusion_hidden) < 1:
            raise ValidationError("all widths must be positive")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValidationError("kernel width must be odd and >= 1")

    @classmethod
    def from_manifest(cls, manifest, **overrides):
        fields = dict(num_themes=manifest.num_themes, num_frames=manifest.num_frames,
                      audio_dim=manifest.audio_dim, visual_dim=manifest.visual_dim)
        fields.update(overrides)
        return cls(**fields)


def one_hot(ids, k, dtype=TRAIN_DTYPE):
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= k):
        raise ValidationError(f"theme id out of range [0, {k})")
    out = np.zeros((len(ids), k), dtype=dtype)
    out[np.arange(len(ids)), ids] = 1.0
    return out


def _tile(vec, frames):
    """Repeat a (B, d) vector along a new frame axis -> (B, frames, d)."""
    return np.repeat(vec[:, None, :], frames, axis=1)


def _untile(grad):
    return grad.sum(axis=1)


# ---------------------------------------------------------------------------
# building blocks


class AudioTower:
    """(B, T, audio_dim) -> (B, width) via per-step dense, LSTM, attention."""

    def __init__(self, in_dim, width, rng, prefix, dtype):
        self.tdd = TimeDistributedDense(in_dim, width, rng, f"{prefix}_tdd", dtype)
        self.act = ReLU()
        self.lstm = LSTM(width, width, rng, f"{prefix}_lstm", dtype)
        self.attn = AttentionPool(width, rng, f"{prefix}_attn", dtype)
        self.last_weights = None

    def params(self):
        return self.tdd.params() + self.lstm.params() + self.attn.params()

    def forward(self, audio):
        h = self.act.forward(self.tdd.forward(audio))
        h = self.lstm.forward(h)
        pooled, self.last_weights = self.attn.forward(h)
        return pooled

    def backward(self, grad):
        g = self.attn.backward(grad)
        g = self.lstm.backward(g)
        return self.tdd.backward(self.act.backward(g))


class VisualTower:
    """(B, F, visual_dim) -> (B, F, width); one dense map shared across frames."""

    def __init__(self, in_dim, width, rng, prefix, dtype):
        self.tdd = TimeDistributedDense(in_dim, width, rng, f"{prefix}_tdd", dtype)
        self.act = ReLU()

    def params(self):
        return self.tdd.params()

    def forward(self, visual):
        return self.act.forward(self.tdd.forward(visual))

    def backward(self, grad):
        return self.tdd.backward(self.act.backward(grad))


def _fusion_stack(in_ch, c1, c2, hidden, out_dim, kernel, rng, prefix, dtype):
    first = Conv1D(in_ch, c1, kernel, rng, f"{prefix}_conv1", dtype)
    stack = Stack([
        first, ReLU(),
        Conv1D(c1, c2, kernel, rng, f"{prefix}_conv2", dtype), ReLU(),
        MaxPoolTime(),
        Dense(c2, hidden, rng, f"{prefix}_dense", dtype), ReLU(),
        Dense(hidden, out_dim, rng, f"{prefix}_head", dtype),
    ], name=prefix)
    return stack, first


# ---------------------------------------------------------------------------
# parameter accounting


def param_count(model):
    return int(sum(p.value.size for p in model.parameters()))


def _tower_params(cfg):
    w = cfg.embed_width
    audio = cfg.audio_dim * w + w \
        + 4 * (w * w + w * w + w) \
        + (w * w + w + w)
    visual = cfg.visual_dim * w + w
    return audio + visual


def _fusion_params(in_ch, c1, c2, hidden, out_dim, kernel):
    return (kernel * in_ch * c1 + c1
            + kernel * c1 * c2 + c2
            + c2 * hidden + hidden
            + hidden * out_dim + out_dim)


def _baseline_widths(cfg, multiplier):
    return (max(1, round(cfg.fusion_conv1 * multiplier)),
            max(1, round(cfg.fusion_conv2 * multiplier)),
            max(1, round(cfg.fusion_hidden * multiplier)))


def two_stage_param_count(cfg):
    w, k = cfg.embed_width, cfg.num_themes
    tl = _tower_params(cfg) + _fusion_params(
        2 * w, cfg.fusion_conv1, cfg.fusion_conv2, cfg.fusion_hidden,
        cfg.num_themes, cfg.kernel)
    cl = _fusion_params(2 * w + 2 * k, cfg.fusion_conv1, cfg.fusion_conv2,
                        cfg.fusion_hidden, 1, cfg.kernel)
    return tl + cl


def baseline_param_count(cfg, variant, multiplier):
    w, k = cfg.embed_width, cfg.num_themes
    c1, c2, hidden = _baseline_widths(cfg, multiplier)
    in_ch = 2 * w + (k if variant == 2 else 0)
    return _tower_params(cfg) + _fusion_params(in_ch, c1, c2, hidden, 1, cfg.kernel)


def calibrate_multiplier(cfg):
    """Fusion-width multiplier minimizing |baseline-1 params - (TL+CL) params|."""
    target = two_stage_param_count(cfg)
    best_m, best_gap = 1.0, None
    for step in range(500, 4001):
        m = step / 1000.0
        gap = abs(baseline_param_count(cfg, 1, m) - target)
        if best_gap is None or gap < best_gap:
            best_m, best_gap = m, gap
    return best_m


# ---------------------------------------------------------------------------
# theme learner


@dataclass
class TLOutput:
    theme_logits: np.ndarray   # (B, K)
    theme_probs: np.ndarray    # (B, K), rows sum to 1
    audio_emb: np.ndarray      # (B, width)
    visual_embs: np.ndarray    # (B, F, width)


class TLModel:
    def __init__(self, config: ModelConfig, dtype=TRAIN_DTYPE):
        rng = np.random.default_rng([config.seed, _TL_STREAM])
        self.config = config
        self.dtype = dtype
        w = config.embed_width
        self.audio_tower = AudioTower(config.audio_dim, w, rng, "audio", dtype)
        self.visual_tower = VisualTower(config.visual_dim, w, rng, "visual", dtype)
        self.fusion, self.first_conv = _fusion_stack(
            2 * w, config.fusion_conv1, config.fusion_conv2, config.fusion_hidden,
            config.num_themes, config.kernel, rng, "fusion", dtype)
        self.trained = False

    def parameters(self):
        return (self.audio_tower.params() + self.visual_tower.params()
                + self.fusion.params())

    def _check_frames(self, visual):
        if visual.shape[1] != self.config.num_frames:
            raise DimensionError(
                f"expected {self.config.num_frames} visual frames, got {visual.shape[1]}")

    def embed(self, audio, visual):
        """Tower outputs only: (visual_embs (B,F,w), audio_emb (B,w))."""
        self._check_frames(visual)
        return (self.visual_tower.forward(visual.astype(self.dtype, copy=False)),
                self.audio_tower.forward(audio.astype(self.dtype, copy=False)))

    def fuse(self, visual_embs, audio_emb):
        """Theme logits from embeddings; usable with mixed-source pairs."""
        frames = visual_embs.shape[1]
        fusion_in = np.concatenate([visual_embs, _tile(audio_emb, frames)], axis=-1)
        return self.fusion.forward(fusion_in)

    def forward(self, audio, visual):
        visual_embs, audio_emb = self.embed(audio, visual)
        logits = self.fuse(visual_embs, audio_emb)
        return TLOutput(theme_logits=logits, theme_probs=softmax(logits),
                        audio_emb=audio_emb, visual_embs=visual_embs)

    def backward(self, grad_logits):
        w = self.config.embed_width
        g = self.fusion.backward(grad_logits)
        self.visual_tower.backward(g[..., :w])
        self.audio_tower.backward(_untile(g[..., w:]))


# ---------------------------------------------------------------------------
# correspondence learner


class CLModel:
    """Match head over per-frame [visual | audio | predicted theme | true theme]."""

    def __init__(self, config: ModelConfig, dtype=TRAIN_DTYPE):
        rng = np.random.default_rng([config.seed, _CL_STREAM])
        self.config = config
        self.dtype = dtype
        w, k = config.embed_width, config.num_themes
        self.input_groups = {
            "vision": (0, w),
            "audio": (w, 2 * w),
            "predicted_themes": (2 * w, 2 * w + k),
            "true_themes": (2 * w + k, 2 * w + 2 * k),
        }
        self.fusion, self.first_conv = _fusion_stack(
            2 * w + 2 * k, config.fusion_conv1, config.fusion_conv2,
            config.fusion_hidden, 1, config.kernel, rng, "match", dtype)

    def parameters(self):
        return self.fusion.params()

    def assemble(self, visual_embs, audio_emb, theme_pred, theme_true):
        sums = np.sum(theme_pred, axis=-1)
        if np.any(np.abs(sums - 1.0) > 1e-3):
            raise ValidationError("predicted theme rows must sum to 1 (within 1e-3)")
        frames = visual_embs.shape[1]
        return np.concatenate([
            visual_embs, _tile(audio_emb, frames),
            _tile(theme_pred, frames), _tile(theme_true, frames)], axis=-1)

    def forward_inputs(self, inputs):
        """Match logits (B, 1) from a pre-assembled (B, F, channels) batch."""
        return self.fusion.forward(inputs)

    def forward(self, visual_embs, audio_emb, theme_pred, theme_true):
        return self.forward_inputs(
            self.assemble(visual_embs, audio_emb, theme_pred, theme_true))

    def match_prob(self, visual_embs, audio_emb, theme_pred, theme_true):
        from .nn.layers import _sigmoid
        return _sigmoid(self.forward(visual_embs, audio_emb, theme_pred, theme_true))

    def backward(self, grad_logits):
        return self.fusion.backward(grad_logits)


# ---------------------------------------------------------------------------
# baselines


class BaselineModel:
    """TL-shaped network with a sigmoid match head.

    variant 2 appends the true-theme one-hot to every fusion step; with
    those channels zeroed it computes exactly the variant-1 function of
    the remaining weights.
    """

    def __init__(self, config: ModelConfig, variant, dtype=TRAIN_DTYPE):
        if variant not in (1, 2):
            raise ValidationError(f"baseline variant must be 1 or 2, got {variant}")
        rng = np.random.default_rng(
            [config.seed, _B1_STREAM if variant == 1 else _B2_STREAM])
        self.config = config
        self.variant = variant
        self.dtype = dtype
        self.multiplier = (config.baseline_multiplier
                           if config.baseline_multiplier is not None
                           else calibrate_multiplier(config))
        w, k = config.embed_width, config.num_themes
        c1, c2, hidden = _baseline_widths(config, self.multiplier)
        self.audio_tower = AudioTower(config.audio_dim, w, rng, "audio", dtype)
        self.visual_tower = VisualTower(config.visual_dim, w, rng, "visual", dtype)
        in_ch = 2 * w + (k if variant == 2 else 0)
        self.fusion, self.first_conv = _fusion_stack(
            in_ch, c1, c2, hidden, 1, config.kernel, rng, "match", dtype)

    def parameters(self):
        return (self.audio_tower.params() + self.visual_tower.params()
                + self.fusion.params())

    def forward(self, audio, visual, theme_true=None):
        if visual.shape[1] != self.config.num_frames:
            raise DimensionError(
                f"expected {self.config.num_frames} visual frames, got {visual.shape[1]}")
        if self.variant == 2 and theme_true is None:
            raise ValidationError("baseline-2 requires the true-theme one-hot")
        visual_embs = self.visual_tower.forward(visual.astype(self.dtype, copy=False))
        audio_emb = self.audio_tower.forward(audio.astype(self.dtype, copy=False))
        frames = visual_embs.shape[1]
        parts = [visual_embs, _tile(audio_emb, frames)]
        if self.variant == 2:
            parts.append(_tile(theme_true.astype(self.dtype, copy=False), frames))
        return self.fusion.forward(np.concatenate(parts, axis=-1))

    def backward(self, grad_logits):
        w = self.config.embed_width
        g = self.fusion.backward(grad_logits)
        self.visual_tower.backward(g[..., :w])
        self.audio_tower.backward(_untile(g[..., w:2 * w]))
        # true-theme channels (variant 2) are inputs, not activations


# ---------------------------------------------------------------------------
# joint system


class JointModel:
    """Shared towers; theme head plus a match head fed the live theme
    probabilities, trained on loss = CE + lambda * BCE."""

    def __init__(self, config: ModelConfig, dtype=TRAIN_DTYPE):
        rng = np.random.default_rng([config.seed, _JOINT_STREAM])
        self.config = config
        self.dtype = dtype
        w, k = config.embed_width, config.num_themes
        self.audio_tower = AudioTower(config.audio_dim, w, rng, "audio", dtype)
        self.visual_tower = VisualTower(config.visual_dim, w, rng, "visual", dtype)
        self.theme_fusion, _ = _fusion_stack(
            2 * w, config.fusion_conv1, config.fusion_conv2, config.fusion_hidden,
            config.num_themes, config.kernel, rng, "fusion", dtype)
        self.match_fusion, self.first_conv = _fusion_stack(
            2 * w + k, config.fusion_conv1, config.fusion_conv2,
            config.fusion_hidden, 1, config.kernel, rng, "match", dtype)

    def parameters(self):
        return (self.audio_tower.params() + self.visual_tower.params()
                + self.theme_fusion.params() + self.match_fusion.params())

    def forward(self, audio, visual):
        if visual.shape[1] != self.config.num_frames:
            raise DimensionError(
                f"expected {self.config.num_frames} visual frames, got {visual.shape[1]}")
        visual_embs = self.visual_tower.forward(visual.astype(self.dtype, copy=False))
        audio_emb = self.audio_tower.forward(audio.astype(self.dtype, copy=False))
        frames = visual_embs.shape[1]
        tiled_audio = _tile(audio_emb, frames)
        theme_logits = self.theme_fusion.forward(
            np.concatenate([visual_embs, tiled_audio], axis=-1))
        self._probs = softmax(theme_logits)
        match_logits = self.match_fusion.forward(np.concatenate(
            [visual_embs, tiled_audio, _tile(self._probs, frames)], axis=-1))
        return theme_logits, self._probs, match_logits

    def backward(self, grad_theme_logits, grad_match_logits):
        w = self.config.embed_width
        gm = self.match_fusion.backward(grad_match_logits)
        d_probs = _untile(gm[..., 2 * w:])
        d_logits = grad_theme_logits + softmax_vjp(self._probs, d_probs)
        gt = self.theme_fusion.backward(d_logits)
        self.visual_tower.backward(gm[..., :w] + gt[..., :w])
        self.audio_tower.backward(_untile(gm[..., w:2 * w]) + _untile(gt[..., w:]))


# ---------------------------------------------------------------------------
# batch assembly and training tasks


def _record_batch(records, dtype):
    audio = np.stack([r.audio for r in records]).astype(dtype, copy=False)
    visual = np.stack([r.visual for r in records]).astype(dtype, copy=False)
    return audio, visual


def _pair_batch(records_by_id, pairs, dtype):
    audio = np.stack([records_by_id[p.audio_id].audio for p in pairs]).astype(dtype, copy=False)
    visual = np.stack([records_by_id[p.visual_id].visual for p in pairs]).astype(dtype, copy=False)
    labels = np.array([[p.label] for p in pairs], dtype=dtype)
    themes = [p.theme_true for p in pairs]
    return audio, visual, labels, themes


def _chunks(items, size):
    for start in range(0, len(items), size):
        yield items[start:start + size]


class ThemeTask:
    """Stage-1/TL training: theme cross-entropy on records."""

    def __init__(self, model: TLModel):
        self.model = model

    def parameters(self):
        return self.model.parameters()

    def _loss(self, records, train):
        audio, visual = _record_batch(records, self.model.dtype)
        target = one_hot([r.theme_id for r in records],
                         self.model.config.num_themes, self.model.dtype)
        out = self.model.forward(audio, visual)
        loss, grad, _ = softmax_cross_entropy(out.theme_logits, target)
        if train:
            self.model.backward(grad)
        return loss

    def loss_and_grads(self, records):
        return self._loss(records, train=True)

    def evaluate(self, records):
        total = 0.0
        for chunk in _chunks(records, EVAL_BATCH):
            total += self._loss(chunk, train=False) * len(chunk)
        return total / len(records)


class PairTask:
    """Baseline training: match BCE on raw pair streams."""

    def __init__(self, model: BaselineModel, records_by_id):
        self.model = model
        self.records_by_id = records_by_id

    def parameters(self):
        return self.model.parameters()

    def _loss(self, pairs, train):
        audio, visual, labels, themes = _pair_batch(self.records_by_id, pairs,
                                                    self.model.dtype)
        theme_true = None
        if self.model.variant == 2:
            theme_true = one_hot(themes, self.model.config.num_themes, self.model.dtype)
        logits = self.model.forward(audio, visual, theme_true)
        loss, grad, _ = binary_cross_entropy(logits, labels)
        if train:
            self.model.backward(grad)
        return loss

    def loss_and_grads(self, pairs):
        return self._loss(pairs, train=True)

    def evaluate(self, pairs):
        total = 0.0
        for chunk in _chunks(pairs, EVAL_BATCH):
            total += self._loss(chunk, train=False) * len(chunk)
        return total / len(pairs)


class MatchTask:
    """Stage-2/CL training on precomputed frozen embeddings; items are row
    indices into the feature arrays."""

    def __init__(self, model: CLModel, features):
        self.model = model
        self.inputs = features["inputs"]     # (N, F, channels), pre-assembled
        self.labels = features["labels"]     # (N, 1)

    def parameters(self):
        return self.model.parameters()

    def _loss(self, rows, train):
        idx = np.asarray(rows)
        logits = self.model.forward_inputs(self.inputs[idx])
        loss, grad, _ = binary_cross_entropy(logits, self.labels[idx])
        if train:
            self.model.backward(grad)
        return loss

    def loss_and_grads(self, rows):
        return self._loss(rows, train=True)

    def evaluate(self, rows):
        total = 0.0
        for chunk in _chunks(list(rows), EVAL_BATCH):
            total += self._loss(chunk, train=False) * len(chunk)
        return total / len(rows)


class JointTask:
    """Joint training: CE on the visual-side theme + weighted BCE on match."""

    def __init__(self, model: JointModel, records_by_id, match_weight=1.0):
        self.model = model
        self.records_by_id = records_by_id
        self.match_weight = match_weight

    def parameters(self):
        return self.model.parameters()

    def _loss(self, pairs, train):
        audio, visual, labels, themes = _pair_batch(self.records_by_id, pairs,
                                                    self.model.dtype)
        target = one_hot(themes, self.model.config.num_themes, self.model.dtype)
        theme_logits, _, match_logits = self.model.forward(audio, visual)
        ce, d_theme, _ = softmax_cross_entropy(theme_logits, target)
        bce, d_match, _ = binary_cross_entropy(match_logits, labels)
        if train:
            self.model.backward(d_theme, self.match_weight * d_match)
        return ce + self.match_weight * bce

    def loss_and_grads(self, pairs):
        return self._loss(pairs, train=True)

    def evaluate(self, pairs):
        total = 0.0
        for chunk in _chunks(pairs, EVAL_BATCH):
            total += self._loss(chunk, train=False) * len(chunk)
        return total / len(pairs)


# ---------------------------------------------------------------------------
# two-stage pipeline


def split_records(records, split, include_companions=False):
    return [r for r in records
            if r.split == split and (include_companions or not r.is_companion)]


def pairs_by_split(pairs, records_by_id, split):
    return [p for p in pairs if records_by_id[p.visual_id].split == split]


def train_tl(records, model_config, train_config: TrainConfig):
    """Stage 1: theme learning on base records (companions excluded)."""
    model = TLModel(model_config)
    log = fit(ThemeTask(model),
              split_records(records, "train"), split_records(records, "val"),
              train_config)
    model.trained = True
    return model, log


def compute_pair_features(tl: TLModel, records_by_id, pairs, batch=EVAL_BATCH):
    """Assembled CL inputs for each pair, using the (frozen) theme learner.

    The predicted theme comes from the TL fusion applied to the pair's own
    mixed streams, never from labels.
    """
    ids = sorted({p.visual_id for p in pairs} | {p.audio_id for p in pairs})
    vis_emb = {}
    aud_emb = {}
    for chunk in _chunks(ids, batch):
        recs = [records_by_id[i] for i in chunk]
        audio, visual = _record_batch(recs, tl.dtype)
        visual_embs, audio_emb = tl.embed(audio, visual)
        for j, rid in enumerate(chunk):
            vis_emb[rid] = visual_embs[j]
            aud_emb[rid] = audio_emb[j]
    k = tl.config.num_themes
    inputs = []
    for chunk in _chunks(pairs, batch):
        v = np.stack([vis_emb[p.visual_id] for p in chunk])
        a = np.stack([aud_emb[p.audio_id] for p in chunk])
        pred = softmax(tl.fuse(v, a))
        true = one_hot([p.theme_true for p in chunk], k, tl.dtype)
        frames = v.shape[1]
        inputs.append(np.concatenate(
            [v, _tile(a, frames), _tile(pred, frames), _tile(true, frames)], axis=-1))
    labels = np.array([[p.label] for p in pairs], dtype=tl.dtype)
    return {"inputs": np.concatenate(inputs, axis=0), "labels": labels}


def train_cl(tl: TLModel, records, pairs, model_config, train_config: TrainConfig):
    """Stage 2: correspondence learning on the frozen TL's embeddings."""
    if not getattr(tl, "trained", False):
        raise ValidationError("stage 2 requires a trained theme model")
    records_by_id = index_by_id(records)
    train_pairs = pairs_by_split(pairs, records_by_id, "train")
    val_pairs = pairs_by_split(pairs, records_by_id, "val")
    features = compute_pair_features(tl, records_by_id, train_pairs + val_pairs)
    model = CLModel(model_config)
    task = MatchTask(model, features)
    n_train = len(train_pairs)
    log = fit(task, list(range(n_train)),
              list(range(n_train, n_train + len(val_pairs))), train_config)
    return model, log


# ---------------------------------------------------------------------------
# trained-system wrappers with a uniform scoring interface


def _sigmoid_scores(logits):
    from .nn.layers import _sigmoid
    return _sigmoid(logits[:, 0].astype(np.float64))


class BaselineSystem:
    def __init__(self, model: BaselineModel, log=None):
        self.model = model
        self.name = f"baseline{model.variant}"
        self.logs = {self.name: log} if log is not None else {}

    def named_models(self):
        return [(self.name, self.model)]

    def score(self, records_by_id, pairs, batch=EVAL_BATCH):
        out = []
        for chunk in _chunks(pairs, batch):
            audio, visual, _, themes = _pair_batch(records_by_id, chunk, self.model.dtype)
            theme_true = None
            if self.model.variant == 2:
                theme_true = one_hot(themes, self.model.config.num_themes,
                                     self.model.dtype)
            out.append(_sigmoid_scores(self.model.forward(audio, visual, theme_true)))
        return np.concatenate(out)


class JointSystem:
    name = "joint"

    def __init__(self, model: JointModel, log=None):
        self.model = model
        self.logs = {"joint": log} if log is not None else {}

    def named_models(self):
        return [("joint", self.model)]

    def score(self, records_by_id, pairs, batch=EVAL_BATCH):
        out = []
        for chunk in _chunks(pairs, batch):
            audio, visual, _, _ = _pair_batch(records_by_id, chunk, self.model.dtype)
            _, _, match_logits = self.model.forward(audio, visual)
            out.append(_sigmoid_scores(match_logits))
        return np.concatenate(out)


class TiAVCSystem:
    name = "ti-avc"

    def __init__(self, tl: TLModel, cl: CLModel, logs=None):
        self.tl = tl
        self.cl = cl
        self.logs = logs or {}

    def named_models(self):
        return [("tl", self.tl), ("cl", self.cl)]

    def score(self, records_by_id, pairs, batch=EVAL_BATCH):
        features = compute_pair_features(self.tl, records_by_id, pairs, batch)
        out = []
        for start in range(0, len(pairs), batch):
            logits = self.cl.forward_inputs(features["inputs"][start:start + batch])
            out.append(_sigmoid_scores(logits))
        return np.concatenate(out)

    def cl_inputs(self, records_by_id, pairs, batch=EVAL_BATCH):
        """Assembled CL input batch, for contribution analysis."""
        return compute_pair_features(self.tl, records_by_id, pairs, batch)["inputs"]


def ti_avc_pipeline(records, pairs, model_config, train_config: TrainConfig):
    """Train TL on themes, freeze it, train CL on pairs."""
    tl, tl_log = train_tl(records, model_config, train_config)
    cl, cl_log = train_cl(tl, records, pairs, model_config, train_config)
    return TiAVCSystem(tl, cl, logs={"tl": tl_log, "cl": cl_log})


def train_system(name, records, pairs, model_config, train_config: TrainConfig):
    """Train one system end to end; returns a wrapper with .score()."""
    records_by_id = index_by_id(records)
    train_pairs = pairs_by_split(pairs, records_by_id, "train")
    val_pairs = pairs_by_split(pairs, records_by_id, "val")
    if name == "ti-avc":
        return ti_avc_pipeline(records, pairs, model_config, train_config)
    if name in ("baseline1", "baseline2"):
        model = BaselineModel(model_config, variant=int(name[-1]))
        log = fit(PairTask(model, records_by_id), train_pairs, val_pairs, train_config)
        return BaselineSystem(model, log)
    if name == "joint":
        model = JointModel(model_config)
        task = JointTask(model, records_by_id, match_weight=train_config.match_loss_weight)
        log = fit(task, train_pairs, val_pairs, train_config)
        return JointSystem(model, log)
    raise ValidationError(f"unknown system {name!r}; expected one of {SYSTEM_NAMES}")


def theme_accuracy(tl: TLModel, records, batch=EVAL_BATCH):
    """Fraction of records whose argmax theme prediction is correct."""
    hits = 0
    for chunk in _chunks(records, batch):
        audio, visual = _record_batch(chunk, tl.dtype)
        out = tl.forward(audio, visual)
        pred = np.argmax(out.theme_probs, axis=1)
        hits += int(np.sum(pred == np.array([r.theme_id for r in chunk])))
    return hits / len(records)


# ---------------------------------------------------------------------------
# checkpoint round-trip


_MODEL_BUILDERS = {
    "tl": lambda cfg: TLModel(cfg),
    "cl": lambda cfg: CLModel(cfg),
    "baseline1": lambda cfg: BaselineModel(cfg, 1),
    "baseline2": lambda cfg: BaselineModel(cfg, 2),
    "joint": lambda cfg: JointModel(cfg),
}


def save_system(run_dir, system):
    os.makedirs(run_dir, exist_ok=True)
    for role, model in system.named_models():
        path = os.path.join(run_dir, role + EXTENSION)
        save_model_params(path, model)
        sidecar = {"system": system.name, "role": role,
                   "model_config": asdict(model.config)}
        if hasattr(model, "multiplier"):
            sidecar["model_config"]["baseline_multiplier"] = model.multiplier
        with open(path + ".json", "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _load_model(run_dir, role):
    path = os.path.join(run_dir, role + EXTENSION)
    with open(path + ".json") as fh:
        sidecar = json.load(fh)
    config = ModelConfig(**sidecar["model_config"])
    model = _MODEL_BUILDERS[role](config)
    load_model_params(path, model)
    return model


def load_system(run_dir, name):
    """Rebuild a trained system from its run directory checkpoints."""
    if name == "ti-avc":
        tl = _load_model(run_dir, "tl")
        tl.trained = True
        return TiAVCSystem(tl, _load_model(run_dir, "cl"))
    if name in ("baseline1", "baseline2"):
        return BaselineSystem(_load_model(run_dir, name))
    if name == "joint":
        return JointSystem(_load_model(run_dir, "joint"))
    raise ValidationError(f"unknown system {name!r}; expected one of {SYSTEM_NAMES}")

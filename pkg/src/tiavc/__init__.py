"""Theme-informed audio-visual correspondence at desk scale.

A small numpy/scipy stack: a manual-backprop network kernel, four
correspondence systems (two baselines, the two-stage theme-informed
system, and a joint multitask variant), a theme-conditional synthetic
generator with a Bayes oracle, and ROC-AUC / contribution reporting.
"""

from . import nn
from .dataio import (DatasetManifest, EmbeddingRecord, GeneratorTruth, PairSample,
                     SynthConfig, SynthDataset, generate, generate_synthetic,
                     index_by_id, read_dataset, sample_pairs, sample_truth,
                     write_dataset)
from .errors import DimensionError, NumericError, ValidationError
from .evaluation import (ContributionReport, PerThemeReport, ScoredPair,
                         contribution, contribution_report, experiment_table,
                         group_masses, per_theme_auc, roc_auc, score_pairs,
                         scored_pairs)
from .models import (BaselineModel, CLModel, JointModel, ModelConfig, TLModel,
                     TLOutput, baseline_param_count, calibrate_multiplier,
                     load_system, param_count, save_system, theme_accuracy,
                     ti_avc_pipeline, train_cl, train_system, train_tl,
                     two_stage_param_count)
from .optim import Adam, EarlyStopper, TrainConfig, TrainingLog, fit
from .oracle import BayesOracle, OracleResult, bayes_oracle_auc, score_dataset_pairs

__version__ = "0.1.0"

__all__ = [
    "Adam", "BaselineModel", "BayesOracle", "CLModel", "ContributionReport",
    "DatasetManifest", "DimensionError", "EarlyStopper", "EmbeddingRecord",
    "GeneratorTruth", "JointModel", "ModelConfig", "NumericError", "OracleResult",
    "PairSample", "PerThemeReport", "ScoredPair", "SynthConfig", "SynthDataset",
    "TLModel", "TLOutput", "TrainConfig", "TrainingLog", "ValidationError",
    "baseline_param_count", "bayes_oracle_auc", "calibrate_multiplier",
    "contribution", "contribution_report", "experiment_table", "fit", "generate",
    "generate_synthetic", "group_masses", "index_by_id", "load_system", "nn",
    "param_count", "per_theme_auc", "read_dataset", "roc_auc", "sample_pairs",
    "sample_truth", "save_system", "score_dataset_pairs", "score_pairs",
    "scored_pairs", "theme_accuracy", "ti_avc_pipeline", "train_cl",
    "train_system", "train_tl", "two_stage_param_count", "write_dataset",
]

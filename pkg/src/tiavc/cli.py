"""Command line tying generation, training, evaluation and analysis together.

Exit codes: 0 ok, 1 usage, 2 validation failure, 3 numeric failure.
"""

import argparse
import json
import os
import sys
from dataclasses import asdict

from . import dataio, evaluation, models
from .errors import DimensionError, NumericError, ValidationError
from .optim import TrainConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3

PRESETS = {
    # shuffled negatives, visible theme cue
    "default": {},
    # theme information is provably necessary here
    "hard": {"negative_mode": "theme-flip", "gamma": 0.0},
}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this CLI reserves 2 for validation."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _resolve_seed(args):
    if args.seed is None:
        print("warning: --seed not given, defaulting to 0", file=sys.stderr)
        return 0
    return args.seed


def _add_seed(parser):
    parser.add_argument("--seed", type=int, default=None,
                        help="RNG seed (defaults to 0 with a warning)")


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_gen(args):
    seed = _resolve_seed(args)
    fields = dict(PRESETS[args.preset])
    fields["seed"] = seed
    if args.gamma is not None:
        fields["gamma"] = args.gamma
    if args.neg_mode is not None:
        fields["negative_mode"] = args.neg_mode
    if args.records is not None:
        fields["n_records"] = args.records
    if args.themes is not None:
        fields["num_themes"] = args.themes
    config = dataio.SynthConfig(**fields)
    dataset = dataio.generate_synthetic(config, args.out)
    counts = dataset.manifest.split_counts
    print(f"wrote {len(dataset.records)} records "
          f"({counts['train']}/{counts['val']}/{counts['test']} train/val/test, "
          f"{dataset.manifest.companion_count} companions), "
          f"{len(dataset.pairs)} pairs to {args.out}")
    return EXIT_OK


def cmd_train(args):
    seed = _resolve_seed(args)
    dataset = dataio.read_dataset(args.dataset)
    model_config = models.ModelConfig.from_manifest(
        dataset.manifest, kernel=args.kernel, seed=seed)
    train_config = TrainConfig(lr=args.lr, batch_size=args.batch,
                               max_epochs=args.max_epochs, patience=args.patience,
                               seed=seed, match_loss_weight=getattr(args, "lambda"))
    system = models.train_system(args.system, dataset.records, dataset.pairs,
                                 model_config, train_config)
    os.makedirs(args.out, exist_ok=True)
    models.save_system(args.out, system)
    resolved_model = asdict(model_config)
    for _, model in system.named_models():
        if hasattr(model, "multiplier"):
            resolved_model["baseline_multiplier"] = model.multiplier
    _write_json(os.path.join(args.out, "config.json"), {
        "system": args.system,
        "dataset": os.path.abspath(args.dataset),
        "dataset_config_hash": dataset.manifest.config_hash,
        "seed": seed,
        "train": asdict(train_config),
        "model": resolved_model,
    })
    for name, log in system.logs.items():
        log.write_csv(os.path.join(args.out, f"{name}_log.csv"))
        stopped = "early stop" if log.stopped_early else "max epochs"
        print(f"{name}: {log.epochs} epochs ({stopped}), "
              f"best val loss {min(log.val_losses):.6f} at epoch {log.best_epoch}")
    return EXIT_OK


def _load_run(run_dir):
    with open(os.path.join(run_dir, "config.json")) as fh:
        run_config = json.load(fh)
    system = models.load_system(run_dir, run_config["system"])
    return run_config, system


def _test_pairs(dataset):
    by_id = dataio.index_by_id(dataset.records)
    pairs = models.pairs_by_split(dataset.pairs, by_id, "test")
    if not pairs:
        raise ValidationError("dataset has no test pairs")
    return by_id, pairs


def cmd_eval(args):
    dataset = dataio.read_dataset(args.dataset)
    by_id, pairs = _test_pairs(dataset)
    results = []
    for run_dir in args.runs:
        _, system = _load_run(run_dir)
        scores = evaluation.score_pairs(system, by_id, pairs)
        results.append((system.name, evaluation.roc_auc(
            scores, [p.label for p in pairs])))
    rows = evaluation.experiment_table(results)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "table1.csv")
    evaluation.write_table1(path, rows)
    for name, auc, delta in rows:
        suffix = "" if delta is None else f"  ({delta:+.6f} vs baseline1)"
        print(f"{name}: AUC {auc:.6f}{suffix}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_contrib(args):
    dataset = dataio.read_dataset(args.dataset)
    by_id, pairs = _test_pairs(dataset)
    run_config, system = _load_run(args.run)
    if run_config["system"] != "ti-avc":
        raise ValidationError("contribution analysis needs a ti-avc run "
                              f"(got {run_config['system']!r})")
    report = evaluation.contribution_report(system, by_id, pairs, args.composition)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "contribution.csv")
    evaluation.write_contribution(path, report)
    for group, proportion in report.proportions.items():
        print(f"{group}: {100.0 * proportion:.2f}%")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_report(args):
    dataset = dataio.read_dataset(args.dataset)
    by_id, pairs = _test_pairs(dataset)
    _, system = _load_run(args.run)
    scores = evaluation.score_pairs(system, by_id, pairs)
    report = evaluation.per_theme_auc(
        evaluation.scored_pairs(system.name, pairs, scores))
    if args.baseline is not None:
        _, baseline = _load_run(args.baseline)
        base_scores = evaluation.score_pairs(baseline, by_id, pairs)
        report.baseline_auc = evaluation.roc_auc(base_scores,
                                                 [p.label for p in pairs])
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "per_theme.csv")
    evaluation.write_per_theme(path, report)
    for row in report.rows:
        auc = "skipped" if row.auc is None else f"{row.auc:.6f}"
        print(f"theme {row.theme_id}: AUC {auc} over {row.n_pairs} pairs")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_validate(args):
    dataset = dataio.read_dataset(args.dataset)
    m = dataset.manifest
    print(f"ok: {len(dataset.records)} records, {len(dataset.pairs)} pairs, "
          f"{m.num_themes} themes, visual {m.num_frames}x{m.visual_dim}, "
          f"audio {m.audio_steps}x{m.audio_dim}")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="tiavc",
                     description="theme-informed audio-visual correspondence")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate a synthetic dataset")
    gen.add_argument("--out", required=True)
    gen.add_argument("--preset", choices=sorted(PRESETS), default="default")
    gen.add_argument("--gamma", type=float, default=None,
                     help="theme cue strength in the visual stream")
    gen.add_argument("--neg-mode", choices=dataio.NEGATIVE_MODES, default=None)
    gen.add_argument("--records", type=int, default=None)
    gen.add_argument("--themes", type=int, default=None)
    _add_seed(gen)
    gen.set_defaults(func=cmd_gen)

    train = sub.add_parser("train", help="train one system on a dataset")
    train.add_argument("--dataset", required=True)
    train.add_argument("--system", required=True, choices=models.SYSTEM_NAMES)
    train.add_argument("--out", required=True)
    train.add_argument("--lr", type=float, default=1e-4)
    train.add_argument("--batch", type=int, default=8)
    train.add_argument("--patience", type=int, default=5)
    train.add_argument("--max-epochs", type=int, default=200)
    train.add_argument("--kernel", type=int, choices=(1, 3), default=1)
    train.add_argument("--lambda", type=float, default=1.0,
                       help="match loss weight for the joint system")
    _add_seed(train)
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="AUC table over trained runs")
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--out", required=True)
    ev.add_argument("runs", nargs="+")
    ev.set_defaults(func=cmd_eval)

    contrib = sub.add_parser("contrib", help="input-group contribution analysis")
    contrib.add_argument("--dataset", required=True)
    contrib.add_argument("--run", required=True)
    contrib.add_argument("--out", required=True)
    contrib.add_argument("--composition", choices=("positive", "negative", "both"),
                         default="positive")
    contrib.set_defaults(func=cmd_contrib)

    report = sub.add_parser("report", help="per-theme AUC report")
    report.add_argument("--dataset", required=True)
    report.add_argument("--run", required=True)
    report.add_argument("--out", required=True)
    report.add_argument("--baseline", default=None,
                        help="baseline-1 run dir for the reference column")
    report.set_defaults(func=cmd_report)

    validate = sub.add_parser("validate", help="check a dataset directory")
    validate.add_argument("--dataset", required=True)
    validate.set_defaults(func=cmd_validate)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

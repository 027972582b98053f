"""``rockeeg`` command-line entry point.

Exit codes: 0 success, 1 malformed input in strict mode or bad configuration,
2 missing input, 3 training failure, 4 evaluation failure, 5 no reports found.
"""

import argparse
import json
import logging
import os
import sys

from . import config as C
from .container import write_bytes
from .dataset import Dataset, ratio_split
from .exceptions import RockEEGError

EXIT_OK, EXIT_INVALID, EXIT_MISSING, EXIT_TRAIN, EXIT_EVAL, EXIT_NO_REPORTS = 0, 1, 2, 3, 4, 5
DATASET_NAME = "dataset.rkeg"
MODEL_NAME = "model.rkeg"
CONFIG_ECHO = "config.txt"
SUMMARY_TXT, SUMMARY_JSON = "summary.txt", "summary.json"

log = logging.getLogger("rockeeg")


class CommandError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _write_text(path, text):
    write_bytes(path, text.encode("utf-8"))


def _common(p):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--seed", type=int, help="master random seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--strict", action="store_true", default=None,
                   help="fail on malformed or unmapped input instead of skipping")


def _model_flags(p):
    p.add_argument("--dataset", help="dataset file written by 'rockeeg ingest'")
    p.add_argument("--pipeline", choices=C.PIPELINES)
    p.add_argument("--preset", dest="cnn_preset", choices=C.PRESETS,
                   help="cnnlstm size/training preset")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key (repeatable)")
    p.add_argument("--split", choices=C.SPLITS,
                   help="kfold, or a train/val/test ratio split (train uses its val part)")


def build_parser():
    parser = argparse.ArgumentParser(prog="rockeeg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="EDF recordings -> dataset file")
    _common(p)
    p.add_argument("--data-dir", help=f"corpus root (default ${C.DATA_DIR_ENV})")
    p.add_argument("--subjects", help="comma-separated subject numbers")
    p.add_argument("--pairs", help="electrode pairs, e.g. C3-C4,FC3-FC4")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")

    p = sub.add_parser("train", help="fit one model on a dataset")
    _common(p)
    _model_flags(p)

    p = sub.add_parser("evaluate", help="cross-validated evaluation")
    _common(p)
    _model_flags(p)
    p.add_argument("--folds", type=int)
    p.add_argument("--mode", choices=C.MODES, help="fold assignment scheme")
    p.add_argument("--no-plots", dest="plots", action="store_false", default=None)

    p = sub.add_parser("report", help="summarize evaluation outputs below a directory")
    p.add_argument("run_dir")
    return parser


def resolve_config(args):
    overrides = {}
    for item in getattr(args, "set", []):
        key, sep, value = item.partition("=")
        if not sep:
            raise CommandError(EXIT_INVALID, f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip().replace("-", "_")] = value
    for key in ("seed", "out", "strict", "pipeline", "cnn_preset", "folds", "mode", "split",
                "plots", "dataset", "data_dir", "subjects", "pairs"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if args.config and not os.path.isfile(args.config):
        raise CommandError(EXIT_MISSING, f"config file not found: {args.config}")
    try:
        return C.load_config(args.config, overrides)
    except (C.ConfigError, TypeError) as exc:
        raise CommandError(EXIT_INVALID, f"invalid configuration: {exc}") from None


def _prepare_out(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    _write_text(os.path.join(cfg.out, CONFIG_ECHO), cfg.to_text())


def _load_dataset(cfg):
    path = cfg.dataset
    if path is None:
        raise CommandError(EXIT_MISSING, "no dataset given (use --dataset or 'dataset = ...')")
    if not os.path.isfile(path):
        raise CommandError(EXIT_MISSING, f"dataset file not found: {path}")
    try:
        return Dataset.load(path)
    except RockEEGError as exc:
        raise CommandError(EXIT_MISSING, f"cannot read dataset {path}: {exc}") from None


# ----------------------------------------------------------------------
# commands


def cmd_ingest(cfg):
    from .ingest import ElectrodePairSpec, EpochSpec, ingest_directory
    from .preprocessing import PreprocessConfig

    root = cfg.data_dir
    if not root or not os.path.isdir(root):
        raise CommandError(EXIT_MISSING, f"data directory not found: {root!r} "
                                         f"(pass --data-dir or set {C.DATA_DIR_ENV})")
    try:
        pairs = ElectrodePairSpec.parse(cfg.pairs)
        pre = PreprocessConfig(cfg.band_low, cfg.band_high, cfg.apply_car, cfg.target_rate,
                               cfg.filter_order)
        epochs = EpochSpec(onset_offset=cfg.epoch_offset, duration=cfg.epoch_duration)
    except (RockEEGError, ValueError) as exc:
        raise CommandError(EXIT_INVALID, f"invalid ingestion settings: {exc}") from None
    try:
        dataset, report = ingest_directory(root, cfg.subjects, cfg.runs, pairs, pre, epochs,
                                           strict=cfg.strict,
                                           trials_per_class=cfg.trials_per_class)
    except RockEEGError as exc:
        from .exceptions import EmptyInput

        code = EXIT_MISSING if isinstance(exc, EmptyInput) else EXIT_INVALID
        raise CommandError(code, f"ingestion failed: {exc}") from None
    _prepare_out(cfg)
    dataset.save(os.path.join(cfg.out, DATASET_NAME))
    n_trials = len(set(dataset.trial_keys()))
    report.append(f"total\tsamples={len(dataset)}\ttrials={n_trials}\tlength={dataset.length}")
    _write_text(os.path.join(cfg.out, "ingest.log"), "\n".join(report) + "\n")
    print(f"wrote {len(dataset)} samples ({n_trials} trials) to "
          f"{os.path.join(cfg.out, DATASET_NAME)}")
    return EXIT_OK


def cmd_train(cfg):
    from .metrics import to_json
    from .pipelines import fit_model

    dataset = _load_dataset(cfg)
    _prepare_out(cfg)
    train, val = dataset, None
    if cfg.split == "ratio":
        train, val, _ = ratio_split(dataset, cfg.ratios, seed=cfg.seed)
    try:
        model = fit_model(cfg, train, val)
    except (RockEEGError, ValueError, ArithmeticError) as exc:
        raise CommandError(EXIT_TRAIN, f"training failed: {type(exc).__name__}: {exc}") from None
    write_bytes(os.path.join(cfg.out, MODEL_NAME), model.to_bytes())
    info = dict(model.summary(), n_train_samples=len(train),
                n_val_samples=0 if val is None else len(val))
    _write_text(os.path.join(cfg.out, "train.json"), to_json(info))
    if model.history is not None:
        from .plots import history_svg

        _write_text(os.path.join(cfg.out, "history.csv"), model.history_csv())
        if cfg.plots:
            _write_text(os.path.join(cfg.out, "loss_curves.svg"), history_svg(model.history, "loss"))
            _write_text(os.path.join(cfg.out, "accuracy_curves.svg"),
                        history_svg(model.history, "acc"))
    details = ", ".join(f"{k}={v}" for k, v in sorted(info.items()))
    print(f"trained {cfg.pipeline}: {details}")
    return EXIT_OK


def cmd_evaluate(cfg):
    from .experiment import run_evaluation, write_evaluation

    dataset = _load_dataset(cfg)
    _prepare_out(cfg)
    try:
        result = run_evaluation(cfg, dataset, progress=print)
        write_evaluation(result, cfg.out, cfg.plots)
    except (RockEEGError, ValueError, ArithmeticError) as exc:
        raise CommandError(EXIT_EVAL, f"evaluation failed: {type(exc).__name__}: {exc}") from None
    s = result.summary
    print(f"{cfg.pipeline}: accuracy {s.mean['accuracy']:.4f} +- {s.std['accuracy']:.4f} "
          f"over {s.n_reports} split(s)")
    return EXIT_OK


ROW_KEYS = ("accuracy", "macro_precision", "macro_recall", "macro_f1", "macro_auc")


def consolidate(run_dir):
    """Collect every report below ``run_dir``; returns ``(text, document)``."""
    from .experiment import REPORT_NAME

    found = []
    for root, dirs, files in os.walk(run_dir):
        dirs.sort()
        if REPORT_NAME in files:
            found.append(os.path.join(root, REPORT_NAME))
    if not found:
        return None, None
    runs = []
    for path in sorted(found):
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        rel = os.path.relpath(os.path.dirname(path), run_dir).replace(os.sep, "/")
        agg = doc["aggregate"]
        runs.append({
            "run": rel,
            "pipeline": doc["pipeline"],
            "splits": doc["folds"],
            "mean": {k: agg["mean"].get(k) for k in ROW_KEYS},
            "std": {k: agg["std"].get(k) for k in ROW_KEYS},
            "class_names": doc["class_names"],
            "class_recall": agg["mean"].get("class_recall"),
            "class_ovr_accuracy": agg["mean"].get("class_ovr_accuracy"),
        })
    lines = ["rockeeg summary", ""]
    header = ["metric"] + [f"{r['run']} [{r['pipeline']}]" for r in runs]
    table = [header]
    for key in ROW_KEYS:
        table.append([key] + [_cell(r["mean"][key], r["std"][key]) for r in runs])
    table.append(["splits"] + [str(r["splits"]) for r in runs])
    names = runs[0]["class_names"]
    if all(r["class_names"] == names for r in runs):
        for c, name in enumerate(names):
            table.append([f"recall[{name}]"] + [_cell(r["class_recall"][c]) for r in runs])
        for c, name in enumerate(names):
            table.append([f"ovr_acc[{name}]"] +
                         [_cell(r["class_ovr_accuracy"][c]) for r in runs])
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    for row in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n", {"runs": runs}


def _cell(mean, std=None):
    if mean is None or mean != mean:
        return "n/a"
    return f"{mean:.4f}" if std is None else f"{mean:.4f} +- {std:.4f}"


def cmd_report(run_dir):
    from .metrics import to_json

    if not os.path.isdir(run_dir):
        raise CommandError(EXIT_NO_REPORTS, f"not a directory: {run_dir}")
    text, doc = consolidate(run_dir)
    if text is None:
        raise CommandError(EXIT_NO_REPORTS, f"no evaluation reports found under {run_dir}")
    _write_text(os.path.join(run_dir, SUMMARY_TXT), text)
    _write_text(os.path.join(run_dir, SUMMARY_JSON), to_json(doc))
    sys.stdout.write(text)
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            return cmd_report(args.run_dir)
        cfg = resolve_config(args)
        return {"ingest": cmd_ingest, "train": cmd_train, "evaluate": cmd_evaluate}[
            args.command](cfg)
    except CommandError as exc:
        print(f"rockeeg {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())

"""Cross-validated evaluation runs and their on-disk reports."""

import dataclasses
import os

import numpy as np

from . import metrics as M
from . import plots
from .container import write_bytes
from .dataset import kfold_by_trial, ratio_split
from .pipelines import derive_seed, fit_model

REPORT_NAME = "report.json"


@dataclasses.dataclass
class EvalResult:
    config: object
    class_names: tuple
    fold_reports: list
    summary: M.Summary
    pooled_scores: np.ndarray
    pooled_labels: np.ndarray
    histories: list

    def to_dict(self):
        summary = self.summary.to_dict()
        aucs = np.array([r["macro_auc"] for r in self.fold_reports], dtype=np.float64)
        curves, pooled_auc = M.roc_all(self.pooled_scores, self.pooled_labels)
        return {
            "pipeline": self.config.pipeline,
            "split": self.config.split,
            "mode": self.config.mode if self.config.split == "kfold" else None,
            "folds": len(self.fold_reports),
            "seed": self.config.seed,
            "class_names": list(self.class_names),
            "fold_reports": self.fold_reports,
            "aggregate": summary,
            "macro_auc_mean": float(np.nanmean(aucs)) if np.any(~np.isnan(aucs)) else None,
            "pooled_auc": [None if c is None else c.auc for c in curves],
            "pooled_macro_auc": pooled_auc,
        }


def _splits(config, dataset):
    """Yield ``(name, train, val, test)`` dataset triples."""
    if config.split == "ratio":
        train, val, test = ratio_split(dataset, config.ratios, seed=config.seed)
        yield "holdout", train, val, test
        return
    plan = kfold_by_trial(dataset, k=config.folds, seed=config.seed, mode=config.mode)
    for i, (tr, te) in enumerate(plan.sample_indices(dataset)):
        yield f"fold-{i:02d}", dataset.subset(tr), None, dataset.subset(te)


def fold_report(name, model, test, n_classes):
    scores = model.scores(test.X)
    pred = np.argmax(scores, axis=1)
    report = M.metrics(M.confusion(test.y, pred, n_classes)).to_dict()
    curves, macro_auc = M.roc_all(scores, test.y)
    report.update({
        "fold": name,
        "n_test_samples": int(len(test)),
        "n_test_trials": len(set(test.trial_keys())),
        "auc": [None if c is None else c.auc for c in curves],
        "macro_auc": macro_auc,
        "model": model.summary(),
    })
    return report, scores


def run_evaluation(config, dataset, progress=None):
    """Fit and score one model per split.

    Each split is seeded from ``config.seed`` and its index, so runs are
    reproducible and independent of evaluation order.
    """
    reports, all_scores, all_labels, histories = [], [], [], []
    for i, (name, train, val, test) in enumerate(_splits(config, dataset)):
        if test is None:
            raise ValueError("split produced an empty test set")
        fold_cfg = dataclasses.replace(config, seed=derive_seed(config.seed, i))
        model = fit_model(fold_cfg, train, val)
        report, scores = fold_report(name, model, test, dataset.class_count)
        report["n_train_samples"] = int(len(train))
        report["n_train_trials"] = len(set(train.trial_keys()))
        reports.append(report)
        all_scores.append(scores)
        all_labels.append(test.y)
        if model.history is not None:
            histories.append((name, model.history))
        if progress is not None:
            progress(f"{name}: accuracy={report['accuracy']:.4f} "
                     f"(train {report['n_train_trials']} / test {report['n_test_trials']} trials)")
    summary = M.aggregate(reports)
    return EvalResult(config, tuple(dataset.class_names), reports, summary,
                      np.vstack(all_scores), np.concatenate(all_labels), histories)


def _write(path, text):
    write_bytes(path, text.encode("utf-8"))


def write_evaluation(result, out_dir, plots_enabled=True):
    """Write JSON, CSV and (optionally) SVG outputs; returns the written file names."""
    os.makedirs(out_dir, exist_ok=True)
    names = list(result.class_names)
    doc = result.to_dict()
    files = {REPORT_NAME: M.to_json(doc)}
    files["folds.csv"] = M.rows_to_csv(
        ["fold", "n_train_trials", "n_test_trials", "n_test_samples", "accuracy",
         "macro_precision", "macro_recall", "macro_f1", "macro_auc"],
        [[r["fold"], r["n_train_trials"], r["n_test_trials"], r["n_test_samples"],
          r["accuracy"], r["macro_precision"], r["macro_recall"], r["macro_f1"], r["macro_auc"]]
         for r in result.fold_reports])
    s = result.summary
    files["per_class.csv"] = M.rows_to_csv(
        ["class", "recall_mean", "recall_std", "ovr_accuracy_mean", "ovr_accuracy_std",
         "precision_mean", "f1_mean", "pooled_auc"],
        [[names[c], float(s.mean["recall"][c]), float(s.std["recall"][c]),
          float(s.mean["class_ovr_accuracy"][c]), float(s.std["class_ovr_accuracy"][c]),
          float(s.mean["precision"][c]), float(s.mean["f1"][c]),
          doc["pooled_auc"][c] if doc["pooled_auc"][c] is not None else float("nan")]
         for c in range(len(names))])
    files["confusion.csv"] = M.confusion_csv(s.confusion_counts, names)
    files["confusion_normalized.csv"] = M.rows_to_csv(
        ["true\\pred"] + names,
        [[names[i]] + [float(v) for v in s.confusion_normalized[i]] for i in range(len(names))])
    curves, _ = M.roc_all(result.pooled_scores, result.pooled_labels)
    files["roc.csv"] = M.roc_csv(curves, names)
    if result.histories:
        rows = [[name, row["epoch"], row["train_loss"], row["val_loss"], row["train_acc"],
                 row["val_acc"]] for name, hist in result.histories for row in hist]
        files["history.csv"] = M.rows_to_csv(
            ["fold", "epoch", "train_loss", "val_loss", "train_acc", "val_acc"], rows)
    if plots_enabled:
        files["roc.svg"] = plots.roc_svg(curves, names)
        if result.histories:
            mean_hist = _mean_history(result.histories)
            files["loss_curves.svg"] = plots.history_svg(mean_hist, "loss")
            files["accuracy_curves.svg"] = plots.history_svg(mean_hist, "acc")
    for name, text in files.items():
        _write(os.path.join(out_dir, name), text)
    return sorted(files)


def _mean_history(histories):
    n_epochs = min(len(h) for _, h in histories)
    out = []
    for e in range(n_epochs):
        row = {"epoch": histories[0][1][e]["epoch"]}
        for key in ("train_loss", "val_loss", "train_acc", "val_acc"):
            row[key] = float(np.mean([h[e][key] for _, h in histories]))
        out.append(row)
    return out

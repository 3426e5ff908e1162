"""Report tables, fold-result persistence, and run manifests.

Four CSV tables mirror the published result layout:

* ``table2.csv`` — feature rows x utilization-scheme columns, cells are
  mean 3-class CV accuracy of the headline classifier.
* ``table3.csv`` — classifier rows x feature columns plus a Mean column.
* ``table4.csv`` — session rows x feature columns plus a Mean row.
* ``table6.csv`` — feature rows x the five binarized indicators
  (acc, npv, pre, sen, spe) computed from the fold-pooled confusion
  matrix of the headline classifier.

Fold results persist as ``fold,true,pred,count`` CSVs: all nine confusion
cells per fold, so a report can be regenerated byte-identically from disk.
Undefined metrics render as ``NA``. Cells are printed with four decimals.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .evaluation import CvResult, Metrics, N_CLASSES

CLASSIFIER_ROW_ORDER = ("svm", "rf", "nb", "cnn", "lssvm", "lr", "knn", "dt")
CLASSIFIER_DISPLAY = {"svm": "SVM", "rf": "RF", "nb": "NB", "cnn": "CNN",
                      "lssvm": "LSSVM", "lr": "LR", "knn": "KNN", "dt": "DT"}

# Decision log stamped into every manifest for transparency.
DECISION_NOTES = {
    "interpolation": "inverse-distance weighting, exponent 2 (not spline)",
    "map_scaling": "per-feature-kind z-score with training-fold statistics",
    "ovo_tie_rule": "majority vote; 1-1-1 ties by summed signed margins, then lowest class",
    "block_labels": "split blocks labelled low/medium/high in temporal order",
    "accuracy_definition": "table cells are 3-class accuracy; table6 uses the binarized indicators",
    "fold_aggregation": "unweighted mean of per-fold accuracies",
}


def fmt_cell(value: float | None) -> str:
    return "NA" if value is None else f"{value:.4f}"


def write_table(path: str | Path, corner: str, col_labels: list[str],
                rows: list[tuple[str, list[float | None]]]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join([corner] + col_labels) + "\n")
        for label, values in rows:
            fh.write(",".join([label] + [fmt_cell(v) for v in values]) + "\n")


def table2_rows(accuracy: dict[tuple[str, str], float | None],
                combos: list[str], schemes: list[str]) -> list[tuple[str, list[float | None]]]:
    """accuracy is keyed by (combo display name, scheme name)."""
    return [(combo, [accuracy.get((combo, scheme)) for scheme in schemes])
            for combo in combos]


def table3_rows(accuracy: dict[tuple[str, str], float | None],
                classifiers: list[str], combos: list[str]
                ) -> list[tuple[str, list[float | None]]]:
    """accuracy is keyed by (classifier kind, combo display name); adds Mean."""
    rows = []
    for kind in classifiers:
        vals = [accuracy.get((kind, combo)) for combo in combos]
        defined = [v for v in vals if v is not None]
        mean = float(np.mean(defined)) if defined else None
        rows.append((CLASSIFIER_DISPLAY.get(kind, kind), vals + [mean]))
    return rows


def table4_rows(accuracy: dict[tuple[str, str], float | None],
                sessions: list[str], combos: list[str]
                ) -> list[tuple[str, list[float | None]]]:
    """accuracy is keyed by (session id, combo display name); adds a Mean row."""
    rows = [(sess, [accuracy.get((sess, combo)) for combo in combos])
            for sess in sessions]
    mean_row = []
    for j in range(len(combos)):
        defined = [r[1][j] for r in rows if r[1][j] is not None]
        mean_row.append(float(np.mean(defined)) if defined else None)
    rows.append(("Mean", mean_row))
    return rows


def table6_rows(per_combo: dict[str, Metrics], combos: list[str]
                ) -> list[tuple[str, list[float | None]]]:
    rows = []
    for combo in combos:
        m = per_combo.get(combo)
        vals = [None] * 5 if m is None else [m.acc, m.npv, m.pre, m.sen, m.spe]
        rows.append((combo, vals))
    return rows


TABLE6_COLUMNS = ["P_acc", "P_npv", "P_pre", "P_sen", "P_spe"]


def save_fold_results(path: str | Path, result: CvResult) -> None:
    """All nine confusion cells of every fold, as ``fold,true,pred,count``."""
    with open(path, "w", newline="") as fh:
        fh.write("fold,true,pred,count\n")
        for fold, cm in enumerate(result.fold_matrices):
            for t in range(N_CLASSES):
                for p in range(N_CLASSES):
                    fh.write(f"{fold},{t + 1},{p + 1},{cm[t, p]}\n")


def load_fold_results(path: str | Path) -> CvResult:
    matrices: dict[int, np.ndarray] = {}
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != "fold,true,pred,count":
            raise ValueError(f"{path}: unexpected fold-result header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            fold, t, p, count = (int(v) for v in line.strip().split(","))
            matrices.setdefault(fold, np.zeros((N_CLASSES, N_CLASSES), dtype=int))
            matrices[fold][t - 1, p - 1] = count
    folds = [matrices[f] for f in sorted(matrices)]
    accuracies = [float(np.trace(cm) / cm.sum()) for cm in folds]
    return CvResult(fold_matrices=folds, accuracies=accuracies)


def config_hash(config_dict: dict) -> str:
    canon = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def write_manifest(path: str | Path, config_dict: dict, seed: int,
                   version: str, extra: dict | None = None) -> None:
    """Everything needed to reproduce the run exactly."""
    manifest = {
        "config": config_dict,
        "config_sha256": config_hash(config_dict),
        "seed": seed,
        "version": version,
        "decisions": DECISION_NOTES,
    }
    if extra:
        manifest["extra"] = extra
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

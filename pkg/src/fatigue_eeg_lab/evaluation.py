"""Utilization splits, k-fold cross-validation, and confusion metrics.

The three utilization splits select 1200/1500/1800 task-seconds from a
2400-second session as three equal blocks; blocks are labelled
low/medium/high in temporal order. Cross-validation refits all
data-dependent statistics (feature standardizer, map normalizer) on the
nine training folds of every iteration, so no test-fold information leaks
into fitting.

Metric definitions binarize the 3x3 confusion matrix into normal (class
1) versus fatigue (classes 2 and 3): TN = a, FN = b + c, FP = d + g,
TP = e + f + h + i in row-major cell naming. Any 0/0 ratio yields an
explicit undefined marker (None, rendered as NA), never NaN. The plain
3-class accuracy (trace / total) is reported alongside.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channels import FatigueLevel
from .classifiers import Standardizer
from .cnn import TrainConfig, predict_batch, train
from .errors import BadLabelError, KExceedsNError, LengthMismatchError
from .topomap import MapNormalizer, _grid, CUBE_GRID

N_CLASSES = 3


@dataclass(frozen=True)
class SplitScheme:
    """Three inclusive 1-based second ranges of equal length."""

    name: str
    blocks: tuple[tuple[int, int], tuple[int, int], tuple[int, int]]

    def __post_init__(self) -> None:
        sizes = {hi - lo + 1 for lo, hi in self.blocks}
        if len(sizes) != 1:
            raise ValueError(f"{self.name}: blocks must have equal length")
        for (_, prev_hi), (lo, _) in zip(self.blocks, self.blocks[1:]):
            if lo <= prev_hi:
                raise ValueError(f"{self.name}: blocks must be disjoint and ascending")

    @property
    def total(self) -> int:
        lo, hi = self.blocks[0]
        return 3 * (hi - lo + 1)


SCHEMES: dict[str, SplitScheme] = {
    "D1200": SplitScheme("D1200", ((1, 400), (1001, 1400), (2001, 2400))),
    "D1500": SplitScheme("D1500", ((1, 500), (951, 1450), (1901, 2400))),
    "D1800": SplitScheme("D1800", ((1, 600), (901, 1500), (1801, 2400))),
}


def make_split(scheme: SplitScheme) -> tuple[np.ndarray, np.ndarray]:
    """(1-based second indices, labels): block 1 low, 2 medium, 3 high."""
    indices = []
    labels = []
    for level, (lo, hi) in enumerate(scheme.blocks):
        block = np.arange(lo, hi + 1)
        indices.append(block)
        labels.append(np.full(len(block), level))
    return np.concatenate(indices), np.concatenate(labels)


@dataclass
class FoldPlan:
    k: int
    assignments: np.ndarray  # fold index per instance
    seed: int

    def fold_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)

    def test_mask(self, fold: int) -> np.ndarray:
        return self.assignments == fold


def kfold(n: int, k: int = 10, seed: int = 0,
          stratify_labels: np.ndarray | None = None) -> FoldPlan:
    """Seeded uniform shuffle followed by round-robin fold assignment.

    Fold sizes differ by at most one. With ``stratify_labels`` the
    round-robin runs within each class so folds are class-balanced too.
    """
    if k > n:
        raise KExceedsNError(f"k={k} exceeds n={n}")
    rng = np.random.default_rng(seed)
    assignments = np.empty(n, dtype=int)
    if stratify_labels is None:
        perm = rng.permutation(n)
        assignments[perm] = np.arange(n) % k
    else:
        stratify_labels = np.asarray(stratify_labels)
        start = 0
        for cls in np.unique(stratify_labels):
            members = np.flatnonzero(stratify_labels == cls)
            perm = rng.permutation(len(members))
            assignments[members[perm]] = (np.arange(len(members)) + start) % k
            start += len(members)
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def confusion(preds, labels) -> np.ndarray:
    """3x3 count matrix, rows = true class, columns = predicted class."""
    preds = np.asarray(preds, dtype=int)
    labels = np.asarray(labels, dtype=int)
    if preds.shape != labels.shape:
        raise LengthMismatchError(f"preds {preds.shape} vs labels {labels.shape}")
    cm = np.zeros((N_CLASSES, N_CLASSES), dtype=int)
    for t, p in zip(labels, preds):
        if not (0 <= t < N_CLASSES) or not (0 <= p < N_CLASSES):
            raise BadLabelError(f"labels must be in 0..2, got true={t}, pred={p}")
        cm[t, p] += 1
    return cm


@dataclass(frozen=True)
class Metrics:
    """Binarized normal-vs-fatigue indicators; None marks undefined (0/0)."""

    acc: float | None
    sen: float | None
    spe: float | None
    pre: float | None
    npv: float | None
    three_class_acc: float | None

    def as_dict(self) -> dict[str, float | None]:
        return {"acc": self.acc, "sen": self.sen, "spe": self.spe,
                "pre": self.pre, "npv": self.npv,
                "three_class_acc": self.three_class_acc}


def _ratio(num: float, den: float) -> float | None:
    return None if den == 0 else num / den


def metrics(cm: np.ndarray) -> Metrics:
    """Five indicators from the binarized 3x3 matrix (class 1 = normal)."""
    cm = np.asarray(cm)
    if cm.shape != (N_CLASSES, N_CLASSES):
        raise ValueError(f"expected a 3x3 matrix, got {cm.shape}")
    tn = float(cm[0, 0])
    fn = float(cm[0, 1] + cm[0, 2])
    fp = float(cm[1, 0] + cm[2, 0])
    tp = float(cm[1, 1] + cm[1, 2] + cm[2, 1] + cm[2, 2])
    total = float(cm.sum())
    return Metrics(
        acc=_ratio(tp + tn, total),
        sen=_ratio(tp, tp + fn),
        spe=_ratio(tn, tn + fp),
        pre=_ratio(tp, tp + fp),
        npv=_ratio(tn, tn + fn),
        three_class_acc=_ratio(float(np.trace(cm)), total),
    )


@dataclass
class CvResult:
    """Per-fold confusion matrices plus the unweighted mean fold accuracy."""

    fold_matrices: list[np.ndarray]
    accuracies: list[float]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    def pooled_matrix(self) -> np.ndarray:
        return np.sum(self.fold_matrices, axis=0)

    def pooled_metrics(self) -> Metrics:
        return metrics(self.pooled_matrix())


def _fold_accuracy(cm: np.ndarray) -> float:
    return float(np.trace(cm) / cm.sum())


def run_cv(X: np.ndarray, y: np.ndarray, learner_factory: Callable[[int], object],
           plan: FoldPlan) -> CvResult:
    """Cross-validate a flat-feature learner.

    ``learner_factory(fold)`` must return a fresh object with
    fit(X, y)/predict(X); the feature standardizer is refitted on each
    fold's training rows before the learner sees the data.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=int)
    fold_matrices = []
    accuracies = []
    for fold in range(plan.k):
        test = plan.test_mask(fold)
        train_rows = ~test
        standardizer = Standardizer().fit(X[train_rows])
        learner = learner_factory(fold)
        learner.fit(standardizer.transform(X[train_rows]), y[train_rows])
        preds = learner.predict(standardizer.transform(X[test]))
        cm = confusion(preds, y[test])
        fold_matrices.append(cm)
        accuracies.append(_fold_accuracy(cm))
    return CvResult(fold_matrices=fold_matrices, accuracies=accuracies)


def run_cv_cnn(raw_maps: np.ndarray, kinds: tuple[str, ...], y: np.ndarray,
               cfg: TrainConfig, plan: FoldPlan) -> CvResult:
    """Cross-validate the CNN on unnormalized topographic map stacks.

    ``raw_maps`` is [n x 34 x 34 x C]; per fold, map z-scoring statistics
    are fitted on the training rows only, then the CNN is trained from a
    fold-specific seed derived from cfg.seed.
    """
    y = np.asarray(y, dtype=int)
    _, _, mask = _grid(CUBE_GRID)
    fold_matrices = []
    accuracies = []
    for fold in range(plan.k):
        test = plan.test_mask(fold)
        train_rows = ~test
        normalizer = MapNormalizer().fit_maps(raw_maps[train_rows], kinds, mask)
        normalized = normalizer.transform_stack(raw_maps, kinds, mask)
        fold_seed = int(np.random.SeedSequence((cfg.seed, fold)).generate_state(1)[0])
        fold_cfg = TrainConfig(
            epochs=cfg.epochs, batch_size=cfg.batch_size,
            learning_rate=cfg.learning_rate, seed=fold_seed,
            dropout_rate=cfg.dropout_rate, fc_width=cfg.fc_width,
            early_stop_train_acc=cfg.early_stop_train_acc,
        )
        model, _ = train(normalized[train_rows], y[train_rows], fold_cfg)
        preds = predict_batch(model, normalized[test])
        cm = confusion(preds, y[test])
        fold_matrices.append(cm)
        accuracies.append(_fold_accuracy(cm))
    return CvResult(fold_matrices=fold_matrices, accuracies=accuracies)

"""Classical baseline classifiers on flat standardized feature vectors.

Seven methods with fixed hyperparameters: least-squares SVM (linear
kernel, regularization 2), linear SVM (C=1, Pegasos-style primal
subgradient), L2 logistic regression, Gaussian naive Bayes, KNN (k=50),
CART decision tree, and a 200-tree random forest. The two-class methods
(LSSVM, SVM, LR) are lifted to three classes by a one-vs-one ensemble
over the tasks {low,medium}, {medium,high}, {low,high} with majority
voting; a 1-1-1 tie falls back to the summed signed decision margins and
then to the lowest class index.

All training is deterministic given (data, seed).
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ClassTooSmallError,
    EmptyDataError,
    KTooLargeError,
    MissingClassError,
    NoConvergenceWarning,
    SingleClassError,
    SingularSystemError,
)

N_CLASSES = 3
OVO_TASKS = ((0, 1), (1, 2), (0, 2))


class Standardizer:
    """Per-column (mean, std) scaling fitted on training rows only.

    Constant columns get unit scale so they pass through as exactly 0.
    """

    def __init__(self) -> None:
        self.mean: np.ndarray | None = None
        self.scale: np.ndarray | None = None

    def fit(self, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        self.mean = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale = np.where(std > 0.0, std, 1.0)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        if self.mean is None:
            raise EmptyDataError("standardizer used before fit")
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        return self.fit(X).transform(X)


def _check_two_classes(y: np.ndarray) -> None:
    if len(np.unique(y)) < 2:
        raise SingleClassError("binary training data contains a single class")


# --- LSSVM ----------------------------------------------------------------


@dataclass
class LssvmBinary:
    """Dual least-squares SVM with a linear kernel."""

    alphas: np.ndarray
    bias: float
    X_train: np.ndarray

    def decision(self, X: np.ndarray) -> np.ndarray:
        return (self.X_train @ np.asarray(X, dtype=np.float64).T).T @ self.alphas + self.bias


def train_lssvm_binary(X: np.ndarray, y: np.ndarray, gamma: float = 2.0) -> LssvmBinary:
    """Solve [[0, 1^T], [1, K + I/gamma]] [b; a] = [0; y] with K = X X^T."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_two_classes(y)
    n = len(y)
    kernel = X @ X.T
    system = np.empty((n + 1, n + 1))
    system[0, 0] = 0.0
    system[0, 1:] = 1.0
    system[1:, 0] = 1.0
    system[1:, 1:] = kernel + np.eye(n) / gamma
    rhs = np.concatenate([[0.0], y])
    try:
        sol = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"LSSVM system is singular: {exc}") from exc
    return LssvmBinary(alphas=sol[1:], bias=float(sol[0]), X_train=X)


# --- primal SVM -------------------------------------------------------------


@dataclass
class SvmBinary:
    w: np.ndarray
    b: float

    def decision(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.w + self.b


def svm_objective(model: SvmBinary, X: np.ndarray, y: np.ndarray, c: float = 1.0) -> float:
    margins = 1.0 - y * model.decision(X)
    return 0.5 * float(model.w @ model.w) + c * float(np.sum(np.maximum(0.0, margins)))


def train_svm_binary(X: np.ndarray, y: np.ndarray, c: float = 1.0,
                     n_epochs: int = 100, seed: int = 0) -> SvmBinary:
    """Hinge-loss primal minimization by Pegasos-style subgradient descent.

    Decaying step 1/(lambda*t) with lambda = 1/(c*n); the bias is updated
    by the subgradient without regularization. Deterministic per seed.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_two_classes(y)
    n, d = X.shape
    lam = 1.0 / (c * n)
    rng = np.random.default_rng(seed)
    w = np.zeros(d)
    b = 0.0
    t = 0
    for _ in range(n_epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            if y[i] * (X[i] @ w + b) < 1.0:
                w = (1.0 - eta * lam) * w + eta * y[i] * X[i]
                b += eta * lam * y[i]  # scaled-down bias step keeps updates stable
            else:
                w = (1.0 - eta * lam) * w
    return SvmBinary(w=w, b=b)


# --- logistic regression ----------------------------------------------------


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class LogregBinary:
    w: np.ndarray
    b: float
    converged: bool = True

    def decision(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.w + self.b

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision(X))


def train_logreg_binary(X: np.ndarray, y: np.ndarray, l2: float = 1e-4,
                        tol: float = 1e-6, max_iter: int = 20000) -> LogregBinary:
    """Penalized maximum likelihood by full-batch gradient descent.

    Uses Barzilai-Borwein step sizes with a monotone backtracking
    safeguard (plain fixed-step descent stalls long before the 1e-6
    gradient target at this penalty). Hitting the iteration cap emits
    NoConvergenceWarning and flags the returned model.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_two_classes(y)
    n, d = X.shape

    def grad(w, b):
        s = _sigmoid(X @ w + b)
        return X.T @ (s - y) / n + l2 * w, float(np.mean(s - y))

    def objective(w, b):
        z = X @ w + b
        return float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * l2 * float(w @ w)

    lipschitz = 0.25 * float(np.mean(np.sum(X * X, axis=1))) + l2
    step = 1.0 / lipschitz
    w = np.zeros(d)
    b = 0.0
    gw, gb = grad(w, b)
    f = objective(w, b)
    converged = False
    for _ in range(max_iter):
        if max(float(np.max(np.abs(gw))), abs(gb)) < tol:
            converged = True
            break
        for _ in range(60):
            w_new = w - step * gw
            b_new = b - step * gb
            f_new = objective(w_new, b_new)
            if f_new <= f:
                break
            step *= 0.5
        gw_new, gb_new = grad(w_new, b_new)
        dw = np.concatenate([w_new - w, [b_new - b]])
        dg = np.concatenate([gw_new - gw, [gb_new - gb]])
        sy = float(dw @ dg)
        step = float(dw @ dw) / sy if sy > 1e-300 else 1.0 / lipschitz
        w, b, gw, gb, f = w_new, b_new, gw_new, gb_new, f_new
    if not converged:
        warnings.warn("logistic regression hit its iteration cap", NoConvergenceWarning)
    return LogregBinary(w=w, b=float(b), converged=converged)


# --- one-vs-one ensemble ----------------------------------------------------


@dataclass
class OvoEnsemble:
    """Three pairwise binaries combined by majority vote.

    Convention: the member for task (a, b) is trained with +1 for class b
    and -1 for class a, so a positive decision votes for b.
    """

    base_kind: str
    members: list = field(default_factory=list)

    def fit(self, X: np.ndarray, y: np.ndarray, train_binary, seed: int = 0) -> "OvoEnsemble":
        y = np.asarray(y, dtype=int)
        present = set(np.unique(y).tolist())
        missing = [c for c in range(N_CLASSES) if c not in present]
        if missing:
            raise MissingClassError(f"training data lacks class(es) {missing}")
        self.members = []
        for task_no, (lo, hi) in enumerate(OVO_TASKS):
            sel = (y == lo) | (y == hi)
            y_pm = np.where(y[sel] == hi, 1.0, -1.0)
            self.members.append(train_binary(X[sel], y_pm, seed + task_no))
        return self

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        return np.column_stack([m.decision(X) for m in self.members])

    def predict(self, X: np.ndarray) -> np.ndarray:
        scores = self.decision_scores(X)
        n = scores.shape[0]
        votes = np.zeros((n, N_CLASSES), dtype=int)
        margins = np.zeros((n, N_CLASSES))
        for t, (lo, hi) in enumerate(OVO_TASKS):
            s = scores[:, t]
            win_hi = s >= 0
            votes[win_hi, hi] += 1
            votes[~win_hi, lo] += 1
            margins[:, hi] += s
            margins[:, lo] -= s
        out = np.empty(n, dtype=int)
        top = votes.max(axis=1)
        for i in range(n):
            leaders = np.flatnonzero(votes[i] == top[i])
            if len(leaders) == 1:
                out[i] = leaders[0]
            else:
                # 1-1-1 tie: summed signed margins, then lowest class index
                best = margins[i, leaders].max()
                out[i] = leaders[np.flatnonzero(margins[i, leaders] == best)[0]]
        return out


# --- KNN ---------------------------------------------------------------------


class KnnClassifier:
    def __init__(self, k: int = 50):
        self.k = k
        self.X: np.ndarray | None = None
        self.y: np.ndarray | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "KnnClassifier":
        X = np.asarray(X, dtype=np.float64)
        if self.k > len(X):
            raise KTooLargeError(
                f"k={self.k} exceeds the {len(X)} training rows; lower k or add data"
            )
        self.X = X
        self.y = np.asarray(y, dtype=int)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.X is None:
            raise EmptyDataError("KNN used before fit")
        X = np.asarray(X, dtype=np.float64)
        d2 = (
            np.sum(X * X, axis=1)[:, None]
            - 2.0 * X @ self.X.T
            + np.sum(self.X * self.X, axis=1)[None, :]
        )
        # stable sort: equal distances resolve to the lower training row
        nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        out = np.empty(len(X), dtype=int)
        for i in range(len(X)):
            out[i] = np.bincount(self.y[nearest[i]], minlength=N_CLASSES).argmax()
        return out


# --- Gaussian naive Bayes -----------------------------------------------------


class GaussianNb:
    VAR_FLOOR = 1e-9

    def __init__(self) -> None:
        self.log_priors: np.ndarray | None = None
        self.means: np.ndarray | None = None
        self.variances: np.ndarray | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GaussianNb":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=int)
        classes = np.unique(y)
        counts = np.bincount(y, minlength=N_CLASSES)
        for c in classes:
            if counts[c] < 2:
                raise ClassTooSmallError(f"class {c} has {counts[c]} rows; need >= 2")
        d = X.shape[1]
        self.log_priors = np.full(N_CLASSES, -np.inf)
        self.means = np.zeros((N_CLASSES, d))
        self.variances = np.ones((N_CLASSES, d))
        for c in classes:
            rows = X[y == c]
            self.log_priors[c] = np.log(len(rows) / len(X))
            self.means[c] = rows.mean(axis=0)
            self.variances[c] = np.maximum(rows.var(axis=0), self.VAR_FLOOR)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        scores = np.empty((len(X), N_CLASSES))
        for c in range(N_CLASSES):
            if np.isneginf(self.log_priors[c]):
                scores[:, c] = -np.inf
                continue
            var = self.variances[c]
            scores[:, c] = self.log_priors[c] - 0.5 * np.sum(
                np.log(2.0 * np.pi * var) + (X - self.means[c]) ** 2 / var, axis=1
            )
        return scores.argmax(axis=1)


# --- CART decision tree ---------------------------------------------------------


@dataclass
class _TreeNode:
    prediction: int
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


def _gini_from_counts(counts: np.ndarray, total: np.ndarray | float) -> np.ndarray:
    return 1.0 - np.sum((counts / total) ** 2, axis=-1)


class DecisionTree:
    """CART with Gini impurity and exhaustive midpoint threshold search.

    Determinism: at equal impurity the lowest feature index wins, then the
    lowest threshold. Splits with zero Gini gain are allowed (a node only
    becomes a leaf when pure or when no valid split respects min_leaf),
    which lets the tree carve XOR-style structure.
    """

    def __init__(self, max_depth: int = 12, min_leaf: int = 5,
                 rng: np.random.Generator | None = None,
                 max_features: int | None = None):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.rng = rng
        self.max_features = max_features
        self.root: _TreeNode | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "DecisionTree":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=int)
        if len(X) == 0:
            raise EmptyDataError("decision tree got an empty training set")
        if len(X) < self.min_leaf:
            raise EmptyDataError(
                f"need at least min_leaf={self.min_leaf} rows, got {len(X)}"
            )
        self.root = self._build(X, y, depth=0)
        return self

    def _candidate_features(self, d: int) -> np.ndarray:
        if self.max_features is None or self.max_features >= d:
            return np.arange(d)
        chosen = self.rng.choice(d, size=self.max_features, replace=False)
        return np.sort(chosen)

    def _build(self, X: np.ndarray, y: np.ndarray, depth: int) -> _TreeNode:
        counts = np.bincount(y, minlength=N_CLASSES)
        prediction = int(counts.argmax())
        if depth >= self.max_depth or len(y) < 2 * self.min_leaf or counts.max() == len(y):
            return _TreeNode(prediction=prediction)
        best = None  # (impurity, feature, threshold, left_mask)
        n = len(y)
        for j in self._candidate_features(X.shape[1]):
            col = X[:, j]
            order = np.argsort(col, kind="stable")
            col_sorted = col[order]
            onehot = np.zeros((n, N_CLASSES))
            onehot[np.arange(n), y[order]] = 1.0
            cum = np.cumsum(onehot, axis=0)
            sizes = np.arange(1, n)  # left sizes for split after position s-1
            valid = (col_sorted[:-1] < col_sorted[1:]) \
                & (sizes >= self.min_leaf) & (n - sizes >= self.min_leaf)
            if not valid.any():
                continue
            left_counts = cum[:-1][valid]
            left_sizes = sizes[valid].astype(np.float64)
            right_counts = counts[None, :] - left_counts
            right_sizes = n - left_sizes
            impurity = (
                left_sizes * _gini_from_counts(left_counts, left_sizes[:, None])
                + right_sizes * _gini_from_counts(right_counts, right_sizes[:, None])
            ) / n
            pos = int(np.argmin(impurity))
            imp = float(impurity[pos])
            if best is None or imp < best[0] - 1e-15:
                split_at = np.flatnonzero(valid)[pos]
                threshold = 0.5 * (col_sorted[split_at] + col_sorted[split_at + 1])
                best = (imp, int(j), float(threshold), col <= threshold)
        if best is None:
            return _TreeNode(prediction=prediction)
        _, feature, threshold, left_mask = best
        node = _TreeNode(prediction=prediction, feature=feature, threshold=threshold)
        node.left = self._build(X[left_mask], y[left_mask], depth + 1)
        node.right = self._build(X[~left_mask], y[~left_mask], depth + 1)
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.root is None:
            raise EmptyDataError("decision tree used before fit")
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(len(X), dtype=int)
        for i, x in enumerate(X):
            node = self.root
            while not node.is_leaf:
                node = node.left if x[node.feature] <= node.threshold else node.right
            out[i] = node.prediction
        return out


# --- random forest -----------------------------------------------------------


class RandomForest:
    def __init__(self, n_trees: int = 200, max_depth: int = 12, min_leaf: int = 5,
                 bootstrap: bool = True, max_features: str | None = "sqrt",
                 seed: int = 0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.bootstrap = bootstrap
        self.max_features = max_features
        self.seed = seed
        self.trees: list[DecisionTree] = []

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=int)
        if len(X) == 0:
            raise EmptyDataError("random forest got an empty training set")
        d = X.shape[1]
        mtry = int(np.ceil(np.sqrt(d))) if self.max_features == "sqrt" else None
        self.trees = []
        for child_seed in np.random.SeedSequence(self.seed).spawn(self.n_trees):
            rng = np.random.default_rng(child_seed)
            idx = rng.integers(0, len(X), size=len(X)) if self.bootstrap else np.arange(len(X))
            tree = DecisionTree(max_depth=self.max_depth, min_leaf=self.min_leaf,
                                rng=rng, max_features=mtry)
            tree.fit(X[idx], y[idx])
            self.trees.append(tree)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        votes = np.stack([tree.predict(X) for tree in self.trees])
        out = np.empty(votes.shape[1], dtype=int)
        for i in range(votes.shape[1]):
            out[i] = np.bincount(votes[:, i], minlength=N_CLASSES).argmax()
        return out


# --- registry ------------------------------------------------------------------


@dataclass
class BaselineParams:
    lssvm_gamma: float = 2.0
    svm_c: float = 1.0
    svm_epochs: int = 100
    knn_k: int = 50
    rf_trees: int = 200
    dt_max_depth: int = 12
    dt_min_leaf: int = 5
    logreg_l2: float = 1e-4
    logreg_tol: float = 1e-6
    logreg_max_iter: int = 20000


BASELINE_KINDS = ("lssvm", "svm", "lr", "nb", "knn", "dt", "rf")


class _OvoAdapter:
    def __init__(self, base_kind: str, train_binary, seed: int):
        self.ensemble = OvoEnsemble(base_kind=base_kind)
        self._train_binary = train_binary
        self._seed = seed

    def fit(self, X, y):
        self.ensemble.fit(X, y, self._train_binary, seed=self._seed)
        return self

    def predict(self, X):
        return self.ensemble.predict(X)


def make_classifier(kind: str, params: BaselineParams | None = None, seed: int = 0):
    """Instantiate a baseline by name; every returned object has fit/predict."""
    p = params or BaselineParams()
    if kind == "lssvm":
        return _OvoAdapter("lssvm", lambda X, y, s: train_lssvm_binary(X, y, p.lssvm_gamma), seed)
    if kind == "svm":
        return _OvoAdapter("svm", lambda X, y, s: train_svm_binary(X, y, p.svm_c,
                                                                   p.svm_epochs, seed=s), seed)
    if kind == "lr":
        return _OvoAdapter("lr", lambda X, y, s: train_logreg_binary(
            (X), np.where(y > 0, 1.0, 0.0), p.logreg_l2, p.logreg_tol, p.logreg_max_iter), seed)
    if kind == "nb":
        return GaussianNb()
    if kind == "knn":
        return KnnClassifier(k=p.knn_k)
    if kind == "dt":
        return DecisionTree(max_depth=p.dt_max_depth, min_leaf=p.dt_min_leaf)
    if kind == "rf":
        return RandomForest(n_trees=p.rf_trees, max_depth=p.dt_max_depth,
                            min_leaf=p.dt_min_leaf, seed=seed)
    raise ValueError(f"unknown classifier kind: {kind!r}")


# --- MDLPAK1 model container ------------------------------------------------

_PAK_MAGIC = b"MDLP"
_PAK_VERSION = 1
_KIND_IDS = {kind: i for i, kind in enumerate(BASELINE_KINDS)}


def _pack_arrays(arrays: list[np.ndarray]) -> bytes:
    """Payload primitive: u32 array count, then per array u8 dtype code
    (0=f64, 1=i64), u32 ndim, u32 dims..., raw little-endian data."""
    chunks = [struct.pack("<I", len(arrays))]
    for arr in arrays:
        if arr.dtype.kind == "f":
            code, dt = 0, "<f8"
        else:
            code, dt = 1, "<i8"
        chunks.append(struct.pack("<BI", code, arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(np.ascontiguousarray(arr, dtype=dt).tobytes())
    return b"".join(chunks)


def _unpack_arrays(payload: bytes) -> list[np.ndarray]:
    offset = 0
    (count,) = struct.unpack_from("<I", payload, offset)
    offset += 4
    arrays = []
    for _ in range(count):
        code, ndim = struct.unpack_from("<BI", payload, offset)
        offset += 5
        shape = struct.unpack_from(f"<{ndim}I", payload, offset)
        offset += 4 * ndim
        dt = "<f8" if code == 0 else "<i8"
        size = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(payload, dtype=dt, count=size, offset=offset).reshape(shape)
        offset += size * 8
        arrays.append(arr.copy())
    return arrays


def _flatten_tree(tree: DecisionTree) -> list[np.ndarray]:
    feats, thresholds, lefts, rights, preds = [], [], [], [], []

    def visit(node: _TreeNode) -> int:
        my = len(feats)
        feats.append(node.feature)
        thresholds.append(node.threshold)
        lefts.append(-1)
        rights.append(-1)
        preds.append(node.prediction)
        if not node.is_leaf:
            lefts[my] = visit(node.left)
            rights[my] = visit(node.right)
        return my

    visit(tree.root)
    return [np.array(feats, dtype=np.int64), np.array(thresholds, dtype=np.float64),
            np.array(lefts, dtype=np.int64), np.array(rights, dtype=np.int64),
            np.array(preds, dtype=np.int64)]


def _rebuild_tree(arrays: list[np.ndarray], max_depth: int = 12, min_leaf: int = 5) -> DecisionTree:
    feats, thresholds, lefts, rights, preds = arrays

    def build(i: int) -> _TreeNode:
        node = _TreeNode(prediction=int(preds[i]), feature=int(feats[i]),
                         threshold=float(thresholds[i]))
        if not node.is_leaf:
            node.left = build(int(lefts[i]))
            node.right = build(int(rights[i]))
        return node

    tree = DecisionTree(max_depth=max_depth, min_leaf=min_leaf)
    tree.root = build(0)
    return tree


def _model_arrays(kind: str, model) -> list[np.ndarray]:
    if kind == "lssvm":
        out = []
        for m in model.ensemble.members:
            out += [m.alphas, np.array([m.bias]), m.X_train]
        return out
    if kind in ("svm", "lr"):
        out = []
        for m in model.ensemble.members:
            out += [m.w, np.array([m.b])]
        return out
    if kind == "nb":
        return [model.log_priors, model.means, model.variances]
    if kind == "knn":
        return [np.array([model.k], dtype=np.int64), model.X, model.y.astype(np.int64)]
    if kind == "dt":
        return _flatten_tree(model)
    if kind == "rf":
        out = [np.array([len(model.trees)], dtype=np.int64)]
        for tree in model.trees:
            out += _flatten_tree(tree)
        return out
    raise ValueError(f"unknown classifier kind: {kind!r}")


def _model_from_arrays(kind: str, arrays: list[np.ndarray]):
    if kind == "lssvm":
        model = _OvoAdapter(kind, None, 0)
        for i in range(3):
            a, b, xt = arrays[3 * i:3 * i + 3]
            model.ensemble.members.append(LssvmBinary(alphas=a, bias=float(b[0]), X_train=xt))
        return model
    if kind in ("svm", "lr"):
        model = _OvoAdapter(kind, None, 0)
        cls = SvmBinary if kind == "svm" else LogregBinary
        for i in range(3):
            w, b = arrays[2 * i:2 * i + 2]
            model.ensemble.members.append(cls(w=w, b=float(b[0])))
        return model
    if kind == "nb":
        model = GaussianNb()
        model.log_priors, model.means, model.variances = arrays
        return model
    if kind == "knn":
        model = KnnClassifier(k=int(arrays[0][0]))
        model.X, model.y = arrays[1], arrays[2].astype(int)
        return model
    if kind == "dt":
        return _rebuild_tree(arrays)
    if kind == "rf":
        model = RandomForest(n_trees=int(arrays[0][0]))
        model.trees = [_rebuild_tree(arrays[1 + 5 * i:6 + 5 * i])
                       for i in range(int(arrays[0][0]))]
        return model
    raise ValueError(f"unknown classifier kind: {kind!r}")


def save_model(path: str | Path, kind: str, model,
               standardizer: Standardizer | None = None) -> None:
    """Write an MDLPAK1 container; the fitted standardizer rides along so
    the artifact predicts raw feature vectors end to end."""
    if standardizer is None or standardizer.mean is None:
        raise EmptyDataError("save_model needs a fitted standardizer")
    arrays = [standardizer.mean, standardizer.scale] + _model_arrays(kind, model)
    payload = _pack_arrays(arrays)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sBBQ", _PAK_MAGIC, _PAK_VERSION, _KIND_IDS[kind], len(payload)))
        fh.write(payload)


def load_model(path: str | Path):
    """Returns (kind, model, standardizer)."""
    with open(path, "rb") as fh:
        head = fh.read(struct.calcsize("<4sBBQ"))
        magic, version, kind_id, length = struct.unpack("<4sBBQ", head)
        if magic != _PAK_MAGIC:
            raise ValueError(f"{path}: not an MDLPAK1 container")
        if version != _PAK_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        payload = fh.read(length)
    kind = BASELINE_KINDS[kind_id]
    arrays = _unpack_arrays(payload)
    standardizer = Standardizer()
    standardizer.mean, standardizer.scale = arrays[0], arrays[1]
    return kind, _model_from_arrays(kind, arrays[2:]), standardizer

"""From-scratch convolutional network for 3-class cube classification.

Architecture: Conv(4 filters 3x3, same) -> ReLU -> MaxPool 2x2 ->
Conv(8, 3x3, same) -> ReLU -> MaxPool 2x2 -> Conv(16, 3x3, same) -> ReLU
-> flatten -> FC -> ReLU -> Dropout -> FC -> softmax. For 34x34 input the
spatial pipeline is 34 -> 17 -> 8 (floor pooling) and the flatten width
is 8*8*16 = 1024.

Everything is float64 numpy. Convolutions use strided sliding windows and
einsum; gradients are exact analytic derivatives of the mean cross-entropy
and are verified against central finite differences in the tests.
Training is mini-batch Adam with He-normal initialization, fully
deterministic for a given seed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    EmptyTrainingSetError,
    MixedCombinationsError,
    NoCachedForwardError,
    ShapeMismatchError,
    TooSmallError,
)
from .topomap import EegCube

N_CLASSES = 3
PROB_FLOOR = 1e-12


def conv2d_same(x: np.ndarray, filters: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """'same'-padded cross-correlation; x [N,H,W,Cin], filters [K,K,Cin,Cout]."""
    single = x.ndim == 3
    if single:
        x = x[None]
    k = filters.shape[0]
    if filters.ndim != 4 or filters.shape[1] != k or k % 2 == 0:
        raise ShapeMismatchError(f"filters must be [K,K,Cin,Cout] with odd K, got {filters.shape}")
    if x.ndim != 4 or x.shape[3] != filters.shape[2]:
        raise ShapeMismatchError(
            f"input channels {x.shape} do not match filters {filters.shape}"
        )
    p = (k - 1) // 2
    xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
    win = sliding_window_view(xp, (k, k), axis=(1, 2))  # [N,H,W,Cin,K,K]
    out = np.einsum("nhwckl,klco->nhwo", win, filters, optimize=True) + bias
    return out[0] if single else out


def _conv2d_backward(x: np.ndarray, filters: np.ndarray, dout: np.ndarray):
    k = filters.shape[0]
    p = (k - 1) // 2
    xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
    win = sliding_window_view(xp, (k, k), axis=(1, 2))
    dbias = dout.sum(axis=(0, 1, 2))
    dfilters = np.einsum("nhwckl,nhwo->klco", win, dout, optimize=True)
    dpad = np.pad(dout, ((0, 0), (p, p), (p, p), (0, 0)))
    dwin = sliding_window_view(dpad, (k, k), axis=(1, 2))  # [N,H,W,Cout,K,K]
    flipped = filters[::-1, ::-1]
    dx = np.einsum("nhwokl,klco->nhwc", dwin, flipped, optimize=True)
    return dx, dfilters, dbias


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, x)


def maxpool2(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Non-overlapping 2x2 max pooling with floor cropping.

    Returns (pooled, argmax) where argmax holds the in-window row-major
    index (0..3) of each maximum; ties resolve to the first position.
    """
    single = x.ndim == 3
    if single:
        x = x[None]
    n, h, w, c = x.shape
    if h < 2 or w < 2:
        raise TooSmallError(f"maxpool2 needs spatial dims >= 2, got {h}x{w}")
    hh, wh = h // 2, w // 2
    xt = x[:, :hh * 2, :wh * 2, :].reshape(n, hh, 2, wh, 2, c)
    win = xt.transpose(0, 1, 3, 5, 2, 4).reshape(n, hh, wh, c, 4)
    am = win.argmax(axis=-1)
    out = np.take_along_axis(win, am[..., None], axis=-1)[..., 0]
    if single:
        return out[0], am[0]
    return out, am


def _maxpool2_backward(dout: np.ndarray, argmax: np.ndarray, in_shape) -> np.ndarray:
    n, h, w, c = in_shape
    hh, wh = h // 2, w // 2
    dwin = np.zeros((n, hh, wh, c, 4))
    np.put_along_axis(dwin, argmax[..., None], dout[..., None], axis=-1)
    dx = np.zeros(in_shape)
    dx[:, :hh * 2, :wh * 2, :] = (
        dwin.reshape(n, hh, wh, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(n, hh * 2, wh * 2, c)
    )
    return dx


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_crossentropy(probs: np.ndarray, label: int) -> float:
    """Negative log-likelihood with a 1e-12 probability floor."""
    return float(-np.log(max(float(probs[label]), PROB_FLOOR)))


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    dropout_rate: float = 0.5
    fc_width: int = 128
    # Optional: stop once training accuracy reaches this threshold.
    early_stop_train_acc: float | None = None

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")


_PARAM_FIELDS = (
    "conv1_w", "conv1_b", "conv2_w", "conv2_b", "conv3_w", "conv3_b",
    "fc1_w", "fc1_b", "out_w", "out_b",
)


@dataclass
class CnnModel:
    conv1_w: np.ndarray
    conv1_b: np.ndarray
    conv2_w: np.ndarray
    conv2_b: np.ndarray
    conv3_w: np.ndarray
    conv3_b: np.ndarray
    fc1_w: np.ndarray
    fc1_b: np.ndarray
    out_w: np.ndarray
    out_b: np.ndarray
    dropout_rate: float = 0.5
    _cache: dict | None = field(default=None, repr=False, compare=False)

    @property
    def in_channels(self) -> int:
        return self.conv1_w.shape[2]

    @property
    def fc_width(self) -> int:
        return self.fc1_w.shape[1]

    @property
    def flatten_dim(self) -> int:
        return self.fc1_w.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in _PARAM_FIELDS}

    def n_params(self) -> int:
        return sum(p.size for p in self.params().values())


def flatten_dim_for(in_hw: tuple[int, int]) -> int:
    h, w = in_hw
    return (h // 2 // 2) * (w // 2 // 2) * 16


def build_model(in_channels: int, in_hw: tuple[int, int] = (34, 34),
                fc_width: int = 128, dropout_rate: float = 0.5,
                seed: int = 0) -> CnnModel:
    """He-normal (fan-in) initialized model with zero biases."""
    if in_hw[0] // 4 < 1 or in_hw[1] // 4 < 1:
        raise ShapeMismatchError(f"input {in_hw} too small for two 2x2 pools")
    rng = np.random.default_rng(seed)

    def he(shape, fan_in):
        return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)

    flat = flatten_dim_for(in_hw)
    return CnnModel(
        conv1_w=he((3, 3, in_channels, 4), 9 * in_channels),
        conv1_b=np.zeros(4),
        conv2_w=he((3, 3, 4, 8), 9 * 4),
        conv2_b=np.zeros(8),
        conv3_w=he((3, 3, 8, 16), 9 * 8),
        conv3_b=np.zeros(16),
        fc1_w=he((flat, fc_width), flat),
        fc1_b=np.zeros(fc_width),
        out_w=he((fc_width, N_CLASSES), fc_width),
        out_b=np.zeros(N_CLASSES),
        dropout_rate=dropout_rate,
    )


def forward_batch(model: CnnModel, x: np.ndarray, training: bool = False,
                  rng: np.random.Generator | None = None,
                  dropout_mask: np.ndarray | None = None,
                  ) -> tuple[np.ndarray, dict]:
    """Run the network on a batch [N,H,W,C]; returns (probs [N,3], cache)."""
    if x.ndim != 4:
        raise ShapeMismatchError(f"expected [N,H,W,C] input, got shape {x.shape}")
    if x.shape[3] != model.in_channels:
        raise ShapeMismatchError(
            f"cube has {x.shape[3]} channels, model expects {model.in_channels}"
        )
    z1 = conv2d_same(x, model.conv1_w, model.conv1_b)
    a1 = relu(z1)
    p1, am1 = maxpool2(a1)
    z2 = conv2d_same(p1, model.conv2_w, model.conv2_b)
    a2 = relu(z2)
    p2, am2 = maxpool2(a2)
    z3 = conv2d_same(p2, model.conv3_w, model.conv3_b)
    a3 = relu(z3)
    flat = a3.reshape(x.shape[0], -1)
    if flat.shape[1] != model.flatten_dim:
        raise ShapeMismatchError(
            f"flatten width {flat.shape[1]} does not match fc1 input {model.flatten_dim}"
        )
    z4 = flat @ model.fc1_w + model.fc1_b
    a4 = relu(z4)
    rate = model.dropout_rate
    if training and rate > 0.0:
        if dropout_mask is None:
            if rng is None:
                raise ValueError("training forward with dropout needs an rng or a mask")
            dropout_mask = (rng.random(a4.shape) >= rate).astype(np.float64)
        drop_scale = 1.0 / (1.0 - rate)
    else:
        dropout_mask = np.ones_like(a4)
        drop_scale = 1.0
    d4 = a4 * dropout_mask * drop_scale
    logits = d4 @ model.out_w + model.out_b
    probs = softmax(logits)
    if not np.isfinite(probs).all():
        raise FloatingPointError("non-finite probabilities in forward pass")
    cache = dict(x=x, z1=z1, a1=a1, am1=am1, p1=p1, z2=z2, a2=a2, am2=am2, p2=p2,
                 z3=z3, a3=a3, flat=flat, z4=z4, a4=a4, mask=dropout_mask,
                 drop_scale=drop_scale, d4=d4, probs=probs)
    return probs, cache


def forward(model: CnnModel, cube: EegCube | np.ndarray, training: bool = False,
            rng: np.random.Generator | None = None) -> np.ndarray:
    """Class probabilities [3] for a single cube; caches activations."""
    tensor = cube.tensor if isinstance(cube, EegCube) else np.asarray(cube)
    probs, cache = forward_batch(model, tensor[None], training=training, rng=rng)
    model._cache = cache
    return probs[0]


def _backward_from_cache(model: CnnModel, cache: dict, labels: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of the mean cross-entropy over the cached batch."""
    probs = cache["probs"]
    n = probs.shape[0]
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n

    grads: dict[str, np.ndarray] = {}
    grads["out_w"] = cache["d4"].T @ dlogits
    grads["out_b"] = dlogits.sum(axis=0)
    dd4 = dlogits @ model.out_w.T
    da4 = dd4 * cache["mask"] * cache["drop_scale"]
    dz4 = da4 * (cache["z4"] > 0.0)
    grads["fc1_w"] = cache["flat"].T @ dz4
    grads["fc1_b"] = dz4.sum(axis=0)
    dflat = dz4 @ model.fc1_w.T
    da3 = dflat.reshape(cache["a3"].shape)
    dz3 = da3 * (cache["z3"] > 0.0)
    dp2, grads["conv3_w"], grads["conv3_b"] = _conv2d_backward(cache["p2"], model.conv3_w, dz3)
    da2 = _maxpool2_backward(dp2, cache["am2"], cache["a2"].shape)
    dz2 = da2 * (cache["z2"] > 0.0)
    dp1, grads["conv2_w"], grads["conv2_b"] = _conv2d_backward(cache["p1"], model.conv2_w, dz2)
    da1 = _maxpool2_backward(dp1, cache["am1"], cache["a1"].shape)
    dz1 = da1 * (cache["z1"] > 0.0)
    _, grads["conv1_w"], grads["conv1_b"] = _conv2d_backward(cache["x"], model.conv1_w, dz1)
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise FloatingPointError(f"non-finite gradient for {name}")
    return grads


def backward(model: CnnModel, label: int) -> dict[str, np.ndarray]:
    """Gradients for the most recent single-example forward pass."""
    if model._cache is None:
        raise NoCachedForwardError("call forward() before backward()")
    return _backward_from_cache(model, model._cache, np.array([label]))


@dataclass
class EpochStats:
    epoch: int
    loss: float
    train_acc: float


def predict_batch(model: CnnModel, x: np.ndarray) -> np.ndarray:
    probs, _ = forward_batch(model, x, training=False)
    return probs.argmax(axis=1)


def _stack_cubes(cubes: list[EegCube]) -> tuple[np.ndarray, np.ndarray]:
    if not cubes:
        raise EmptyTrainingSetError("no training cubes")
    kinds = cubes[0].channel_kinds
    for cube in cubes:
        if cube.channel_kinds != kinds:
            raise MixedCombinationsError(
                f"mixed cube combinations: {cube.channel_kinds} vs {kinds}"
            )
        if cube.label is None:
            raise EmptyTrainingSetError("training cube without a label")
    x = np.stack([c.tensor for c in cubes])
    y = np.array([int(c.label) for c in cubes])
    return x, y


def train(cubes: list[EegCube] | np.ndarray, labels: np.ndarray | None,
          cfg: TrainConfig) -> tuple[CnnModel, list[EpochStats]]:
    """Mini-batch Adam training; deterministic for a given cfg.seed.

    Accepts either a list of labeled EegCubes (labels=None) or a raw
    [N,H,W,C] array plus a label vector. Returns the trained model and the
    per-epoch (mean loss, training accuracy) history; accuracy is measured
    with a dropout-free pass at the end of each epoch.
    """
    if isinstance(cubes, np.ndarray):
        if labels is None:
            raise EmptyTrainingSetError("label vector required with array input")
        x, y = cubes, np.asarray(labels, dtype=int)
        if len(x) == 0:
            raise EmptyTrainingSetError("no training cubes")
    else:
        x, y = _stack_cubes(cubes)

    rng = np.random.default_rng(cfg.seed)
    model = build_model(x.shape[3], in_hw=(x.shape[1], x.shape[2]),
                        fc_width=cfg.fc_width, dropout_rate=cfg.dropout_rate,
                        seed=cfg.seed)
    n = len(x)
    params = model.params()
    m = {k: np.zeros_like(p) for k, p in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    b1, b2, eps = 0.9, 0.999, 1e-8
    t = 0
    history: list[EpochStats] = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, yb = x[idx], y[idx]
            probs, cache = forward_batch(model, xb, training=True, rng=rng)
            p_true = np.maximum(probs[np.arange(len(idx)), yb], PROB_FLOOR)
            loss_sum += float(-np.log(p_true).sum())
            grads = _backward_from_cache(model, cache, yb)
            if cfg.learning_rate > 0.0:
                t += 1
                for name, g in grads.items():
                    m[name] = b1 * m[name] + (1 - b1) * g
                    v[name] = b2 * v[name] + (1 - b2) * g * g
                    mhat = m[name] / (1 - b1**t)
                    vhat = v[name] / (1 - b2**t)
                    params[name] -= cfg.learning_rate * mhat / (np.sqrt(vhat) + eps)
        acc = float(np.mean(predict_batch(model, x) == y))
        history.append(EpochStats(epoch=epoch, loss=loss_sum / n, train_acc=acc))
        if cfg.early_stop_train_acc is not None and acc >= cfg.early_stop_train_acc:
            break
    return model, history


def write_history_csv(path: str | Path, history: list[EpochStats]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("epoch,loss,train_acc\n")
        for st in history:
            fh.write(f"{st.epoch},{st.loss:.17g},{st.train_acc:.17g}\n")


# --- CNNCKPT1 checkpoint --------------------------------------------------

_CKPT_MAGIC = b"CNNC"
_CKPT_VERSION = 1


def save_checkpoint(path: str | Path, model: CnnModel) -> None:
    """CNNCKPT1: magic, version, u16 C_in, u16 fc width, then each parameter
    tensor in architecture order as (u32 element count, f32 data)."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sBHH", _CKPT_MAGIC, _CKPT_VERSION,
                             model.in_channels, model.fc_width))
        for name in _PARAM_FIELDS:
            arr = getattr(model, name)
            fh.write(struct.pack("<I", arr.size))
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path: str | Path, dropout_rate: float = 0.5) -> CnnModel:
    with open(path, "rb") as fh:
        head = fh.read(struct.calcsize("<4sBHH"))
        magic, version, c_in, fc_width = struct.unpack("<4sBHH", head)
        if magic != _CKPT_MAGIC:
            raise ValueError(f"{path}: not a CNNCKPT1 checkpoint")
        if version != _CKPT_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        flat = None
        arrays = []
        for name in _PARAM_FIELDS:
            (count,) = struct.unpack("<I", fh.read(4))
            arrays.append(np.frombuffer(fh.read(count * 4), dtype="<f4").astype(np.float64))
    shapes = {
        "conv1_w": (3, 3, c_in, 4), "conv1_b": (4,),
        "conv2_w": (3, 3, 4, 8), "conv2_b": (8,),
        "conv3_w": (3, 3, 8, 16), "conv3_b": (16,),
        "fc1_b": (fc_width,),
        "out_w": (fc_width, N_CLASSES), "out_b": (N_CLASSES,),
    }
    kwargs = {}
    for name, arr in zip(_PARAM_FIELDS, arrays):
        if name == "fc1_w":
            flat = arr.size // fc_width
            kwargs[name] = arr.reshape(flat, fc_width)
        else:
            kwargs[name] = arr.reshape(shapes[name])
    return CnnModel(dropout_rate=dropout_rate, **kwargs)


def numeric_gradients(model: CnnModel, x: np.ndarray, label: int,
                      h: float = 1e-4,
                      dropout_mask: np.ndarray | None = None) -> dict[str, np.ndarray]:
    """Central finite differences of the single-example loss, all parameters.

    The dropout mask (if any) is held fixed across evaluations so the loss
    is a smooth function of the parameters.
    """
    xb = x[None] if x.ndim == 3 else x

    def loss_value() -> float:
        probs, _ = forward_batch(model, xb, training=dropout_mask is not None,
                                 dropout_mask=dropout_mask)
        return loss_crossentropy(probs[0], label)

    grads = {}
    for name, arr in model.params().items():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        while not it.finished:
            ix = it.multi_index
            orig = arr[ix]
            arr[ix] = orig + h
            up = loss_value()
            arr[ix] = orig - h
            down = loss_value()
            arr[ix] = orig
            g[ix] = (up - down) / (2 * h)
            it.iternext()
        grads[name] = g
    return grads


def gradient_max_rel_error(model: CnnModel, x: np.ndarray, label: int,
                           h: float = 1e-4,
                           dropout_mask: np.ndarray | None = None) -> float:
    """Worst relative disagreement between analytic and numeric gradients."""
    xb = x[None] if x.ndim == 3 else x
    _, cache = forward_batch(model, xb, training=dropout_mask is not None,
                             dropout_mask=dropout_mask)
    analytic = _backward_from_cache(model, cache, np.array([label]))
    numeric = numeric_gradients(model, x, label, h=h, dropout_mask=dropout_mask)
    worst = 0.0
    for name in analytic:
        a, nu = analytic[name], numeric[name]
        denom = np.maximum(np.abs(a) + np.abs(nu), 1e-6)
        worst = max(worst, float(np.max(np.abs(a - nu) / denom)))
    return worst

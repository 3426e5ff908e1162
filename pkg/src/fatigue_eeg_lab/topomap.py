"""Topographic scalp maps and stacked 3-D feature cubes.

Per-channel feature values are projected onto a 2-D head disk (azimuthal
equidistant projection of standard 10-20 angles), rasterized at 67x67 by
inverse-distance-weighted interpolation, downsampled bilinearly to 34x34,
z-scored per feature kind with training-set statistics, and stacked into
[34 x 34 x C] cubes whose channel count depends on the feature
combination (4/5/2/9/6/7/11).

IDW with exponent 2 is used instead of spline interpolation: it is
deterministic and every interpolated value stays inside the [min, max]
range of the electrode values, which the tests rely on.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .channels import CHANNELS, N_CHANNELS, CHANNEL_INDEX, MIRROR_PAIRS, FatigueLevel
from .dsp import ENTROPY_KINDS, FEATURE_KINDS, FREQUENCY_KINDS, TIME_KINDS, FeatureSet
from .errors import (
    BadMontageFileError,
    NonFiniteValueError,
    UnfittedNormalizerError,
    WrongInputSizeError,
)

RAW_GRID = 67
CUBE_GRID = 34

_FRONTAL = ("AF3", "AF4", "F3", "F4", "F7", "F8")
_OCCIPITAL = ("O1", "O2")


class FeatureCombination(enum.IntEnum):
    """The seven stackable feature combinations; values are the wire ids."""

    FREQUENCY = 0
    TIME = 1
    ENTROPY = 2
    F_TIME = 3
    F_ENTROPY = 4
    T_ENTROPY = 5
    F_T_ENTROPY = 6

    @property
    def kinds(self) -> tuple[str, ...]:
        return _COMBO_KINDS[self]

    @property
    def n_maps(self) -> int:
        return len(self.kinds)

    @property
    def display_name(self) -> str:
        return _COMBO_NAMES[self]

    @classmethod
    def from_name(cls, name: str) -> "FeatureCombination":
        key = name.strip().lower()
        for combo, disp in _COMBO_NAMES.items():
            if key in (disp.lower(), combo.name.lower()):
                return combo
        raise ValueError(f"unknown feature combination: {name!r}")


_COMBO_KINDS = {
    FeatureCombination.FREQUENCY: FREQUENCY_KINDS,
    FeatureCombination.TIME: TIME_KINDS,
    FeatureCombination.ENTROPY: ENTROPY_KINDS,
    FeatureCombination.F_TIME: FREQUENCY_KINDS + TIME_KINDS,
    FeatureCombination.F_ENTROPY: FREQUENCY_KINDS + ENTROPY_KINDS,
    FeatureCombination.T_ENTROPY: TIME_KINDS + ENTROPY_KINDS,
    FeatureCombination.F_T_ENTROPY: FREQUENCY_KINDS + TIME_KINDS + ENTROPY_KINDS,
}

_COMBO_NAMES = {
    FeatureCombination.FREQUENCY: "Frequency",
    FeatureCombination.TIME: "Time",
    FeatureCombination.ENTROPY: "Entropy",
    FeatureCombination.F_TIME: "F_Time",
    FeatureCombination.F_ENTROPY: "F_Entropy",
    FeatureCombination.T_ENTROPY: "T_Entropy",
    FeatureCombination.F_T_ENTROPY: "F_T_Entropy",
}

# Column order used by all report tables.
REPORT_COMBO_ORDER = (
    FeatureCombination.T_ENTROPY,
    FeatureCombination.FREQUENCY,
    FeatureCombination.F_ENTROPY,
    FeatureCombination.ENTROPY,
    FeatureCombination.TIME,
    FeatureCombination.F_TIME,
    FeatureCombination.F_T_ENTROPY,
)


@dataclass
class ElectrodeLayout:
    """2-D electrode positions inside the closed unit head disk, nose +y."""

    positions: dict[str, tuple[float, float]]
    _idw_cache: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        missing = [ch for ch in CHANNELS if ch not in self.positions]
        if missing:
            raise BadMontageFileError(f"montage lacks channels: {missing}")
        for ch, (x, y) in self.positions.items():
            if x * x + y * y > 1.0 + 1e-12:
                raise BadMontageFileError(f"{ch} lies outside the unit disk: ({x}, {y})")
        for left, right in MIRROR_PAIRS:
            lx, ly = self.positions[left]
            rx, ry = self.positions[right]
            if abs(lx + rx) > 1e-6 or abs(ly - ry) > 1e-6:
                raise BadMontageFileError(f"{left}/{right} are not mirror images")
        for ch in _FRONTAL:
            if self.positions[ch][1] <= 0:
                raise BadMontageFileError(f"frontal electrode {ch} must have y > 0")
        for ch in _OCCIPITAL:
            if self.positions[ch][1] >= 0:
                raise BadMontageFileError(f"occipital electrode {ch} must have y < 0")

    def coords(self) -> np.ndarray:
        """Positions as [14 x 2] in canonical channel order."""
        return np.array([self.positions[ch] for ch in CHANNELS], dtype=np.float64)

    def idw_weights(self, g: int) -> np.ndarray:
        """Row-stochastic IDW weight matrix [g*g x 14]; zero rows outside the disk."""
        if g not in self._idw_cache:
            xs, ys, mask = _grid(g)
            gx, gy = np.meshgrid(xs, ys)
            pts = np.column_stack([gx.ravel(), gy.ravel()])
            elec = self.coords()
            d2 = np.sum((pts[:, None, :] - elec[None, :, :]) ** 2, axis=2)
            w = np.zeros_like(d2)
            snapped = d2 < 1e-18
            snap_rows = snapped.any(axis=1)
            with np.errstate(divide="ignore"):
                inv = 1.0 / d2
            w[~snap_rows] = inv[~snap_rows]
            w[snap_rows] = 0.0
            w[snapped] = 1.0
            w /= w.sum(axis=1, keepdims=True)
            w[~mask.ravel()] = 0.0
            self._idw_cache[g] = w
        return self._idw_cache[g]


@dataclass
class TopoMap:
    """An interpolated scalp image; values outside ``mask`` are zero."""

    grid: np.ndarray
    mask: np.ndarray
    feature_kind: str = ""

    @property
    def size(self) -> int:
        return self.grid.shape[0]


@dataclass
class EegCube:
    """Stack of z-scored topographic maps: ``tensor`` is [34 x 34 x C]."""

    tensor: np.ndarray
    channel_kinds: tuple[str, ...]
    label: FatigueLevel | None = None

    def __post_init__(self) -> None:
        self.tensor = np.asarray(self.tensor, dtype=np.float64)
        if self.tensor.ndim != 3 or self.tensor.shape[2] != len(self.channel_kinds):
            raise ValueError(
                f"tensor shape {self.tensor.shape} does not match {len(self.channel_kinds)} kinds"
            )


@lru_cache(maxsize=8)
def _grid(g: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(x coords, y coords, inside-disk mask) for a g x g grid over [-1, 1]^2.

    Row 0 is the top of the head (y = +1); column 0 is the left (x = -1).
    """
    xs = np.linspace(-1.0, 1.0, g)
    ys = np.linspace(1.0, -1.0, g)
    gx, gy = np.meshgrid(xs, ys)
    mask = gx * gx + gy * gy <= 1.0 + 1e-12
    return xs, ys, mask


def parse_montage(text: str) -> ElectrodeLayout:
    """Parse ``NAME THETA_DEG PHI_DEG`` lines and project to the head disk.

    The projection is azimuthal equidistant about the vertex: a point at
    angular distance a from the vertex lands at radius a / (pi/2), so the
    preauricular plane maps to the unit circle.
    """
    positions: dict[str, tuple[float, float]] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise BadMontageFileError(f"montage line {line_no}: expected 'NAME THETA PHI', got {raw!r}")
        name = parts[0]
        try:
            theta = float(parts[1])
            phi = float(parts[2])
        except ValueError:
            raise BadMontageFileError(f"montage line {line_no}: non-numeric angle in {raw!r}") from None
        if name in positions:
            raise BadMontageFileError(f"montage line {line_no}: duplicate electrode {name}")
        t = np.radians(theta)
        p = np.radians(phi) - np.pi / 2.0
        x3 = np.sin(t) * np.sin(p)
        y3 = np.cos(t)
        z3 = np.sin(t) * np.cos(p)
        alpha = np.arccos(np.clip(z3, -1.0, 1.0))
        lateral = np.hypot(x3, y3)
        if lateral < 1e-12:
            positions[name] = (0.0, 0.0)
        else:
            r = alpha / (np.pi / 2.0)
            positions[name] = (float(r * x3 / lateral), float(r * y3 / lateral))
    return ElectrodeLayout(positions=positions)


def default_layout() -> ElectrodeLayout:
    """Layout from the bundled 10-20 montage table."""
    text = resources.files("fatigue_eeg_lab").joinpath("data/montage_10_20.txt").read_text()
    return parse_montage(text)


def load_montage(path: str | Path) -> ElectrodeLayout:
    return parse_montage(Path(path).read_text())


def _values_array(values) -> np.ndarray:
    if isinstance(values, dict):
        missing = [ch for ch in CHANNELS if ch not in values]
        if missing:
            raise NonFiniteValueError(f"missing electrode values for {missing}")
        arr = np.array([values[ch] for ch in CHANNELS], dtype=np.float64)
    else:
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != (N_CHANNELS,):
            raise NonFiniteValueError(f"expected {N_CHANNELS} electrode values, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        bad = CHANNELS[int(np.argwhere(~np.isfinite(arr))[0][0])]
        raise NonFiniteValueError(f"non-finite electrode value at {bad}")
    return arr


def rasterize(values, layout: ElectrodeLayout, g: int = RAW_GRID,
              feature_kind: str = "") -> TopoMap:
    """IDW (exponent 2) interpolation of 14 electrode values onto the disk.

    A grid point within 1e-9 of an electrode takes that electrode's exact
    value; cells outside the head disk are zero.
    """
    arr = _values_array(values)
    w = layout.idw_weights(g)
    _, _, mask = _grid(g)
    grid = (w @ arr).reshape(g, g)
    return TopoMap(grid=grid, mask=mask.copy(), feature_kind=feature_kind)


def downsample(topo: TopoMap, g_out: int = CUBE_GRID) -> TopoMap:
    """Bilinear resample of a 67x67 map onto a 34x34 grid, same extent.

    The mask is resampled by nearest neighbor and outside-mask cells are
    re-zeroed.
    """
    if topo.grid.shape != (RAW_GRID, RAW_GRID):
        raise WrongInputSizeError(
            f"downsample expects a {RAW_GRID}x{RAW_GRID} map, got {topo.grid.shape}"
        )
    g_in = topo.size
    # Fractional source indices of the target grid (both grids span [-1, 1]).
    u = np.linspace(0.0, g_in - 1.0, g_out)
    i0 = np.clip(np.floor(u).astype(int), 0, g_in - 2)
    frac = u - i0
    i1 = i0 + 1

    f_r = frac[:, None]
    f_c = frac[None, :]
    g00 = topo.grid[np.ix_(i0, i0)]
    g01 = topo.grid[np.ix_(i0, i1)]
    g10 = topo.grid[np.ix_(i1, i0)]
    g11 = topo.grid[np.ix_(i1, i1)]
    rows = (g00 * (1 - f_r) * (1 - f_c) + g01 * (1 - f_r) * f_c
            + g10 * f_r * (1 - f_c) + g11 * f_r * f_c)

    nearest = np.clip(np.round(u).astype(int), 0, g_in - 1)
    mask = topo.mask[np.ix_(nearest, nearest)]
    rows[~mask] = 0.0
    return TopoMap(grid=rows, mask=mask, feature_kind=topo.feature_kind)


def build_raw_maps(feature_sets: list[FeatureSet], kinds: tuple[str, ...],
                   layout: ElectrodeLayout, g_out: int = CUBE_GRID) -> np.ndarray:
    """Unnormalized downsampled maps for many segments: [n x g x g x K]."""
    n = len(feature_sets)
    out = np.empty((n, g_out, g_out, len(kinds)))
    for i, fset in enumerate(feature_sets):
        for j, kind in enumerate(kinds):
            out[i, :, :, j] = downsample(rasterize(fset.kind(kind), layout,
                                                   feature_kind=kind), g_out).grid
    return out


class MapNormalizer:
    """Per-feature-kind z-scoring of map values, fitted on training maps only.

    Statistics are computed over inside-mask pixels; a zero-deviation kind
    leaves its maps at 0 rather than dividing by zero. Outside-mask cells
    stay 0 after scaling.
    """

    def __init__(self) -> None:
        self.stats: dict[str, tuple[float, float]] = {}

    def fit_maps(self, raw_maps: np.ndarray, kinds: tuple[str, ...],
                 mask: np.ndarray) -> "MapNormalizer":
        """raw_maps is [n x g x g x K] aligned with ``kinds``."""
        flat_mask = mask.ravel()
        for j, kind in enumerate(kinds):
            vals = raw_maps[:, :, :, j].reshape(raw_maps.shape[0], -1)[:, flat_mask]
            self.stats[kind] = (float(np.mean(vals)), float(np.std(vals)))
        return self

    def fit(self, feature_sets: list[FeatureSet], kinds: tuple[str, ...],
            layout: ElectrodeLayout) -> "MapNormalizer":
        raw = build_raw_maps(feature_sets, kinds, layout)
        _, _, mask = _grid(CUBE_GRID)
        return self.fit_maps(raw, kinds, mask)

    def transform(self, grid: np.ndarray, kind: str, mask: np.ndarray) -> np.ndarray:
        """Z-score one map (or a leading-batched stack of maps) of one kind."""
        if kind not in self.stats:
            raise UnfittedNormalizerError(f"normalizer has no statistics for kind {kind!r}")
        mean, std = self.stats[kind]
        if std == 0.0:
            out = np.zeros_like(grid)
        else:
            out = (grid - mean) / std
        out[..., ~mask] = 0.0
        return out

    def transform_stack(self, raw_maps: np.ndarray, kinds: tuple[str, ...],
                        mask: np.ndarray) -> np.ndarray:
        """Z-score a whole [n x g x g x K] stack kind by kind."""
        out = np.empty_like(raw_maps)
        for j, kind in enumerate(kinds):
            out[:, :, :, j] = self.transform(raw_maps[:, :, :, j], kind, mask)
        return out

    @classmethod
    def identity(cls, kinds: tuple[str, ...]) -> "MapNormalizer":
        norm = cls()
        for kind in kinds:
            norm.stats[kind] = (0.0, 1.0)
        return norm


def build_cube(features: FeatureSet, combo: FeatureCombination,
               layout: ElectrodeLayout, normalizer: MapNormalizer,
               label: FatigueLevel | None = None) -> EegCube:
    """Rasterize, downsample, z-score, and stack one segment's maps."""
    kinds = combo.kinds
    planes = []
    for kind in kinds:
        topo = downsample(rasterize(features.kind(kind), layout, feature_kind=kind))
        planes.append(normalizer.transform(topo.grid, kind, topo.mask))
    return EegCube(tensor=np.stack(planes, axis=-1), channel_kinds=kinds, label=label)


# --- EEGCUBE1 archive ----------------------------------------------------

_MAGIC = b"EEGC"
_VERSION = 1
_UNLABELED = 255


def save_cubes(path: str | Path, cubes: list[EegCube], combo: FeatureCombination) -> None:
    """Write cubes in the EEGCUBE1 binary layout (little-endian, f32 data)."""
    if not cubes:
        raise ValueError("refusing to write an empty cube archive")
    h, w, c = cubes[0].tensor.shape
    if c != combo.n_maps:
        raise ValueError(f"cube channel count {c} does not match {combo.display_name}")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sBIHHHB", _MAGIC, _VERSION, len(cubes), h, w, c, int(combo)))
        labels = bytes(
            _UNLABELED if cube.label is None else int(cube.label) for cube in cubes
        )
        fh.write(labels)
        for cube in cubes:
            if cube.tensor.shape != (h, w, c):
                raise ValueError("all cubes in an archive must share one shape")
            # [cube][channel][row][col] order
            fh.write(np.ascontiguousarray(
                cube.tensor.transpose(2, 0, 1), dtype="<f4").tobytes())


def load_cubes(path: str | Path) -> tuple[list[EegCube], FeatureCombination]:
    with open(path, "rb") as fh:
        head = fh.read(struct.calcsize("<4sBIHHHB"))
        magic, version, n, h, w, c, combo_id = struct.unpack("<4sBIHHHB", head)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not an EEGCUBE1 archive")
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        combo = FeatureCombination(combo_id)
        if c != combo.n_maps:
            raise ValueError(f"{path}: channel count {c} inconsistent with {combo.display_name}")
        label_bytes = fh.read(n)
        data = np.frombuffer(fh.read(n * c * h * w * 4), dtype="<f4")
    data = data.reshape(n, c, h, w).astype(np.float64)
    cubes = []
    for i in range(n):
        label = None if label_bytes[i] == _UNLABELED else FatigueLevel(label_bytes[i])
        cubes.append(EegCube(tensor=data[i].transpose(1, 2, 0),
                             channel_kinds=combo.kinds, label=label))
    return cubes, combo

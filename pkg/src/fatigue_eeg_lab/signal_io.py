"""Loading, validation, synthesis, and segmentation of EEG recordings.

On-disk formats:

* Recording CSV: header row of channel names (any order, must cover the
  full 14-channel montage), one row per sample, decimal microvolt values.
  An optional leading ``t`` column is ignored. The sampling rate is not
  stored in the file; it is supplied by the caller (default 128 Hz).
* Label CSV: columns ``second,label`` with ``label`` one of
  low/medium/high and 1-based seconds.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channels import CHANNELS, N_CHANNELS, FatigueLevel
from .errors import (
    BadHeaderError,
    ConfigError,
    EmptyFileError,
    MissingChannelError,
    NonNumericSampleError,
)

DEFAULT_FS = 128


@dataclass
class EegRecording:
    """A validated multichannel EEG time series in microvolts.

    ``samples`` has shape [n_samples, 14] with columns in canonical
    channel order.
    """

    subject_id: str
    sampling_rate: int
    samples: np.ndarray
    channels: tuple[str, ...] = CHANNELS

    def __post_init__(self) -> None:
        if self.sampling_rate <= 0:
            raise ValueError(f"sampling_rate must be positive, got {self.sampling_rate}")
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2 or self.samples.shape[1] != N_CHANNELS:
            raise ValueError(
                f"samples must be [n_samples x {N_CHANNELS}], got shape {self.samples.shape}"
            )
        if tuple(self.channels) != CHANNELS:
            raise ValueError("channels must be the canonical 14-channel montage order")
        if not np.isfinite(self.samples).all():
            raise ValueError("samples contain NaN or Inf values")
        if self.n_samples % self.sampling_rate != 0:
            warnings.warn(
                f"recording length {self.n_samples} is not a whole number of seconds "
                f"at {self.sampling_rate} Hz; the trailing partial second will be dropped "
                "on segmentation",
                stacklevel=2,
            )

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sampling_rate


@dataclass
class Segment:
    """One 1-second window of a recording; ``data`` is [fs x 14]."""

    index: int  # 1-based second position within the session
    data: np.ndarray
    label: FatigueLevel | None = None

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError(f"segment index must be >= 1, got {self.index}")
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.shape[1] != N_CHANNELS:
            raise ValueError(f"segment data must be [fs x {N_CHANNELS}], got {self.data.shape}")


@dataclass
class SynthConfig:
    """Knobs for the synthetic session generator.

    ``class_effect`` scales how strongly alpha-band amplitude grows with
    the fatigue class index; 0 makes the three classes statistically
    indistinguishable.
    """

    n_segments: int = 2400
    seed: int = 0
    class_effect: float = 1.0
    noise_std: float = 1.0
    subject_id: str = "synth"

    def __post_init__(self) -> None:
        if self.n_segments <= 0:
            raise ValueError(f"n_segments must be positive, got {self.n_segments}")
        if self.class_effect < 0:
            raise ValueError(f"class_effect must be >= 0, got {self.class_effect}")
        if self.noise_std < 0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")


def load_recording(path: str | Path, sampling_rate: int = DEFAULT_FS,
                   subject_id: str | None = None) -> EegRecording:
    """Parse a recording CSV, reordering columns into canonical order.

    Raises ``EmptyFileError``, ``BadHeaderError``, ``MissingChannelError``
    or ``NonNumericSampleError`` on malformed input; each error names the
    offending column/row.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"recording file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFileError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if not header or all(h == "" for h in header):
            raise BadHeaderError(f"{path}: blank header row")
        data_cols = list(range(len(header)))
        if header and header[0].lower() == "t":
            data_cols = data_cols[1:]
        names = [header[c] for c in data_cols]
        if len(set(names)) != len(names):
            dupe = next(n for n in names if names.count(n) > 1)
            raise BadHeaderError(f"{path}: duplicate channel column {dupe!r}")
        unknown = [n for n in names if n not in CHANNELS]
        if unknown:
            raise BadHeaderError(f"{path}: unknown column {unknown[0]!r} in header")
        for ch in CHANNELS:
            if ch not in names:
                raise MissingChannelError(ch)

        rows: list[list[float]] = []
        for row_no, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(header):
                raise BadHeaderError(
                    f"{path}: row {row_no} has {len(row)} fields, expected {len(header)}"
                )
            vals = []
            for c in data_cols:
                cell = row[c].strip()
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise NonNumericSampleError(row_no, header[c], cell) from None
            rows.append(vals)

    if not rows:
        raise EmptyFileError(f"{path}: no sample rows")
    raw = np.array(rows, dtype=np.float64)
    order = [names.index(ch) for ch in CHANNELS]
    samples = raw[:, order]
    if not np.isfinite(samples).all():
        bad = np.argwhere(~np.isfinite(samples))[0]
        raise NonNumericSampleError(int(bad[0]) + 2, CHANNELS[int(bad[1])], "nan/inf")
    return EegRecording(
        subject_id=subject_id if subject_id is not None else path.stem,
        sampling_rate=sampling_rate,
        samples=samples,
    )


def save_recording(path: str | Path, rec: EegRecording) -> None:
    """Write a recording CSV in canonical column order.

    Values are formatted with 17 significant digits so that a
    load/save/load round trip reproduces every float64 exactly.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(rec.channels) + "\n")
        for row in rec.samples:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def segment_recording(rec: EegRecording) -> list[Segment]:
    """Split into non-overlapping 1-second windows in temporal order.

    Segment i covers samples [(i-1)*fs, i*fs); a trailing partial second
    is discarded with a warning.
    """
    fs = rec.sampling_rate
    n_full = rec.n_samples // fs
    dropped = rec.n_samples - n_full * fs
    if dropped:
        warnings.warn(
            f"dropping {dropped} trailing samples (partial second) from "
            f"recording {rec.subject_id!r}",
            stacklevel=2,
        )
    return [
        Segment(index=i + 1, data=rec.samples[i * fs:(i + 1) * fs])
        for i in range(n_full)
    ]


def load_labels(path: str | Path) -> dict[int, FatigueLevel]:
    """Read a ``second,label`` CSV into a {second: level} map."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"label file not found: {path}")
    out: dict[int, FatigueLevel] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFileError(f"{path}: file is empty")
        if [h.strip().lower() for h in header] != ["second", "label"]:
            raise BadHeaderError(f"{path}: expected header 'second,label', got {header}")
        for row_no, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            try:
                second = int(row[0])
            except ValueError:
                raise NonNumericSampleError(row_no, "second", row[0]) from None
            if second < 1:
                raise BadLabelRow(path, row_no, f"second must be >= 1, got {second}")
            try:
                out[second] = FatigueLevel.from_name(row[1])
            except ValueError as exc:
                raise BadLabelRow(path, row_no, str(exc)) from None
    return out


class BadLabelRow(BadHeaderError):
    def __init__(self, path, row_no, msg):
        super().__init__(f"{path}: row {row_no}: {msg}")


def save_labels(path: str | Path, labels: list[FatigueLevel]) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("second,label\n")
        for second, lev in enumerate(labels, start=1):
            fh.write(f"{second},{lev.csv_name}\n")


def thirds_labels(n_segments: int) -> list[FatigueLevel]:
    """Temporal-thirds labelling: first third low, middle medium, last high.

    Third sizes differ by at most one when n is not divisible by 3
    (earlier thirds take the extra seconds).
    """
    bounds = np.cumsum([len(part) for part in np.array_split(np.arange(n_segments), 3)])
    labels = []
    for i in range(n_segments):
        if i < bounds[0]:
            labels.append(FatigueLevel.LOW)
        elif i < bounds[1]:
            labels.append(FatigueLevel.MEDIUM)
        else:
            labels.append(FatigueLevel.HIGH)
    return labels


# Per-band base amplitudes (microvolts) for the synthetic generator. Alpha
# additionally carries the class effect and a fixed posterior-dominant
# spatial profile so topographic maps are not flat.
_SYNTH_BANDS = (
    ("theta", 4.0, 8.0, 3.0),
    ("alpha", 8.0, 13.0, 4.0),
    ("beta", 14.0, 30.0, 2.0),
    ("gamma", 31.0, 40.0, 1.0),
)

_ALPHA_CHANNEL_GAIN = {
    "AF3": 0.85, "AF4": 0.85, "F3": 0.90, "F4": 0.90, "F7": 0.90, "F8": 0.90,
    "FC5": 0.95, "FC6": 0.95, "T7": 1.00, "T8": 1.00,
    "P7": 1.10, "P8": 1.10, "O1": 1.20, "O2": 1.20,
}


def synth_session(cfg: SynthConfig, sampling_rate: int = DEFAULT_FS,
                  ) -> tuple[EegRecording, list[FatigueLevel]]:
    """Generate a deterministic synthetic session with temporal-thirds labels.

    Each second is a sum of one band-limited sinusoid per band (random
    in-band frequency shared across channels, random phase per channel)
    plus white Gaussian noise. The alpha amplitude is scaled by
    ``1 + 0.5 * class_effect * level`` so band power grows monotonically
    with the class index when class_effect > 0.
    """
    rng = np.random.default_rng(cfg.seed)
    labels = thirds_labels(cfg.n_segments)
    fs = sampling_rate
    t = np.arange(fs) / fs
    gains = np.array([_ALPHA_CHANNEL_GAIN[ch] for ch in CHANNELS])

    samples = np.empty((cfg.n_segments * fs, N_CHANNELS))
    for seg in range(cfg.n_segments):
        level = int(labels[seg])
        block = np.zeros((fs, N_CHANNELS))
        for name, lo, hi, base_amp in _SYNTH_BANDS:
            freq = rng.uniform(lo, hi)
            phases = rng.uniform(0.0, 2.0 * np.pi, size=N_CHANNELS)
            wave = np.sin(2.0 * np.pi * freq * t[:, None] + phases[None, :])
            if name == "alpha":
                amp = base_amp * (1.0 + 0.5 * cfg.class_effect * level) * gains
            else:
                amp = np.full(N_CHANNELS, base_amp)
            block += amp[None, :] * wave
        if cfg.noise_std > 0:
            block += rng.normal(0.0, cfg.noise_std, size=block.shape)
        samples[seg * fs:(seg + 1) * fs] = block

    rec = EegRecording(subject_id=cfg.subject_id, sampling_rate=fs, samples=samples)
    return rec, labels

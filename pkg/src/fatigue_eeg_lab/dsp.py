"""FIR preprocessing, spectral estimation, and per-channel features.

Thirteen features per channel: four band powers (theta/alpha/beta/gamma),
five time-domain statistics (mean, variance, zero-crossing rate, kurtosis,
skewness), and two entropies (Shannon amplitude entropy, normalized
spectral entropy). Over the 14-channel montage that is 56 frequency, 70
time and 28 entropy values per 1-second segment.

Conventions pinned here (and exercised by the tests):

* variance and higher moments are population moments (divide by N);
  kurtosis is non-excess (Gaussian -> 3); a constant signal returns
  skewness = kurtosis = 0.
* the zero-crossing rate counts sign changes of the mean-removed signal
  with zeros treated as positive, divided by N - 1.
* the periodogram is a single Hamming-windowed block, one-sided, scaled
  so the power bins sum to the windowed mean-square value (window power
  compensated).
* band powers average the PSD bins in [lo, hi); spectral entropy uses
  the 4-45 Hz passband inclusive and is normalized to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import CHANNELS, N_CHANNELS
from .errors import (
    EmptyBandError,
    InvalidBandEdgesError,
    SignalTooShortError,
    TooShortError,
)
from .signal_io import Segment

# Canonical per-channel feature order; also the CSV column naming.
FREQUENCY_KINDS = ("theta", "alpha", "beta", "gamma")
TIME_KINDS = ("mean", "var", "zcr", "kurt", "skew")
ENTROPY_KINDS = ("se", "specen")
FEATURE_KINDS = FREQUENCY_KINDS + TIME_KINDS + ENTROPY_KINDS
_KIND_INDEX = {k: i for i, k in enumerate(FEATURE_KINDS)}


@dataclass(frozen=True)
class Band:
    name: str
    lo_hz: float
    hi_hz: float

    def __post_init__(self) -> None:
        if not self.lo_hz < self.hi_hz:
            raise InvalidBandEdgesError(f"band {self.name}: need lo < hi, got {self.lo_hz}, {self.hi_hz}")


THETA = Band("theta", 4.0, 8.0)
ALPHA = Band("alpha", 8.0, 13.0)
BETA = Band("beta", 14.0, 30.0)
GAMMA = Band("gamma", 31.0, 40.0)
BANDS = (THETA, ALPHA, BETA, GAMMA)

# Spectral entropy is restricted to the filtered passband.
SPECEN_LO_HZ = 4.0
SPECEN_HI_HZ = 45.0


@dataclass(frozen=True)
class FirFilter:
    """Linear-phase FIR bandpass: odd tap count, symmetric coefficients."""

    taps: np.ndarray
    low_hz: float
    high_hz: float
    fs: float

    def __post_init__(self) -> None:
        taps = np.asarray(self.taps, dtype=np.float64)
        object.__setattr__(self, "taps", taps)
        if taps.ndim != 1 or len(taps) % 2 == 0:
            raise InvalidBandEdgesError(f"taps must be a 1-D odd-length array, got {taps.shape}")
        if np.max(np.abs(taps - taps[::-1])) > 1e-12:
            raise InvalidBandEdgesError("taps are not symmetric (nonlinear phase)")
        if not (0.0 < self.low_hz < self.high_hz < self.fs / 2.0):
            raise InvalidBandEdgesError(
                f"need 0 < low < high < fs/2, got low={self.low_hz}, high={self.high_hz}, fs={self.fs}"
            )

    @property
    def n_taps(self) -> int:
        return len(self.taps)

    def frequency_response(self, freqs_hz: np.ndarray) -> np.ndarray:
        """Complex response evaluated by direct DFT of the taps."""
        freqs_hz = np.atleast_1d(np.asarray(freqs_hz, dtype=np.float64))
        n = np.arange(self.n_taps)
        return np.exp(-2j * np.pi * np.outer(freqs_hz / self.fs, n)) @ self.taps


def design_bandpass(low_hz: float, high_hz: float, fs: float, n_taps: int) -> FirFilter:
    """Windowed-sinc (Hamming) bandpass, unit gain at the band center."""
    if not (0.0 < low_hz < high_hz < fs / 2.0):
        raise InvalidBandEdgesError(
            f"need 0 < low < high < fs/2, got low={low_hz}, high={high_hz}, fs={fs}"
        )
    if n_taps < 3 or n_taps % 2 == 0:
        raise InvalidBandEdgesError(f"n_taps must be odd and >= 3, got {n_taps}")
    m = np.arange(n_taps) - (n_taps - 1) / 2.0
    f1, f2 = low_hz / fs, high_hz / fs
    ideal = 2.0 * f2 * np.sinc(2.0 * f2 * m) - 2.0 * f1 * np.sinc(2.0 * f1 * m)
    taps = ideal * np.hamming(n_taps)
    center = (low_hz + high_hz) / 2.0
    gain = np.abs(np.sum(taps * np.exp(-2j * np.pi * center / fs * np.arange(n_taps))))
    taps = taps / gain
    return FirFilter(taps=taps, low_hz=low_hz, high_hz=high_hz, fs=fs)


def apply_zero_phase(fir: FirFilter, signal: np.ndarray) -> np.ndarray:
    """Forward-backward FIR filtering with reflection-padded edges.

    Pads ``n_taps - 1`` samples of reflected signal on each side, filters
    causally, reverses, filters again, reverses, and crops, so the output
    has the input's length and zero net phase shift.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D signal, got shape {x.shape}")
    if len(x) <= fir.n_taps:
        raise SignalTooShortError(
            f"signal length {len(x)} must exceed filter length {fir.n_taps}"
        )
    pad = fir.n_taps - 1
    xp = np.pad(x, pad, mode="reflect")
    y = np.convolve(xp, fir.taps)[: len(xp)]
    y = np.convolve(y[::-1], fir.taps)[: len(xp)][::-1]
    return y[pad:pad + len(x)]


@dataclass(frozen=True)
class Psd:
    """One-sided power spectrum: ``power[i]`` at ``freqs[i]`` Hz."""

    freqs: np.ndarray
    power: np.ndarray

    def __post_init__(self) -> None:
        if len(self.freqs) != len(self.power):
            raise ValueError("freqs and power must have equal length")
        if np.any(np.diff(self.freqs) <= 0):
            raise ValueError("freqs must be strictly increasing")
        if np.any(self.power < 0):
            raise ValueError("power bins must be non-negative")

    @property
    def total_power(self) -> float:
        return float(np.sum(self.power))


def periodogram(signal: np.ndarray, fs: float) -> Psd:
    """Single-block Hamming-windowed periodogram, folded to one side.

    Normalized so that sum(power) equals mean((x * w)**2) / mean(w**2),
    i.e. discrete Parseval with the window's power compensated. A unit
    sinusoid therefore carries total power 0.5.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D signal, got shape {x.shape}")
    n = len(x)
    if n < 8:
        raise TooShortError(f"periodogram needs >= 8 samples, got {n}")
    w = np.hamming(n)
    spec = np.fft.rfft(x * w)
    p = (spec.real**2 + spec.imag**2) / (n * n * np.mean(w * w))
    p[1:] *= 2.0
    if n % 2 == 0:
        p[-1] /= 2.0  # Nyquist bin is not mirrored
    freqs = np.arange(len(p)) * (fs / n)
    return Psd(freqs=freqs, power=p)


def band_power(psd: Psd, band: Band) -> float:
    """Mean PSD over the half-open bin range [lo, hi)."""
    mask = (psd.freqs >= band.lo_hz) & (psd.freqs < band.hi_hz)
    if not mask.any():
        raise EmptyBandError(f"no PSD bins fall in band {band.name} [{band.lo_hz}, {band.hi_hz})")
    return float(np.mean(psd.power[mask]))


def time_stats(signal: np.ndarray) -> tuple[float, float, float, float, float]:
    """(mean, variance, zcr, kurtosis, skewness) of one segment channel."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise TooShortError(f"time_stats needs >= 2 samples, got shape {x.shape}")
    mean = float(np.mean(x))
    centered = x - mean
    m2 = float(np.mean(centered**2))
    signs = np.where(centered >= 0.0, 1, -1)
    zcr = float(np.count_nonzero(signs[1:] != signs[:-1])) / (len(x) - 1)
    if m2 == 0.0:
        return mean, 0.0, zcr, 0.0, 0.0
    m3 = float(np.mean(centered**3))
    m4 = float(np.mean(centered**4))
    skew = m3 / m2**1.5
    kurt = m4 / m2**2
    return mean, m2, zcr, kurt, skew


def shannon_entropy(signal: np.ndarray, n_bins: int = 16) -> float:
    """Amplitude-histogram entropy in nats over equal-width bins."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise TooShortError(f"shannon_entropy needs >= 2 samples, got shape {x.shape}")
    lo, hi = float(np.min(x)), float(np.max(x))
    if lo == hi:
        return 0.0
    counts, _ = np.histogram(x, bins=n_bins, range=(lo, hi))
    p = counts[counts > 0] / len(x)
    return float(-np.sum(p * np.log(p)))


def spectral_entropy(psd: Psd, lo_hz: float = SPECEN_LO_HZ, hi_hz: float = SPECEN_HI_HZ) -> float:
    """Entropy of the in-band power distribution, normalized to [0, 1]."""
    mask = (psd.freqs >= lo_hz) & (psd.freqs <= hi_hz)
    k = int(mask.sum())
    if k < 2:
        raise EmptyBandError(f"need >= 2 PSD bins in [{lo_hz}, {hi_hz}] Hz, got {k}")
    inband = psd.power[mask]
    total = float(inband.sum())
    if total == 0.0:
        return 0.0
    q = inband[inband > 0] / total
    return float(-np.sum(q * np.log(q)) / np.log(k))


@dataclass
class FeatureSet:
    """All 13 features of one segment: ``values`` is [14 channels x 11 kinds].

    Kind order follows FEATURE_KINDS; channel order is canonical.
    """

    values: np.ndarray
    segment_index: int = 0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (N_CHANNELS, len(FEATURE_KINDS)):
            raise ValueError(
                f"values must be [{N_CHANNELS} x {len(FEATURE_KINDS)}], got {self.values.shape}"
            )

    def kind(self, name: str) -> np.ndarray:
        """The 14 per-channel values of one feature kind."""
        return self.values[:, _KIND_INDEX[name]]

    def flat(self, kinds: tuple[str, ...] = FEATURE_KINDS) -> np.ndarray:
        """Channel-major flat vector over the requested kinds."""
        cols = [_KIND_INDEX[k] for k in kinds]
        return self.values[:, cols].reshape(-1)

    @property
    def n_frequency(self) -> int:
        return N_CHANNELS * len(FREQUENCY_KINDS)

    @property
    def n_time(self) -> int:
        return N_CHANNELS * len(TIME_KINDS)

    @property
    def n_entropy(self) -> int:
        return N_CHANNELS * len(ENTROPY_KINDS)


def _feature_matrix(data: np.ndarray, fs: float, n_bins: int) -> np.ndarray:
    """Vectorized 13-feature computation for one [fs x 14] block."""
    n = data.shape[0]
    out = np.empty((N_CHANNELS, len(FEATURE_KINDS)))

    # Spectral block: batched periodogram across channels.
    w = np.hamming(n)
    spec = np.fft.rfft(data * w[:, None], axis=0)
    p = (spec.real**2 + spec.imag**2) / (n * n * np.mean(w * w))
    p[1:] *= 2.0
    if n % 2 == 0:
        p[-1] /= 2.0
    freqs = np.arange(p.shape[0]) * (fs / n)
    for j, band in enumerate(BANDS):
        mask = (freqs >= band.lo_hz) & (freqs < band.hi_hz)
        if not mask.any():
            raise EmptyBandError(f"no PSD bins in band {band.name} at fs={fs}, n={n}")
        out[:, j] = np.mean(p[mask], axis=0)

    # Time block.
    mean = np.mean(data, axis=0)
    centered = data - mean
    m2 = np.mean(centered**2, axis=0)
    signs = np.where(centered >= 0.0, 1, -1)
    out[:, 4] = mean
    out[:, 5] = m2
    out[:, 6] = np.count_nonzero(signs[1:] != signs[:-1], axis=0) / (n - 1)
    safe_m2 = np.where(m2 > 0.0, m2, 1.0)
    out[:, 7] = np.where(m2 > 0.0, np.mean(centered**4, axis=0) / safe_m2**2, 0.0)
    out[:, 8] = np.where(m2 > 0.0, np.mean(centered**3, axis=0) / safe_m2**1.5, 0.0)

    # Entropy block.
    for c in range(N_CHANNELS):
        out[c, 9] = shannon_entropy(data[:, c], n_bins=n_bins)
    band_mask = (freqs >= SPECEN_LO_HZ) & (freqs <= SPECEN_HI_HZ)
    k = int(band_mask.sum())
    inband = p[band_mask]
    totals = inband.sum(axis=0)
    for c in range(N_CHANNELS):
        if totals[c] == 0.0:
            out[c, 10] = 0.0
        else:
            q = inband[inband[:, c] > 0, c] / totals[c]
            out[c, 10] = -np.sum(q * np.log(q)) / np.log(k)
    return out


def extract_features(segment: Segment, fir: FirFilter | None = None,
                     fs: float | None = None, n_bins: int = 16) -> FeatureSet:
    """Compute the full 56 + 70 + 28 feature set of one segment.

    When ``fir`` is given, each channel is zero-phase filtered first; the
    segment must then be longer than the filter. Session-level pipelines
    normally filter the whole recording once (see
    ``extract_session_features``) and pass ``fir=None`` here.
    """
    data = segment.data
    if fs is None:
        fs = float(data.shape[0])  # segments are 1-second windows
    if fir is not None:
        data = np.column_stack([apply_zero_phase(fir, data[:, c]) for c in range(N_CHANNELS)])
    return FeatureSet(values=_feature_matrix(data, fs, n_bins), segment_index=segment.index)


def filter_recording(rec, fir: FirFilter):
    """Zero-phase filter every channel of a recording; returns a copy."""
    from .signal_io import EegRecording

    filtered = np.column_stack(
        [apply_zero_phase(fir, rec.samples[:, c]) for c in range(N_CHANNELS)]
    )
    return EegRecording(subject_id=rec.subject_id, sampling_rate=rec.sampling_rate,
                        samples=filtered)


def extract_session_features(rec, fir: FirFilter | None = None,
                             n_bins: int = 16) -> list[FeatureSet]:
    """Filter the whole recording, segment it, and extract per-segment features.

    Filtering precedes segmentation so 1-second windows never have to be
    shorter than the filter; this mirrors the acquisition-side order of
    operations (bandpass first, then division into fragments).
    """
    from .signal_io import segment_recording

    work = filter_recording(rec, fir) if fir is not None else rec
    return [extract_features(seg, fir=None, fs=rec.sampling_rate, n_bins=n_bins)
            for seg in segment_recording(work)]


def write_feature_csv(path, feature_sets: list[FeatureSet],
                      labels: list[int | None] | None = None) -> None:
    """One row per segment: ``segment_index,label,<channel>_<kind>...``."""
    header = ["segment_index", "label"]
    for ch in CHANNELS:
        for kind in FEATURE_KINDS:
            header.append(f"{ch}_{kind}")
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i, fset in enumerate(feature_sets):
            label = "" if labels is None or labels[i] is None else str(int(labels[i]))
            row = [str(fset.segment_index), label]
            row.extend(f"{v:.17g}" for v in fset.flat())
            fh.write(",".join(row) + "\n")


def read_feature_csv(path) -> tuple[list[FeatureSet], list[int | None]]:
    """Inverse of ``write_feature_csv``."""
    import csv as _csv

    feature_sets: list[FeatureSet] = []
    labels: list[int | None] = []
    with open(path, newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader)
        expected = 2 + N_CHANNELS * len(FEATURE_KINDS)
        if len(header) != expected:
            raise ValueError(f"feature CSV has {len(header)} columns, expected {expected}")
        for row in reader:
            idx = int(row[0])
            labels.append(int(row[1]) if row[1] != "" else None)
            vals = np.array([float(v) for v in row[2:]], dtype=np.float64)
            feature_sets.append(
                FeatureSet(values=vals.reshape(N_CHANNELS, len(FEATURE_KINDS)),
                           segment_index=idx)
            )
    return feature_sets, labels

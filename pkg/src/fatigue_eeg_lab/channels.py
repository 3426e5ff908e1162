"""Canonical channel montage and fatigue class labels."""

from __future__ import annotations

import enum

# The 14-channel wireless montage, in canonical order. Every container in
# this package (recordings, feature sets, cube builders) follows this order.
CHANNELS: tuple[str, ...] = (
    "AF3", "AF4", "F3", "F4", "P7", "P8", "O1", "O2",
    "F7", "F8", "FC5", "FC6", "T7", "T8",
)

N_CHANNELS = len(CHANNELS)

CHANNEL_INDEX: dict[str, int] = {name: i for i, name in enumerate(CHANNELS)}

# Left/right homologous pairs; used for layout symmetry checks.
MIRROR_PAIRS: tuple[tuple[str, str], ...] = (
    ("AF3", "AF4"), ("F3", "F4"), ("F7", "F8"),
    ("FC5", "FC6"), ("T7", "T8"), ("P7", "P8"), ("O1", "O2"),
)


class FatigueLevel(enum.IntEnum):
    """Three-level fatigue label with fixed integer codes."""

    LOW = 0
    MEDIUM = 1
    HIGH = 2

    @classmethod
    def from_name(cls, name: str) -> "FatigueLevel":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown fatigue label: {name!r}") from None

    @property
    def csv_name(self) -> str:
        return self.name.lower()

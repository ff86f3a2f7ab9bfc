"""Per-window feature extraction and 0..1 normalization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import WindowTooSmall
from .trace import Window

FEATURE_NAMES = ("mean_speed", "std_speed", "mean_accel", "std_accel",
                 "mean_rpm", "std_rpm")

# Alternative reading with a single spread term (speed only).
FEATURE_SETS = {
    "full": FEATURE_NAMES,
    "speed_std_only": ("mean_speed", "std_speed", "mean_accel", "mean_rpm"),
}
DEFAULT_FEATURE_SET = "full"


@dataclass(frozen=True)
class NormalizationRanges:
    """(min, max) per raw feature, in the raw feature's unit."""
    mean_speed: tuple[float, float] = (0.0, 180.0)
    std_speed: tuple[float, float] = (0.0, 40.0)
    mean_accel: tuple[float, float] = (-6.0, 6.0)
    std_accel: tuple[float, float] = (0.0, 4.0)
    mean_rpm: tuple[float, float] = (0.0, 6000.0)
    std_rpm: tuple[float, float] = (0.0, 2000.0)

    def __post_init__(self):
        for name in FEATURE_NAMES:
            lo, hi = getattr(self, name)
            if not hi > lo:
                raise ValueError(f"range for {name} needs max > min, got ({lo}, {hi})")

    def bounds(self, names=FEATURE_NAMES) -> tuple[np.ndarray, np.ndarray]:
        pairs = np.array([getattr(self, n) for n in names], dtype=float)
        return pairs[:, 0], pairs[:, 1]


def extract(window: Window, feature_set: str = DEFAULT_FEATURE_SET) -> np.ndarray:
    """Raw (unnormalized) features: mean and population std of speed (km/h),
    acceleration (m/s^2) and rpm over the window."""
    if len(window) < 2:
        raise WindowTooSmall(f"window has {len(window)} sample(s), need 2")
    speed, accel, rpm = window.speed, np.asarray(window.accel, float), window.rpm
    raw = {
        "mean_speed": speed.mean(), "std_speed": speed.std(),
        "mean_accel": accel.mean(), "std_accel": accel.std(),
        "mean_rpm": rpm.mean(), "std_rpm": rpm.std(),
    }
    return np.array([raw[n] for n in FEATURE_SETS[feature_set]])


def normalize(raw, ranges: NormalizationRanges = NormalizationRanges(),
              feature_set: str = DEFAULT_FEATURE_SET) -> np.ndarray:
    """Min-max scale to [0, 1], clamping values outside the range.

    Works on a single vector or a 2-D array of row vectors.
    """
    lo, hi = ranges.bounds(FEATURE_SETS[feature_set])
    return np.clip((np.asarray(raw, float) - lo) / (hi - lo), 0.0, 1.0)


def feature_matrix(wins, ranges: NormalizationRanges = NormalizationRanges(),
                   feature_set: str = DEFAULT_FEATURE_SET) -> np.ndarray:
    n = len(FEATURE_SETS[feature_set])
    if not wins:
        return np.empty((0, n))
    raw = np.vstack([extract(w, feature_set) for w in wins])
    return normalize(raw, ranges, feature_set)

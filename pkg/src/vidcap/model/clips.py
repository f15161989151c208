"""Clip containers and deterministic frame sampling."""

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class VideoClip:
    """One clip, carried either as raw frames or as precomputed features.

    frames: (T, H, W, C) float array with values in [0, 1].
    features: (T, feat_dim) float array.
    Exactly one of the two is present.
    """
    clip_id: str
    frames: Optional[np.ndarray] = None
    features: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.frames is None) == (self.features is None):
            raise ValueError(f"clip {self.clip_id!r}: exactly one of "
                             "frames/features must be set")
        if self.frames is not None:
            self.frames = np.asarray(self.frames, dtype=np.float64)
            if self.frames.ndim != 4:
                raise ValueError(f"clip {self.clip_id!r}: frames must be "
                                 f"(T, H, W, C), got shape {self.frames.shape}")
        else:
            self.features = np.asarray(self.features, dtype=np.float64)
            if self.features.ndim != 2:
                raise ValueError(f"clip {self.clip_id!r}: features must be "
                                 f"(T, D), got shape {self.features.shape}")
        if len(self) < 1:
            raise ValueError(f"clip {self.clip_id!r} has no frames")

    def __len__(self) -> int:
        arr = self.frames if self.frames is not None else self.features
        return arr.shape[0]

    @property
    def has_frames(self) -> bool:
        return self.frames is not None


def sample_indices(t: int, k: int) -> np.ndarray:
    """k indices uniformly spaced over [0, t-1], half-up rounded.

    Short clips repeat frames (indices clamp/dedupe naturally); t=1 yields
    the single frame k times, k=1 takes the first frame.
    """
    if t < 1 or k < 1:
        raise ValueError(f"need t >= 1 and k >= 1, got t={t}, k={k}")
    if k == 1:
        return np.zeros(1, dtype=np.int64)
    pos = np.arange(k, dtype=np.float64) * (t - 1) / (k - 1)
    return np.floor(pos + 0.5).astype(np.int64)


def sample_frames(clip: VideoClip, k: int) -> np.ndarray:
    """The k temporally sampled frames (or feature rows) of a clip."""
    arr = clip.frames if clip.frames is not None else clip.features
    return arr[sample_indices(len(clip), k)]

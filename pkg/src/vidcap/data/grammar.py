"""Closed scene grammar for the synthetic corpus.

A scene is a colored shape moving along one of a few fixed motion patterns
inside a 32x32 raster.  Rendering is a pure function of the SceneSpec (all
nuisance variation flows through the spec's seed), and every caption template
names the scene's color, subject, and action, so references always describe
the pixels.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

SHAPES: Tuple[str, ...] = ("square", "circle", "triangle", "diamond", "cross")

COLORS: Dict[str, Tuple[float, float, float]] = {
    "red": (0.90, 0.10, 0.10),
    "blue": (0.10, 0.20, 0.90),
    "green": (0.10, 0.80, 0.20),
    "yellow": (0.95, 0.90, 0.10),
    "purple": (0.60, 0.15, 0.80),
    "orange": (0.95, 0.55, 0.10),
}

# action -> (3rd person verb, -ing form, caption tail)
ACTIONS: Dict[str, Tuple[str, str, str]] = {
    "slide": ("slides", "sliding", "to the right"),
    "drift": ("drifts", "drifting", "to the left"),
    "rise": ("rises", "rising", "toward the top"),
    "fall": ("falls", "falling", "toward the bottom"),
    "bounce": ("bounces", "bouncing", "up and down"),
    "grow": ("grows", "growing", "larger and larger"),
}

GRAMMAR_VERSION = "1"

FRAME_SIZE = 32
_BASE_RADIUS = 6


@dataclass(frozen=True)
class SceneSpec:
    subject: str
    color: str
    action: str
    speed: int  # 1 slow, 2 fast
    seed: int

    def __post_init__(self):
        if self.subject not in SHAPES:
            raise ValueError(f"unknown subject {self.subject!r}")
        if self.color not in COLORS:
            raise ValueError(f"unknown color {self.color!r}")
        if self.action not in ACTIONS:
            raise ValueError(f"unknown action {self.action!r}")
        if self.speed not in (1, 2):
            raise ValueError(f"speed must be 1 or 2, got {self.speed}")


def _shape_mask(shape: str, cx: float, cy: float, r: float, size: int) -> np.ndarray:
    ys, xs = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    dx = xs - cx
    dy = ys - cy
    if shape == "square":
        return (np.abs(dx) <= r) & (np.abs(dy) <= r)
    if shape == "circle":
        return dx * dx + dy * dy <= r * r
    if shape == "triangle":
        return (np.abs(dy) <= r) & (np.abs(dx) <= (dy + r) / 2.0)
    if shape == "diamond":
        return np.abs(dx) + np.abs(dy) <= r
    if shape == "cross":
        bar = r / 3.0
        return ((np.abs(dx) <= bar) & (np.abs(dy) <= r)) | \
               ((np.abs(dy) <= bar) & (np.abs(dx) <= r))
    raise ValueError(f"unknown shape {shape!r}")


def render_clip(spec: SceneSpec, frames: int = 8, size: int = FRAME_SIZE) -> np.ndarray:
    """Render (frames, size, size, 3) float array with values in [0, 1]."""
    if frames < 1:
        raise ValueError("clip needs at least one frame")
    rng = np.random.default_rng(spec.seed)
    bg = 0.06 + 0.06 * rng.random()
    jx = int(rng.integers(-2, 3))
    jy = int(rng.integers(-2, 3))
    amp = 0.6 if spec.speed == 1 else 1.0

    lo, hi = 7.0, float(size - 8)  # travel endpoints that keep the shape inside
    mid = (size - 1) / 2.0
    color = np.array(COLORS[spec.color])
    clip = np.full((frames, size, size, 3), bg)
    for t in range(frames):
        tau = t / (frames - 1) if frames > 1 else 0.0
        r = float(_BASE_RADIUS)
        cx, cy = mid + jx, mid + jy
        if spec.action == "slide":
            cx = lo + tau * amp * (hi - lo) + jx
            cy = mid + jy
        elif spec.action == "drift":
            cx = hi - tau * amp * (hi - lo) + jx
            cy = mid + jy
        elif spec.action == "rise":
            cy = hi - tau * amp * (hi - lo) + jy
            cx = mid + jx
        elif spec.action == "fall":
            cy = lo + tau * amp * (hi - lo) + jy
            cx = mid + jx
        elif spec.action == "bounce":
            cy = hi - amp * (hi - lo) * abs(math.sin(2.0 * math.pi * tau)) + jy
            cx = mid + jx
        elif spec.action == "grow":
            r = 3.0 + tau * amp * 5.0
        cx = float(np.clip(cx, r + 1, size - r - 2))
        cy = float(np.clip(cy, r + 1, size - r - 2))
        mask = _shape_mask(spec.subject, cx, cy, r, size)
        clip[t][mask] = color
    return clip


def caption_templates() -> List[str]:
    """Paraphrase templates; fields: color, subject, verb, ing, tail."""
    return [
        "a {color} {subject} is {ing} {tail}",
        "the {color} {subject} {verb} {tail}",
        "there is a {color} {subject} {ing} {tail}",
        "the {subject} is {color} and it is {ing}",
    ]


def scene_captions(spec: SceneSpec) -> List[str]:
    verb, ing, tail = ACTIONS[spec.action]
    fields = dict(color=spec.color, subject=spec.subject,
                  verb=verb, ing=ing, tail=tail)
    return [t.format(**fields) for t in caption_templates()]

"""Deterministic synthetic corpus generation.

The corpus is a pure function of (GenConfig, seed): scenes are drawn from the
closed grammar with a master generator, each clip gets its own render seed,
and frames plus a JSON-lines manifest are written under the output directory.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from vidcap.data.grammar import (ACTIONS, COLORS, GRAMMAR_VERSION, SHAPES,
                                 FRAME_SIZE, SceneSpec, render_clip, scene_captions)
from vidcap.data.io import write_frames


@dataclass
class GenConfig:
    train_clips: int = 200
    val_clips: int = 30
    test_clips: int = 60
    frames_per_clip: int = 8
    frame_size: int = FRAME_SIZE
    seed: int = 0
    grammar_size: Optional[int] = None  # cap on shapes/colors/actions used


@dataclass
class ClipRecord:
    clip_id: str
    split: str
    frames_path: str
    captions: List[str]
    scene: Dict


@dataclass
class DatasetManifest:
    records: List[ClipRecord]
    grammar_version: str
    seed: int
    frames_per_clip: int
    frame_size: int
    root: Optional[Path] = None

    def split(self, name: str) -> List[ClipRecord]:
        return [r for r in self.records if r.split == name]

    def frames_file(self, record: ClipRecord) -> Path:
        if self.root is None:
            return Path(record.frames_path)
        return self.root / record.frames_path


def _grammar_slices(cfg: GenConfig):
    shapes = list(SHAPES)
    colors = list(COLORS)
    actions = list(ACTIONS)
    if cfg.grammar_size is not None:
        if cfg.grammar_size < 1:
            raise ValueError("grammar_size must be >= 1")
        shapes = shapes[:cfg.grammar_size]
        colors = colors[:cfg.grammar_size]
        actions = actions[:cfg.grammar_size]
    return shapes, colors, actions


def generate_corpus(cfg: GenConfig, out_dir) -> DatasetManifest:
    if min(cfg.train_clips, cfg.val_clips, cfg.test_clips) < 1:
        raise ValueError("every split needs at least one clip")
    if cfg.frames_per_clip < 1:
        raise ValueError("frames_per_clip must be >= 1")
    shapes, colors, actions = _grammar_slices(cfg)

    out_dir = Path(out_dir)
    frames_dir = out_dir / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(cfg.seed)
    records: List[ClipRecord] = []
    for split, count in (("train", cfg.train_clips), ("val", cfg.val_clips),
                         ("test", cfg.test_clips)):
        for i in range(count):
            spec = SceneSpec(
                subject=shapes[int(rng.integers(len(shapes)))],
                color=colors[int(rng.integers(len(colors)))],
                action=actions[int(rng.integers(len(actions)))],
                speed=int(rng.integers(1, 3)),
                seed=int(rng.integers(2 ** 31)),
            )
            clip_id = f"{split}_{i:04d}"
            rel = f"frames/{clip_id}.bin"
            clip = render_clip(spec, cfg.frames_per_clip, cfg.frame_size)
            write_frames(out_dir / rel, clip)
            records.append(ClipRecord(
                clip_id=clip_id, split=split, frames_path=rel,
                captions=scene_captions(spec),
                scene=dict(subject=spec.subject, color=spec.color,
                           action=spec.action, speed=spec.speed, seed=spec.seed),
            ))

    manifest = DatasetManifest(records=records, grammar_version=GRAMMAR_VERSION,
                               seed=cfg.seed, frames_per_clip=cfg.frames_per_clip,
                               frame_size=cfg.frame_size, root=out_dir)
    with open(out_dir / "manifest.jsonl", "w", encoding="utf-8") as f:
        header = dict(grammar_version=GRAMMAR_VERSION, seed=cfg.seed,
                      frames_per_clip=cfg.frames_per_clip,
                      frame_size=cfg.frame_size)
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for r in records:
            f.write(json.dumps(dict(id=r.clip_id, split=r.split, frames=r.frames_path,
                                    captions=r.captions, scene=r.scene),
                               sort_keys=True) + "\n")
    return manifest

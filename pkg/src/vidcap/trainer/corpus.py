"""Load a generated corpus into the in-memory form the trainer consumes.

Everything derived from text (vocabulary, idf table, attribute lexicon and
labels) is computed from the train split only; val/test captions are kept as
raw token lists for scoring.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from ..attributes import AttributeLexicon, label_clip, mine_attributes
from ..data.generate import DatasetManifest
from ..data.io import load_manifest, read_frames
from ..data.textproc import Vocabulary, build_vocabulary, tokenize
from ..metrics.ngrams import IdfTable, build_idf
from ..model import CaptionerConfig, VideoClip, desk_config

SPLITS = ("train", "val", "test")


@dataclass
class CorpusData:
    manifest: DatasetManifest
    clips: Dict[str, VideoClip]
    vocab: Vocabulary
    refs: Dict[str, List[List[str]]]
    encoded: Dict[str, List[List[int]]]
    idf: IdfTable
    lexicon: AttributeLexicon
    labels: Dict[str, np.ndarray]

    def split_ids(self, split: str) -> List[str]:
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}; expected one of {SPLITS}")
        return [r.clip_id for r in self.manifest.split(split)]

    def split_clips(self, split: str) -> List[VideoClip]:
        return [self.clips[cid] for cid in self.split_ids(split)]

    def refs_for(self, clip_ids) -> List[List[List[str]]]:
        return [self.refs[cid] for cid in clip_ids]


def load_corpus(manifest, attr_count: int = 50,
                root: Optional[Path] = None) -> CorpusData:
    """Build the trainer view of a corpus from a manifest path or object."""
    if not isinstance(manifest, DatasetManifest):
        manifest = load_manifest(manifest)
    if root is not None:
        manifest.root = Path(root)

    clips: Dict[str, VideoClip] = {}
    refs: Dict[str, List[List[str]]] = {}
    for rec in manifest.records:
        frames = read_frames(manifest.frames_file(rec))
        clips[rec.clip_id] = VideoClip(rec.clip_id, frames=frames)
        refs[rec.clip_id] = [tokenize(c) for c in rec.captions]

    train = manifest.split("train")
    if not train:
        raise ValueError("manifest has no train split")
    train_captions = [c for rec in train for c in rec.captions]
    vocab = build_vocabulary(train_captions)
    idf = build_idf([refs[rec.clip_id] for rec in train])
    lexicon = mine_attributes(train_captions, n=attr_count)

    encoded = {cid: [vocab.encode(toks) for toks in ref_set]
               for cid, ref_set in refs.items()}
    labels = {rec.clip_id: label_clip(rec.captions, lexicon)
              for rec in manifest.records}
    return CorpusData(manifest=manifest, clips=clips, vocab=vocab, refs=refs,
                      encoded=encoded, idf=idf, lexicon=lexicon, labels=labels)


def desk_model_config(data: CorpusData, **overrides) -> CaptionerConfig:
    """Desk-size captioner matched to a loaded corpus.  The short decoder cap
    suits the synthetic captions (6-8 tokens) and bounds early rollouts."""
    kw = dict(decoder_steps=16)
    kw.update(overrides)
    return desk_config(vocab_size=len(data.vocab),
                       attr_count=len(data.lexicon), **kw)

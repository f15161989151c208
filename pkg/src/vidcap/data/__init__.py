"""Synthetic video-caption corpus: grammar, rendering, text processing, file formats."""

from vidcap.data.grammar import (ACTIONS, COLORS, SHAPES, SceneSpec, caption_templates,
                                 render_clip, scene_captions)
from vidcap.data.generate import ClipRecord, DatasetManifest, GenConfig, generate_corpus
from vidcap.data.io import (load_features, load_manifest, read_frames, read_features,
                            write_frames, write_features)
from vidcap.data.textproc import (BOS, EOS, PAD, SPECIALS, UNK, Vocabulary,
                                  build_vocabulary, tokenize)

__all__ = [
    "ACTIONS", "BOS", "COLORS", "ClipRecord", "DatasetManifest", "EOS", "GenConfig",
    "PAD", "SHAPES", "SPECIALS", "SceneSpec", "UNK", "Vocabulary", "build_vocabulary",
    "caption_templates", "generate_corpus", "load_features", "load_manifest",
    "read_features", "read_frames", "render_clip", "scene_captions", "tokenize",
    "write_features", "write_frames",
]

"""Binary file formats and manifest loading.

Frames:   magic b"VCFR", u32 version, u32 dims (T, H, W, C), f32 LE payload.
Features: magic b"VCFT", u32 version, u32 clip count, then per clip a
          u16-length-prefixed utf-8 id, u32 dims (T, D), f64 LE payload.

Both are written and read with fixed byte order so files are bit-exact
across platforms.
"""

import json
import struct
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np

FRAME_MAGIC = b"VCFR"
FEATURE_MAGIC = b"VCFT"
FORMAT_VERSION = 1

PathLike = Union[str, Path]


def write_frames(path: PathLike, clip: np.ndarray) -> None:
    if clip.ndim != 4:
        raise ValueError(f"frames must be (T,H,W,C), got shape {clip.shape}")
    with open(path, "wb") as f:
        f.write(FRAME_MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<4I", *clip.shape))
        f.write(clip.astype("<f4").tobytes())


def read_frames(path: PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != FRAME_MAGIC:
            raise ValueError(f"{path}: not a frames file (magic {magic!r})")
        (version,) = struct.unpack("<I", f.read(4))
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        dims = struct.unpack("<4I", f.read(16))
        count = dims[0] * dims[1] * dims[2] * dims[3]
        raw = f.read(count * 4)
        if len(raw) != count * 4:
            raise ValueError(f"{path}: truncated payload")
        data = np.frombuffer(raw, dtype="<f4")
    return data.reshape(dims)


def write_features(path: PathLike, features: Dict[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        f.write(FEATURE_MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<I", len(features)))
        for clip_id, arr in features.items():
            if arr.ndim != 2:
                raise ValueError(f"features for {clip_id} must be (T,D), "
                                 f"got shape {arr.shape}")
            raw = clip_id.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(struct.pack("<2I", *arr.shape))
            f.write(arr.astype("<f8").tobytes())


def load_features(path: PathLike,
                  expect_dim: Optional[int] = None) -> Dict[str, np.ndarray]:
    """Read per-clip feature sequences; optionally check the feature width."""
    out: Dict[str, np.ndarray] = {}
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != FEATURE_MAGIC:
            raise ValueError(f"{path}: not a features file (magic {magic!r})")
        (version,) = struct.unpack("<I", f.read(4))
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        (count,) = struct.unpack("<I", f.read(4))
        for _ in range(count):
            (id_len,) = struct.unpack("<H", f.read(2))
            clip_id = f.read(id_len).decode("utf-8")
            t, d = struct.unpack("<2I", f.read(8))
            if expect_dim is not None and d != expect_dim:
                raise ValueError(f"{path}: clip {clip_id} has feature dim {d}, "
                                 f"config expects {expect_dim}")
            raw = f.read(t * d * 8)
            if len(raw) != t * d * 8:
                raise ValueError(f"{path}: truncated payload for {clip_id}")
            data = np.frombuffer(raw, dtype="<f8")
            out[clip_id] = data.reshape(t, d)
    return out


def read_features(path: PathLike) -> Dict[str, np.ndarray]:
    return load_features(path)


def load_manifest(path: PathLike):
    """Parse a manifest written by generate_corpus (JSON-lines)."""
    from vidcap.data.generate import ClipRecord, DatasetManifest

    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        lines = [line for line in f if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty manifest")
    header = json.loads(lines[0])
    records = []
    for line in lines[1:]:
        obj = json.loads(line)
        records.append(ClipRecord(
            clip_id=obj["id"], split=obj["split"], frames_path=obj["frames"],
            captions=list(obj["captions"]), scene=dict(obj["scene"]),
        ))
    return DatasetManifest(
        records=records,
        grammar_version=header["grammar_version"],
        seed=int(header["seed"]),
        frames_per_clip=int(header["frames_per_clip"]),
        frame_size=int(header["frame_size"]),
        root=path.parent,
    )

"""Captioner hyperparameter bundle and the two standard presets."""

from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class CaptionerConfig:
    """Sizes and decode settings for the two-layer encoder-decoder.

    encoder_steps frames are drawn per clip; the decoder emits at most
    decoder_steps tokens.  conv1/conv2 channels shape the frame encoder and
    frame_size pins the expected input resolution.
    """
    vocab_size: int
    encoder_steps: int = 5
    decoder_steps: int = 35
    hidden_dim: int = 128
    embed_dim: int = 64
    feat_dim: int = 64
    attr_count: int = 50
    beam_size: int = 3
    frame_size: int = 32
    conv1_channels: int = 8
    conv2_channels: int = 16
    dropout: float = 0.0

    def __post_init__(self):
        for field in ("vocab_size", "encoder_steps", "decoder_steps", "hidden_dim",
                      "embed_dim", "feat_dim", "attr_count", "beam_size",
                      "frame_size", "conv1_channels", "conv2_channels"):
            v = getattr(self, field)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{field} must be a positive integer, got {v!r}")
        if self.vocab_size < 5:
            raise ValueError("vocab_size must cover the 4 reserved ids plus "
                             f"at least one word, got {self.vocab_size}")
        if self.frame_size % 4 != 0:
            raise ValueError("frame_size must be divisible by 4 (two 2x2 pools), "
                             f"got {self.frame_size}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def flat_dim(self) -> int:
        """Width of the flattened conv output feeding the encoder's last dense."""
        side = self.frame_size // 4
        return side * side * self.conv2_channels

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CaptionerConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def desk_config(vocab_size: int, **overrides) -> CaptionerConfig:
    """Small sizes that train in minutes on a laptop CPU."""
    return CaptionerConfig(vocab_size=vocab_size, **overrides)


def paper_config(vocab_size: int, **overrides) -> CaptionerConfig:
    """Full-fidelity sizes: 1000-unit LSTMs, 500-d embeddings, 400 attributes."""
    base = dict(hidden_dim=1000, embed_dim=500, feat_dim=1536, attr_count=400)
    base.update(overrides)
    return CaptionerConfig(vocab_size=vocab_size, **base)

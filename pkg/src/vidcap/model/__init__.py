"""The encoder-decoder captioning model and its decoders."""

from .captioner import Captioner, DecoderState, EncoderTrace
from .clips import VideoClip, sample_frames, sample_indices
from .config import CaptionerConfig, desk_config, paper_config
from .decoding import (BatchSample, DecodeResult, Trajectory, beam_search,
                       greedy_decode, greedy_decode_batch, greedy_from_state,
                       sample_batch, sample_caption, sample_captions, sample_rows)

__all__ = [
    "Captioner", "DecoderState", "EncoderTrace",
    "VideoClip", "sample_frames", "sample_indices",
    "CaptionerConfig", "desk_config", "paper_config",
    "BatchSample", "DecodeResult", "Trajectory", "beam_search",
    "greedy_decode", "greedy_decode_batch", "greedy_from_state",
    "sample_batch", "sample_caption", "sample_captions", "sample_rows",
]

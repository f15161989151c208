"""Training, evaluation and ablation for the captioning model."""

from .ablation import (ALL_VARIANTS, AblationReport, VariantResult,
                       ordering_checks, run_ablation)
from .checkpoint import (Checkpoint, adam_from_checkpoint, load_checkpoint,
                         model_from_checkpoint, save_checkpoint, snapshot)
from .config import (DESK_STAGE_OVERRIDES, STAGE_BUDGET, STAGE_LR,
                     TrainConfig, desk_stage_config, stage_config)
from .corpus import SPLITS, CorpusData, desk_model_config, load_corpus
from .evaluate import (DECODE_MODES, DecodedCaption, decode_split,
                       evaluate_split, score_decoded)
from .loop import (LOG_COLUMNS, IterationRecord, TrainOutcome,
                   TrainingDiverged, cache_features, count_curve_violations,
                   reward_window_means, step1_train, step2_train, step3_train,
                   write_log_csv)

__all__ = [
    "ALL_VARIANTS", "AblationReport", "Checkpoint", "CorpusData",
    "DECODE_MODES", "DESK_STAGE_OVERRIDES", "DecodedCaption",
    "IterationRecord", "LOG_COLUMNS", "SPLITS", "STAGE_BUDGET", "STAGE_LR",
    "TrainConfig", "TrainOutcome", "TrainingDiverged", "VariantResult",
    "adam_from_checkpoint", "cache_features", "count_curve_violations",
    "decode_split", "desk_model_config", "desk_stage_config",
    "evaluate_split", "load_checkpoint",
    "load_corpus", "model_from_checkpoint", "ordering_checks",
    "reward_window_means", "run_ablation", "save_checkpoint",
    "score_decoded", "snapshot", "stage_config", "step1_train", "step2_train",
    "step3_train", "write_log_csv",
]

"""Ablation suite: retrain the captioner under each training recipe and
tabulate test metrics plus best validation CIDEr-D per variant.

Variants share work where recipes overlap: within a seed the warm-start
checkpoint is trained once and reused by every variant that builds on it,
likewise the stage-2 (m=4) checkpoint.  Scores aggregate across seeds by
median.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..metrics.report import MetricReport
from ..model import CaptionerConfig
from .checkpoint import model_from_checkpoint
from .config import DESK_STAGE_OVERRIDES, stage_config
from .corpus import CorpusData, desk_model_config
from .evaluate import evaluate_split
from .loop import TrainOutcome, step1_train, step2_train, step3_train

ALL_VARIANTS = ("xe", "xe_rl_m1", "xe_rl_m4", "xe_e2e", "xe_e2e_attr",
                "xe_rl_e2e", "full", "scratch_e2e")

DISPLAY_NAMES = {
    "xe": "xe",
    "xe_rl_m1": "xe+rl(m=1)",
    "xe_rl_m4": "xe+rl(m=4)",
    "xe_e2e": "xe+e2e",
    "xe_e2e_attr": "xe+e2e+attr",
    "xe_rl_e2e": "xe+rl+e2e",
    "full": "xe+rl+e2e+attr",
    "scratch_e2e": "e2e from scratch",
}


@dataclass
class VariantResult:
    name: str
    val_ciders: List[float] = field(default_factory=list)
    reports: List[MetricReport] = field(default_factory=list)

    @property
    def display(self) -> str:
        return DISPLAY_NAMES[self.name]

    @property
    def median_val(self) -> float:
        return float(np.median(self.val_ciders))

    @property
    def median_report(self) -> MetricReport:
        return MetricReport(
            bleu4=float(np.median([r.bleu4 for r in self.reports])),
            rouge_l=float(np.median([r.rouge_l for r in self.reports])),
            meteor=float(np.median([r.meteor for r in self.reports])),
            cider=float(np.median([r.cider for r in self.reports])))


@dataclass
class AblationReport:
    seeds: List[int]
    variants: List[VariantResult]

    def variant(self, name: str) -> VariantResult:
        for v in self.variants:
            if v.name == name:
                return v
        raise KeyError(name)

    def table(self) -> str:
        header = (f"{'variant':<18} {'BLEU4':>8} {'ROUGE-L':>8} "
                  f"{'METEOR':>8} {'CIDEr-D':>8} {'val CIDEr-D':>12}")
        lines = [header, "-" * len(header)]
        for v in self.variants:
            m = v.median_report
            lines.append(f"{v.display:<18} {m.bleu4:8.4f} {m.rouge_l:8.4f} "
                         f"{m.meteor:8.4f} {m.cider:8.4f} {v.median_val:12.4f}")
        return "\n".join(lines)

    def as_dict(self) -> Dict:
        return {
            "seeds": list(self.seeds),
            "variants": {
                v.name: {
                    "display": v.display,
                    "val_cider": list(v.val_ciders),
                    "median_val_cider": v.median_val,
                    "test": [r.as_dict() for r in v.reports],
                    "median_test": v.median_report.as_dict(),
                } for v in self.variants
            },
        }


def ordering_checks(report: AblationReport, use: str = "val") -> Dict[str, bool]:
    """Expected relationships between variant medians, on best-validation
    CIDEr-D (use="val") or the test-table CIDEr-D column (use="test")."""
    if use == "val":
        med = {v.name: v.median_val for v in report.variants}
    elif use == "test":
        med = {v.name: v.median_report.cider for v in report.variants}
    else:
        raise ValueError(f"use must be 'val' or 'test', got {use!r}")
    checks: Dict[str, bool] = {}
    if {"xe", "xe_rl_m4"} <= med.keys():
        checks["rl_improves_xe"] = med["xe_rl_m4"] > med["xe"]
    if {"full", "xe_rl_m4"} <= med.keys():
        checks["e2e_at_least_rl"] = med["full"] >= med["xe_rl_m4"]
    if {"xe", "scratch_e2e"} <= med.keys():
        checks["warm_start_beats_scratch"] = med["xe"] > med["scratch_e2e"]
    if {"full", "scratch_e2e"} <= med.keys():
        checks["full_beats_scratch"] = med["full"] > med["scratch_e2e"]
    if {"xe_rl_m1", "xe_rl_m4"} <= med.keys():
        checks["multi_sample_at_least_single"] = \
            med["xe_rl_m4"] >= med["xe_rl_m1"]
    if "full" in med:
        checks["full_tops_table"] = all(med["full"] >= med[o] for o in med)
    return checks


def run_ablation(data: CorpusData, seeds: Sequence[int],
                 model_config: Optional[CaptionerConfig] = None,
                 stage_overrides: Optional[Dict[int, Dict]] = None,
                 variants: Optional[Sequence[str]] = None) -> AblationReport:
    chosen = list(variants) if variants is not None else list(ALL_VARIANTS)
    unknown = sorted(set(chosen) - set(ALL_VARIANTS))
    if unknown:
        raise ValueError(f"unknown ablation variants: {', '.join(unknown)}")
    if not chosen:
        raise ValueError("no ablation variants selected")
    if not seeds:
        raise ValueError("need at least one seed")

    if model_config is None:
        model_config = desk_model_config(data)
    overrides = (DESK_STAGE_OVERRIDES if stage_overrides is None
                 else stage_overrides)

    def cfg(stage: int, seed: int, **extra):
        kw = dict(overrides.get(stage, {}))
        kw.update(extra)
        kw["seed"] = seed
        return stage_config(stage, **kw)

    results = {name: VariantResult(name) for name in chosen}
    for seed in seeds:
        shared: Dict[str, TrainOutcome] = {}

        def warm() -> TrainOutcome:
            if "s1" not in shared:
                shared["s1"] = step1_train(cfg(1, seed), data,
                                           model_config=model_config)
            return shared["s1"]

        def rl_m4() -> TrainOutcome:
            if "s2" not in shared:
                shared["s2"] = step2_train(cfg(2, seed, m=4), data,
                                           warm().checkpoint)
            return shared["s2"]

        recipes = {
            "xe": warm,
            "xe_rl_m1": lambda: step2_train(cfg(2, seed, m=1), data,
                                            warm().checkpoint),
            "xe_rl_m4": rl_m4,
            "xe_e2e": lambda: step3_train(
                cfg(3, seed, caption_loss="xe", use_attributes=False),
                data, warm().checkpoint, force=True),
            "xe_e2e_attr": lambda: step3_train(
                cfg(3, seed, caption_loss="xe", use_attributes=True),
                data, warm().checkpoint, force=True),
            "xe_rl_e2e": lambda: step3_train(
                cfg(3, seed, caption_loss="rl", use_attributes=False),
                data, rl_m4().checkpoint),
            "full": lambda: step3_train(cfg(3, seed), data,
                                        rl_m4().checkpoint),
            "scratch_e2e": lambda: step1_train(
                cfg(1, seed, encoder_frozen=False), data,
                model_config=model_config),
        }
        for name in chosen:
            outcome = recipes[name]()
            model = model_from_checkpoint(outcome.checkpoint)
            report = evaluate_split(model, data, "test", "greedy")
            results[name].val_ciders.append(outcome.best_val_cider)
            results[name].reports.append(report)

    return AblationReport(seeds=list(seeds),
                          variants=[results[name] for name in chosen])

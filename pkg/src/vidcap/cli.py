"""Command-line entry point.

One binary, subcommand style:

    vidcap gen-data    synthesize a clip corpus (frames + manifest)
    vidcap mine-attrs  mine the attribute lexicon from training captions
    vidcap train       run one training stage (1, 2 or 3)
    vidcap eval        decode a split and score all four metrics
    vidcap caption     print captions for a split, one per line
    vidcap score       score hypothesis captions against references
    vidcap ablate      run the full ablation suite

Conventions: logs go to stderr, human-readable tables to stdout, and
machine-readable results as JSON files under --out-dir.  No subcommand
writes outside its --out-dir.  Exit codes: 0 success, 1 usage error,
2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from .attributes import mine_attributes
from .data.generate import GenConfig, generate_corpus
from .data.io import load_manifest, read_frames
from .data.textproc import tokenize
from .metrics.ngrams import build_idf
from .metrics.report import score_corpus
from .model import VideoClip
from .trainer import (TrainConfig, decode_split, desk_model_config,
                      desk_stage_config, load_checkpoint, load_corpus,
                      model_from_checkpoint, ordering_checks, run_ablation,
                      save_checkpoint, score_decoded, step1_train,
                      step2_train, step3_train, write_log_csv)

log = logging.getLogger("vidcap.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    """Invalid invocation; reported with usage text and exit code 1."""


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; the contract here reserves 2 for
    runtime failures, so parse errors surface as UsageError instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _global_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="random seed (default 0; overrides the config file)")
    p.add_argument("--config", type=Path, default=None,
                   help="flat JSON file of training hyperparameters")
    p.add_argument("--log-level", default="info",
                   choices=("debug", "info", "warning", "error"),
                   help="stderr logging verbosity")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vidcap",
                     description="train and evaluate the video captioner")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="subcommand")

    p = sub.add_parser("gen-data", help="synthesize a clip corpus")
    _global_flags(p)
    p.add_argument("--out-dir", type=Path, required=True,
                   help="directory for frames/ and manifest.jsonl")
    p.add_argument("--clips", type=int, default=200,
                   help="training clips (val/test default to 15%%/30%% of it)")
    p.add_argument("--val-clips", type=int, default=None)
    p.add_argument("--test-clips", type=int, default=None)
    p.add_argument("--frames", type=int, default=8,
                   help="frames per clip")
    p.add_argument("--grammar-size", type=int, default=None,
                   help="cap on distinct shapes/colors/actions")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("mine-attrs", help="mine the attribute lexicon")
    _global_flags(p)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--count", type=int, default=50,
                   help="lexicon size (top content words by frequency)")
    p.set_defaults(func=cmd_mine_attrs)

    p = sub.add_parser("train", help="run one training stage")
    _global_flags(p)
    p.add_argument("--step", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out-dir", "--out", dest="out_dir", type=Path,
                   required=True)
    p.add_argument("--resume", type=Path, default=None,
                   help="checkpoint to start from (required for steps 2-3)")
    p.add_argument("--force", action="store_true",
                   help="accept a resume checkpoint with the wrong stage tag")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="decode a split and score it")
    _global_flags(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--split", default="test",
                   choices=("train", "val", "test"))
    p.add_argument("--mode", default="greedy", choices=("greedy", "beam"))
    p.add_argument("--beam-size", type=int, default=None,
                   help="beam width (defaults to the model's setting)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("caption", help="print captions, one per line")
    _global_flags(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--split", default="test",
                   choices=("train", "val", "test"))
    p.add_argument("--mode", default="greedy", choices=("greedy", "beam"))
    p.add_argument("--beam-size", type=int, default=None)
    p.add_argument("--json", action="store_true",
                   help="also write captions.json under --out-dir")
    p.add_argument("--out-dir", type=Path, default=None,
                   help="required with --json")
    p.set_defaults(func=cmd_caption)

    p = sub.add_parser("score", help="score captions against references")
    _global_flags(p)
    p.add_argument("--hyps", type=Path, default=None,
                   help="text file, one hypothesis caption per line")
    p.add_argument("--refs", type=Path, default=None,
                   help="JSON file: list of reference-caption lists")
    p.add_argument("--toy", action="store_true",
                   help="score the bundled toy fixture instead")
    p.add_argument("--out-dir", type=Path, default=None,
                   help="if given, also write metrics.json there")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("ablate", help="run the ablation suite")
    _global_flags(p)
    p.add_argument("--suite", default="table3", choices=("table3",),
                   help="which ablation table to produce")
    p.add_argument("--seeds", type=int, default=3,
                   help="number of seeds (0..n-1), aggregated by median")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out-dir", "--out", dest="out_dir", type=Path,
                   required=True)
    p.set_defaults(func=cmd_ablate)
    return parser


def _seed(args, fallback: int = 0) -> int:
    return fallback if args.seed is None else args.seed


def _read_config(args) -> dict:
    if args.config is None:
        return {}
    try:
        obj = json.loads(Path(args.config).read_text("utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config file not found: {args.config}")
    except json.JSONDecodeError as e:
        raise UsageError(f"config file {args.config} is not valid JSON: {e}")
    if not isinstance(obj, dict):
        raise UsageError(f"config file {args.config} must hold a flat "
                         f"JSON object")
    return obj


def _ensure_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_gen_data(args) -> int:
    val = args.val_clips if args.val_clips is not None else \
        max(1, round(0.15 * args.clips))
    test = args.test_clips if args.test_clips is not None else \
        max(1, round(0.30 * args.clips))
    cfg = GenConfig(train_clips=args.clips, val_clips=val, test_clips=test,
                    frames_per_clip=args.frames, seed=_seed(args),
                    grammar_size=args.grammar_size)
    manifest = generate_corpus(cfg, _ensure_dir(args.out_dir))
    log.info("generated %d clips under %s", len(manifest.records),
             args.out_dir)
    print(f"{len(manifest.records)} clips "
          f"(train {args.clips}, val {val}, test {test}) -> {args.out_dir}")
    return EXIT_OK


def cmd_mine_attrs(args) -> int:
    manifest = load_manifest(args.manifest)
    captions = [c for rec in manifest.split("train") for c in rec.captions]
    lexicon = mine_attributes(captions, n=args.count)
    out = _ensure_dir(args.out_dir) / "attributes.txt"
    out.write_text(lexicon.to_text(), encoding="utf-8")
    log.info("wrote %d attributes to %s", len(lexicon), out)
    print(f"{len(lexicon)} attributes -> {out}")
    for i, tok in enumerate(lexicon.tokens):
        print(f"{i:4d} {tok}")
    return EXIT_OK


def cmd_train(args) -> int:
    overrides = _read_config(args)
    if "stage" in overrides and overrides["stage"] != args.step:
        raise UsageError(f"config sets stage {overrides['stage']} but "
                         f"--step is {args.step}")
    overrides.pop("stage", None)
    known = set(TrainConfig.field_names())
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        # desk presets tuned for the bundled synthetic corpus; the config
        # file overrides any field
        config = desk_stage_config(args.step, **overrides)
    except ValueError as e:
        raise UsageError(str(e))

    resume = None
    if args.resume is not None:
        resume = load_checkpoint(args.resume)
    if args.step > 1:
        if resume is None:
            raise UsageError(
                f"--step {args.step} continues training from a "
                f"stage-{args.step - 1} checkpoint; pass --resume with the "
                f"checkpoint written by `vidcap train --step {args.step - 1}`")
        if resume.stage != args.step - 1 and not args.force:
            raise UsageError(
                f"{args.resume} carries stage tag {resume.stage}, not the "
                f"stage-{args.step - 1} tag that --step {args.step} expects "
                f"(--force overrides)")
    elif resume is not None and resume.stage != 1 and not args.force:
        raise UsageError(f"{args.resume} carries stage tag {resume.stage}; "
                         f"--step 1 resumes stage-1 checkpoints only "
                         f"(--force overrides)")

    data = load_corpus(args.manifest)
    log.info("corpus: %d clips, vocab %d, %d attributes",
             len(data.clips), len(data.vocab), len(data.lexicon))
    if args.step == 1:
        outcome = step1_train(config, data, checkpoint=resume,
                              model_config=desk_model_config(data),
                              force=args.force)
    elif args.step == 2:
        outcome = step2_train(config, data, resume, force=args.force)
    else:
        outcome = step3_train(config, data, resume, force=args.force)

    out = _ensure_dir(args.out_dir)
    ck_path = out / f"step{args.step}.ckpt"
    save_checkpoint(outcome.checkpoint, ck_path)
    write_log_csv(out / f"step{args.step}_log.csv", outcome.records)
    summary = {
        "stage": args.step,
        "best_val_cider": outcome.best_val_cider,
        "best_iteration": outcome.best_iteration,
        "iterations_run": len(outcome.records),
        "evals": [[i, v] for i, v in outcome.evals],
        "checkpoint": ck_path.name,
    }
    (out / f"step{args.step}_summary.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True), encoding="utf-8")
    print(f"stage {args.step}: best validation CIDEr-D "
          f"{outcome.best_val_cider:.4f} at iteration "
          f"{outcome.best_iteration} -> {ck_path}")
    return EXIT_OK


def _load_split_clips(manifest_path: Path, split: str):
    manifest = load_manifest(manifest_path)
    records = manifest.split(split)
    return [VideoClip(r.clip_id, frames=read_frames(manifest.frames_file(r)))
            for r in records]


def cmd_eval(args) -> int:
    ck = load_checkpoint(args.checkpoint)
    model = model_from_checkpoint(ck)
    data = load_corpus(args.manifest)
    clips = data.split_clips(args.split)
    if not clips:
        raise ValueError(f"split {args.split!r} is empty")
    decoded = decode_split(model, clips, ck.vocabulary(), args.mode,
                           args.beam_size)
    report = score_decoded(decoded, data)
    out = _ensure_dir(args.out_dir)
    payload = {
        "split": args.split,
        "mode": args.mode,
        "checkpoint_stage": ck.stage,
        "metrics": report.as_dict(),
        "captions": [{"clip_id": d.clip_id, "caption": " ".join(d.tokens),
                      "log_prob": d.log_prob} for d in decoded],
    }
    path = out / f"eval_{args.split}_{args.mode}.json"
    path.write_text(json.dumps(payload, indent=1, sort_keys=True),
                    encoding="utf-8")
    log.info("wrote %s", path)
    print(report.table())
    return EXIT_OK


def cmd_caption(args) -> int:
    if args.json and args.out_dir is None:
        raise UsageError("--json needs --out-dir for captions.json")
    ck = load_checkpoint(args.checkpoint)
    model = model_from_checkpoint(ck)
    clips = _load_split_clips(args.manifest, args.split)
    if not clips:
        raise ValueError(f"split {args.split!r} is empty")
    decoded = decode_split(model, clips, ck.vocabulary(), args.mode,
                           args.beam_size)
    for d in decoded:
        print(" ".join(d.tokens))
    if args.json:
        out = _ensure_dir(args.out_dir) / "captions.json"
        payload = [{"clip_id": d.clip_id, "tokens": d.tokens,
                    "log_prob": d.log_prob} for d in decoded]
        out.write_text(json.dumps(payload, indent=1, sort_keys=True),
                       encoding="utf-8")
        log.info("wrote %s", out)
    return EXIT_OK


def cmd_score(args) -> int:
    if args.toy:
        text = resources.files("vidcap").joinpath(
            "fixtures/toy_score.json").read_text("utf-8")
        payload = json.loads(text)
        hyps, refs = payload["hyps"], payload["refs"]
    else:
        if args.hyps is None or args.refs is None:
            raise UsageError("score needs --hyps and --refs (or --toy)")
        hyps = [line for line in
                args.hyps.read_text("utf-8").splitlines() if line.strip()]
        refs = json.loads(args.refs.read_text("utf-8"))
    idf = build_idf([[tokenize(r) for r in rs] for rs in refs])
    try:
        report = score_corpus(hyps, refs, idf)
    except ValueError as e:
        raise UsageError(str(e))
    print(report.table())
    if args.out_dir is not None:
        out = _ensure_dir(args.out_dir) / "metrics.json"
        out.write_text(json.dumps(report.as_dict(), indent=1, sort_keys=True),
                       encoding="utf-8")
        log.info("wrote %s", out)
    return EXIT_OK


def cmd_ablate(args) -> int:
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    data = load_corpus(args.manifest)
    report = run_ablation(data, seeds=tuple(range(args.seeds)))
    out = _ensure_dir(args.out_dir)
    payload = report.as_dict()
    payload["orderings"] = {
        "val": ordering_checks(report, "val"),
        "test": ordering_checks(report, "test"),
    }
    path = out / "ablation.json"
    path.write_text(json.dumps(payload, indent=1, sort_keys=True),
                    encoding="utf-8")
    log.info("wrote %s", path)
    print(report.table())
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(stream=sys.stderr,
                        level=getattr(logging, args.log_level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # CLI boundary: report and exit nonzero
        log.error("%s", e)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

"""
Command-line entry point.

Every command writes its effective configuration to ``<out>/config.yaml``
and a log to ``<out>/run.log`` before doing any work.
"""

import argparse
import asyncio
import hashlib
import logging
import os
import sys
from typing import List, Optional, Sequence, Tuple

from cattle_clip.config import GlobalConfig, dump_config, load_config
from cattle_clip.curation import CurationResult, curate, ingest_tracklets, write_curation_outputs
from cattle_clip.data import ClipStore, Manifest, generate_synthetic_dataset, load_manifest, manifest_digest
from cattle_clip.data import split_dataset, write_manifest
from cattle_clip.errors import CattleClipError, ConfigError, DataError
from cattle_clip.evaluation import MetricsReport, confusion_frame, format_percent, write_report
from cattle_clip.evaluation.report import config_digest
from cattle_clip.fewshot import run_leave_one_out
from cattle_clip.fewshot.plan import SHOTS, STAGES
from cattle_clip.model import CattleClip, import_weights, load_weight_file
from cattle_clip.text import build_prompt_set, check_token_split, remap_category
from cattle_clip.training import evaluate_report, load_checkpoint, restore_model, train_supervised
from cattle_clip.utils.file_manager import FileManager

logger = logging.getLogger("cattle_clip")

_installed_handlers: List[logging.Handler] = []


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors raise ConfigError so they map to exit code 1"""

    def error(self, message: str):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="YAML configuration file")
    common.add_argument("--seed", type=int, default=None, help="Base seed routed into every seeded section")
    common.add_argument("--out", type=str, default=None, help="Output directory (default: runs/<command>)")
    common.add_argument("--jobs", type=int, default=1, help="Parallel worker processes for fewshot")
    common.add_argument("--log-level", type=str, default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE", help="Config override"
    )

    parser = ArgumentParser(description="Train and evaluate video behaviour classifiers for cattle")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    sub.add_parser("synth", parents=[common], help="Write a synthetic dataset")

    curate_parser = sub.add_parser("curate", parents=[common], help="Turn tracklets into clips")
    curate_parser.add_argument("tracklets", type=str, help="Tracklet JSON-lines file")

    train_parser = sub.add_parser("train", parents=[common], help="Supervised training")
    train_parser.add_argument("manifest", type=str, help="Manifest JSON-lines file")
    train_parser.add_argument("--no-aug", action="store_true", help="Disable train-time augmentation")
    train_parser.add_argument("--no-prompt-remap", action="store_true", help="Use raw category names in prompts")
    train_parser.add_argument("--resume", type=str, default=None, help="Checkpoint to continue from")

    fewshot_parser = sub.add_parser("fewshot", parents=[common], help="Base-to-novel protocol")
    fewshot_parser.add_argument("manifest", type=str, help="Manifest JSON-lines file")
    fewshot_parser.add_argument("--category", action="append", default=None, help="Scarce category (repeatable)")
    fewshot_parser.add_argument("--n", type=int, action="append", default=None, choices=SHOTS, help="Shots (repeatable)")
    fewshot_parser.add_argument("--stage", action="append", default=None, choices=STAGES, help="Stage (repeatable)")
    fewshot_parser.add_argument("--no-aug", action="store_true", help="Disable train-time augmentation")
    fewshot_parser.add_argument("--no-prompt-remap", action="store_true", help="Use raw category names in prompts")

    eval_parser = sub.add_parser("eval", parents=[common], help="Evaluate a checkpoint")
    eval_parser.add_argument("checkpoint", type=str, help="Checkpoint file")
    eval_parser.add_argument("manifest", type=str, help="Manifest JSON-lines file")
    eval_parser.add_argument("--split", type=str, default=None, choices=["train", "val", "test"])

    tokens_parser = sub.add_parser("inspect-tokens", parents=[common], help="Token-split diagnostic")
    tokens_parser.add_argument("--remap", action="store_true", help="Apply the behaviour remaps first")
    return parser


def effective_config(args: argparse.Namespace) -> GlobalConfig:
    overrides = list(args.overrides)
    if getattr(args, "no_aug", False):
        overrides.append("training.augment=false")
    if getattr(args, "no_prompt_remap", False):
        overrides.append("training.prompt_remap=false")
    config = load_config(args.config, overrides)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def configure_logging(level: str, out_dir: str) -> None:
    root = logging.getLogger()
    root.setLevel(level)
    while _installed_handlers:
        handler = _installed_handlers.pop()
        root.removeHandler(handler)
        handler.close()
    formatter = logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
    console = logging.StreamHandler()
    console.setFormatter(formatter)
    root.addHandler(console)
    _installed_handlers.append(console)
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise DataError(f"Cannot create output directory {out_dir}: {exc}") from exc
    file_handler = logging.FileHandler(os.path.join(out_dir, "run.log"), encoding="utf-8")
    file_handler.setFormatter(formatter)
    root.addHandler(file_handler)
    _installed_handlers.append(file_handler)


async def _manifest_with_store(path: str, config: GlobalConfig, out_dir: str) -> Tuple[Manifest, ClipStore]:
    manifest = await load_manifest(path)
    if not manifest.is_split:
        manifest = split_dataset(manifest, config.dataset.split_ratios, config.dataset.split_seed)
        await write_manifest(manifest, out_dir, "manifest.split.jsonl")
    return manifest, ClipStore(os.path.dirname(os.path.abspath(path)))


def _file_digest(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()[:16]


async def _write_report_files(report: MetricsReport, out_dir: str, name: str, provenance: dict) -> None:
    await write_report(report, os.path.join(out_dir, f"{name}.json"), provenance)
    await FileManager("", out_dir).write_text(f"{name}.txt", confusion_frame(report).to_string() + "\n")


async def cmd_synth(config: GlobalConfig, out_dir: str) -> int:
    manifest = await generate_synthetic_dataset(config.synth, out_dir, config.dataset.categories)
    logger.info("Synthetic dataset of %d clips written to %s", len(manifest), out_dir)
    return 0


async def cmd_curate(tracklets_path: str, config: GlobalConfig, out_dir: str) -> int:
    tracklets = await ingest_tracklets(tracklets_path)
    result: CurationResult = await curate(tracklets, config.curation, config.dataset.categories)
    await write_curation_outputs(result, out_dir)
    return 0


async def cmd_train(manifest_path: str, config: GlobalConfig, out_dir: str, resume: Optional[str] = None) -> int:
    manifest, store = await _manifest_with_store(manifest_path, config, out_dir)
    train, val, test = (manifest.split(s) for s in ("train", "val", "test"))
    await store.load(train + val + test)
    model = CattleClip(config.model, config.contrastive, seed=config.training.seed)
    if config.model.init_weights:
        import_weights(model, load_weight_file(config.model.init_weights))
    prompts = build_prompt_set(
        manifest.categories, config.text, config.training.prompt_remap, max_tokens=config.model.max_tokens,
        vocab_size=config.model.vocab_size,
    )
    checkpoint = load_checkpoint(resume) if resume else None
    provenance = {
        "dataset_hash": manifest_digest(manifest),
        "config_hash": config_digest(config.to_dict()),
        "ablation_row": config.training.ablation_row,
        "seed": config.seed,
    }
    model, history = train_supervised(
        model,
        train,
        val,
        store,
        prompts,
        config.training,
        config.augmentation,
        config.evaluation.seed,
        output_dir=out_dir,
        resume_from=checkpoint,
        metadata=provenance,
    )
    split = config.evaluation.split
    records = manifest.split(split)
    if not records:
        raise DataError(f"the {split} split is empty")
    report = evaluate_report(
        model, records, store, prompts, config.augmentation, config.evaluation.seed, config.evaluation.threshold
    )
    checkpoint_path = os.path.join(out_dir, "checkpoint.pt")
    checkpoint_id = _file_digest(checkpoint_path) if os.path.isfile(checkpoint_path) else None
    await _write_report_files(report, out_dir, "report", {**provenance, "split": split, "checkpoint_id": checkpoint_id})
    logger.info("%s accuracy %s (%s)", split, format_percent(report.overall_accuracy), config.training.ablation_row)
    return 0


async def cmd_fewshot(
    manifest_path: str,
    config: GlobalConfig,
    out_dir: str,
    jobs: int = 1,
    categories: Optional[Sequence[str]] = None,
    ns: Optional[Sequence[int]] = None,
    stages: Optional[Sequence[str]] = None,
) -> int:
    manifest, store = await _manifest_with_store(manifest_path, config, out_dir)
    table = await run_leave_one_out(
        manifest,
        store,
        config.stage_settings(),
        config.fewshot,
        out_dir,
        jobs=jobs,
        categories=categories,
        ns=ns,
        stages=stages or STAGES,
    )
    logger.info("Few-shot table has %d rows, %d flagged suboptimal", len(table), int(table["suboptimal"].sum()))
    return 0


async def cmd_eval(checkpoint_path: str, manifest_path: str, split: str, config: GlobalConfig, out_dir: str) -> int:
    checkpoint = load_checkpoint(checkpoint_path)
    model = CattleClip(config.model, config.contrastive)
    restore_model(model, checkpoint.state_dict)
    manifest, store = await _manifest_with_store(manifest_path, config, out_dir)
    records = manifest.split(split)
    if not records:
        raise DataError(f"the {split} split is empty")
    await store.load(records)
    prompts = build_prompt_set(
        manifest.categories, config.text, config.training.prompt_remap, max_tokens=config.model.max_tokens,
        vocab_size=config.model.vocab_size,
    )
    report = evaluate_report(
        model, records, store, prompts, config.augmentation, config.evaluation.seed, config.evaluation.threshold
    )
    provenance = {
        "checkpoint_id": _file_digest(checkpoint_path),
        "dataset_hash": manifest_digest(manifest),
        "config_hash": config_digest(config.to_dict()),
        "split": split,
    }
    await _write_report_files(report, out_dir, f"report.{split}", provenance)
    return 0


async def cmd_inspect_tokens(config: GlobalConfig, out_dir: str, remap: bool = False) -> int:
    tokenizer = config.text.build_tokenizer()
    vocab = config.text.vocabulary()
    phrases = [remap_category(c, vocab) if remap else c for c in config.dataset.categories]
    report = check_token_split(phrases, tokenizer)
    await FileManager("", out_dir).write_jsonl("tokens.jsonl", report.to_records())
    print(report.to_frame().to_string(index=False))
    for row in report.flagged:
        logger.warning("%r splits into %d pieces: %s", row.word, row.n_tokens, " ".join(row.pieces))
    return 0


async def dispatch(args: argparse.Namespace, config: GlobalConfig, out_dir: str) -> int:
    command_map = {
        "synth": lambda: cmd_synth(config, out_dir),
        "curate": lambda: cmd_curate(args.tracklets, config, out_dir),
        "train": lambda: cmd_train(args.manifest, config, out_dir, args.resume),
        "fewshot": lambda: cmd_fewshot(args.manifest, config, out_dir, args.jobs, args.category, args.n, args.stage),
        "eval": lambda: cmd_eval(
            args.checkpoint, args.manifest, args.split or config.evaluation.split, config, out_dir
        ),
        "inspect-tokens": lambda: cmd_inspect_tokens(config, out_dir, args.remap),
    }
    return await command_map[args.command]()


async def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        config = effective_config(args)
        out_dir = args.out or os.path.join("runs", args.command)
        configure_logging(args.log_level, out_dir)
        await dump_config(config, out_dir)
        return await dispatch(args, config, out_dir)
    except CattleClipError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except (FileNotFoundError, ValueError) as exc:
        logger.error("%s", exc)
        return DataError.exit_code


def run() -> None:
    sys.exit(asyncio.run(main()))

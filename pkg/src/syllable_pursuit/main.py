#!/usr/bin/env python3
"""
syllable-pursuit command line entry point

Subcommands: fit, annotate, eval, synth, plot, sweep. Exit codes: 0 success,
1 usage error, 2 data error, 3 internal invariant violation.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .config import ConfigLoader, apply_overrides, load_synth_config
from .config.settings import settings
from .models.config_types import PipelineConfig
from .services import experiment, pipeline
from .services.dataset import discover_recordings, load_spectrogram
from .services.pipeline_errors import DatasetLayoutError, UsageError
from .storage.annotation_io import read_annotation_csv, read_annotation_jsonl
from .utils.error_handler import EXIT_OK, ErrorHandler
from .utils.logging_config import get_logger, setup_logging

logger = get_logger(__name__)


class PipelineArgumentParser(argparse.ArgumentParser):
    """Argument parser reporting errors as UsageError instead of exiting"""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}", "INVALID_ARGUMENTS")


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Pipeline configuration file (YAML)")
    parser.add_argument("--seed", type=int, help="Split seed")
    parser.add_argument("--mode", choices=["single", "multi"], help="Per-individual or pooled template fitting")
    parser.add_argument("--support-minutes", type=float, dest="support_minutes", help="Support set duration per individual")
    parser.add_argument("--out", help="Output root directory")
    parser.add_argument("--workers", type=int, help="Worker pool size (overrides PIPELINE_WORKERS)")


def build_parser() -> argparse.ArgumentParser:
    """Create the command line parser"""
    parser = PipelineArgumentParser(prog="syllable-pursuit", description="Template matching annotation of birdsong")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")
    subparsers = parser.add_subparsers(dest="command", parser_class=PipelineArgumentParser)
    subparsers.required = True

    for name, help_text in (
        ("fit", "Learn templates from the support set"),
        ("annotate", "Annotate query and support recordings"),
        ("eval", "Score annotations against ground truth"),
    ):
        _add_pipeline_flags(subparsers.add_parser(name, help=help_text))

    synth = subparsers.add_parser("synth", help="Generate a synthetic corpus")
    synth.add_argument("--config", help="Synthetic corpus configuration file (YAML)")
    synth.add_argument("--seed", type=int, help="Corpus seed")
    synth.add_argument("--out", required=True, help="Corpus root directory")

    plot = subparsers.add_parser("plot", help="Overlay an annotation on its spectrogram")
    _add_pipeline_flags(plot)
    plot.add_argument("--recording", required=True, help="Recording id (<individual>/<stem>)")
    plot.add_argument("--annotation", help="Annotation file (.csv or .jsonl); defaults to the annotate output")
    plot.add_argument("--kind", choices=["query", "support"], default="query", help="Annotation set searched by default")
    plot.add_argument("--output", help="Image file (defaults to <out>/plots/<recording>.svg)")

    sweep = subparsers.add_parser("sweep", help="Repeat fit/annotate/eval over seeds and support sizes")
    _add_pipeline_flags(sweep)
    sweep.add_argument("--seeds", type=_int_list, default=[0], help="Comma-separated seeds")
    sweep.add_argument(
        "--support-minutes-list",
        type=_float_list,
        dest="support_minutes_list",
        default=[1.0, 5.0, 10.0, 20.0],
        help="Comma-separated support sizes in minutes",
    )
    return parser


def load_pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    """Configuration file with command line overrides applied"""
    config = ConfigLoader(args.config).load_config()
    return apply_overrides(
        config,
        seed=args.seed,
        mode=args.mode,
        support_minutes=args.support_minutes,
        output_root=args.out,
    )


def _plot(args: argparse.Namespace, config: PipelineConfig) -> Path:
    from .services.plotting import cmd_plot

    refs = {ref.recording_id: ref for ref in discover_recordings(config.paths)}
    if args.recording not in refs:
        raise DatasetLayoutError(config.paths.audio_root, f"unknown recording {args.recording!r}")
    layout = pipeline.output_layout(config)
    annotation_path = Path(args.annotation) if args.annotation else layout.annotation(args.kind, args.recording)
    if not annotation_path.is_file():
        raise DatasetLayoutError(annotation_path, "annotation file not found")
    if annotation_path.suffix == ".csv":
        annotation = read_annotation_csv(annotation_path, args.recording)
    else:
        annotation = read_annotation_jsonl(annotation_path)

    output = Path(args.output) if args.output else layout.root / "plots" / f"{args.recording}.svg"
    return cmd_plot(load_spectrogram(refs[args.recording], config.stft), annotation, output, title=args.recording)


def run_command(args: argparse.Namespace) -> None:
    """Dispatch a parsed command"""
    if args.command == "synth":
        layout = pipeline.cmd_synth(load_synth_config(args.config, args.seed), Path(args.out))
        print(layout["audio_root"])
        return

    config = load_pipeline_config(args)
    workers = args.workers
    if args.command == "fit":
        for unit, path in pipeline.cmd_fit(config, workers=workers).items():
            print(f"{unit}\t{path}")
    elif args.command == "annotate":
        written = pipeline.cmd_annotate(config, workers=workers)
        print(f"{len(written)} annotations written under {pipeline.output_layout(config).root / 'annotations'}")
    elif args.command == "eval":
        pipeline.cmd_eval(config, workers=workers)
        print(pipeline.output_layout(config).root / "report.json")
    elif args.command == "plot":
        print(_plot(args, config))
    elif args.command == "sweep":
        experiment.run_experiment(config, args.seeds, args.support_minutes_list, workers=workers)
        print(Path(config.paths.output_root) / "sweep_summary.json")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the command and return the exit code"""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as error:
        setup_logging(settings)
        return ErrorHandler.handle_exception(error)

    setup_logging(settings, level="DEBUG" if args.verbose else None)
    logger.info("Command started", command=args.command)
    try:
        run_command(args)
    except Exception as error:
        return ErrorHandler.handle_exception(error, debug=args.verbose)
    return EXIT_OK


def cli_main():
    """CLI entry point for setuptools"""
    sys.exit(main())


if __name__ == "__main__":
    cli_main()

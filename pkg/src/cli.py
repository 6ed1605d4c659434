"""Command-line surface: trace, train, encode, decode, rd-sweep, stats, synth and serve.

Command output goes to stdout or to the files named on the command line;
logs go to stderr. Exit codes: 0 success, 1 runtime failure, 2 invalid input.
"""

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .config.constants import (
    ApproximationMode,
    DefaultValues,
    ExitCode,
    HistoryMode,
    OversizePolicy,
)
from .config.settings import AppConfig, ConfigLoader, ConfigurationError, TreeConfig
from .domain.entropy import CorruptStreamError
from .domain.geometry import AbsoluteDirection, ContourError, DccContour, GridPoint, trace_mask
from .domain.lossless import InvalidImageError, OversizeContourError
from .domain.services import ApproximationService, CodecService, TrainingService, describe_model
from .domain.synthetic import (
    entropy_rate,
    image_size,
    markov_corpus,
    mask_suite,
    natural_contour,
    normalize_position,
    random_transitions,
)
from .domain.training import TrainingError
from .infrastructure.contour_io import (
    ContourFormatError,
    atomic_write,
    format_contours,
    format_csv,
    load_contour_source,
    load_corpus,
)
from .infrastructure.logging import setup_logging
from .infrastructure.model_store import (
    ModelFileError,
    ModelStore,
    format_stats_text,
    load_model,
    parse_stats,
    save_model,
    serialize_stats,
)
from .infrastructure.pbm import PbmFormatError, format_pbm, read_pbm

logger = logging.getLogger(__name__)

INVALID_INPUT_ERRORS = (
    PbmFormatError,
    ContourFormatError,
    ContourError,
    CorruptStreamError,
    TrainingError,
    ModelFileError,
    InvalidImageError,
    OversizeContourError,
    ConfigurationError,
)

DEFAULT_MADD_GRID = [1.0, 2.0, 3.0, 4.0, 5.0]


class CommandError(Exception):
    """A command could not complete; carries the exit code to report."""

    def __init__(self, message: str, exit_code: ExitCode = ExitCode.FAILURE):
        super().__init__(message)
        self.exit_code = exit_code


def _float_list(text: str) -> List[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values or any(v < 0 for v in values):
        raise argparse.ArgumentTypeError(f"expected non-negative numbers, got {text!r}")
    return values


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _print_json(payload: Dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_output(path: Optional[str], data) -> None:
    """Atomic file write, or stdout when no path is given."""
    if path:
        atomic_write(path, data)
    elif isinstance(data, bytes):
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        sys.stdout.write(data)


class _LoadedModelStore(ModelStore):
    """Model store that fails loudly instead of reporting an absent model."""

    def __init__(self, model_path: str):
        super().__init__(None)
        self.set_model(load_model(model_path))


def _tree_config(args: argparse.Namespace, config: AppConfig) -> TreeConfig:
    return replace(
        config.tree,
        a=config.tree.a if args.a is None else args.a,
        beta=config.tree.beta if args.beta is None else args.beta,
        depth=config.tree.depth if args.depth is None else args.depth,
        budget=config.tree.budget if args.budget is None else args.budget
    )


def cmd_trace(args: argparse.Namespace, config: AppConfig) -> int:
    out_dir = Path(args.out_dir) if args.out_dir else None

    def trace_one(path: Path) -> Optional[str]:
        try:
            contours = trace_mask(read_pbm(path))
        except PbmFormatError as e:
            logger.error(f"{path}: {e}")
            return None
        target = (out_dir / path.name if out_dir else path).with_suffix(".txt")
        atomic_write(target, format_contours(contours))
        logger.info(f"Traced {len(contours)} contours from {path} into {target}")
        return str(target)

    paths = [Path(p) for p in args.masks]
    with ThreadPoolExecutor(max_workers=args.threads or config.threads) as executor:
        written = list(executor.map(trace_one, paths))

    _print_json({"outputs": [w for w in written if w is not None]})
    failed = sum(1 for w in written if w is None)
    if failed:
        raise CommandError(f"{failed} of {len(paths)} masks could not be traced", ExitCode.INVALID_INPUT)
    return ExitCode.OK


def cmd_train(args: argparse.Namespace, config: AppConfig) -> int:
    contours = load_corpus(args.corpus)
    trained = TrainingService(config).train(contours, _tree_config(args, config))

    report = trained.report
    report.model_hash = f"{save_model(args.output, trained.tree):016x}"
    if args.stats:
        atomic_write(args.stats, serialize_stats(trained.statistics))
    if args.stats_text:
        atomic_write(args.stats_text, format_stats_text(trained.statistics))
    if args.report:
        atomic_write(args.report, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")

    _print_json(report.to_dict())
    return ExitCode.OK


def _image_for(path: str, args: argparse.Namespace) -> tuple:
    """Contours plus the image size, from a mask or from explicit/derived dimensions."""
    if Path(path).suffix.lower() == ".pbm":
        mask = read_pbm(path)
        return trace_mask(mask), mask.shape[1], mask.shape[0]
    contours = load_contour_source(path)
    width, height = image_size(contours) if contours else (0, 0)
    return contours, args.width if args.width is not None else width, args.height if args.height is not None else height


def cmd_encode(args: argparse.Namespace, config: AppConfig) -> int:
    contours, width, height = _image_for(args.input, args)
    service = CodecService(_LoadedModelStore(args.model), config)
    policy = OversizePolicy(args.oversize_policy) if args.oversize_policy else None
    result = service.encode(contours, width, height, policy)
    if not result.success:
        raise CommandError(result.error, ExitCode.INVALID_INPUT)

    stream = result.stream
    atomic_write(args.output, stream.data)
    _print_json({
        "width": width,
        "height": height,
        "contours": len(stream.contours),
        "symbols": stream.symbol_count,
        "total_bits": stream.total_bits,
        "header_bits": stream.header_bits,
        "payload_bits": stream.payload_bits,
        "contour_bits": stream.contour_bits,
        "bits_per_symbol": stream.bits_per_symbol
    })
    return ExitCode.OK


def cmd_decode(args: argparse.Namespace, config: AppConfig) -> int:
    try:
        data = Path(args.input).read_bytes()
    except OSError as e:
        raise CommandError(f"Cannot read {args.input}: {e}", ExitCode.INVALID_INPUT) from e

    result = CodecService(_LoadedModelStore(args.model), config).decode(data)
    if not result.success:
        raise CommandError(result.error, ExitCode.INVALID_INPUT)

    image = result.image
    header = f"# {image.width}x{image.height}, {len(image.contours)} contours\n"
    _write_output(args.output, header + format_contours(image.contours))
    return ExitCode.OK


def cmd_rd_sweep(args: argparse.Namespace, config: AppConfig) -> int:
    mode = ApproximationMode(args.mode) if args.mode else config.rd.mode
    if mode == ApproximationMode.SSDD:
        grid = args.lambda_ or [config.rd.lambda_]
        if args.dmax and len(args.dmax) > 1:
            raise CommandError("--dmax takes a single value in ssdd mode", ExitCode.INVALID_INPUT)
        d_max = args.dmax[0] if args.dmax else None
    else:
        grid = args.dmax or DEFAULT_MADD_GRID
        d_max = None

    contours = load_corpus(args.inputs)
    service = ApproximationService(_LoadedModelStore(args.model), config)
    rows = service.sweep(
        contours,
        mode,
        grid,
        d_max=d_max,
        history=HistoryMode(args.history) if args.history else None,
        reject_self_intersecting=args.reject_self_intersecting,
        threads=args.threads
    )
    _write_output(args.csv, format_csv(row.to_csv_row() for row in rows))
    return ExitCode.OK


def cmd_stats(args: argparse.Namespace, config: AppConfig) -> int:
    model = load_model(args.model)
    summary = describe_model(model.tree, model.tst, model.hash).to_dict()
    if args.dump:
        try:
            data = Path(args.dump).read_bytes()
        except OSError as e:
            raise CommandError(f"Cannot read {args.dump}: {e}", ExitCode.INVALID_INPUT) from e
        statistics = parse_stats(data, model.tree.params)
        summary["statistics"] = {"length": statistics.length, "nodes": statistics.node_count}
        if args.text:
            atomic_write(args.text, format_stats_text(statistics))
    _print_json(summary)
    return ExitCode.OK


def cmd_synth(args: argparse.Namespace, config: AppConfig) -> int:
    out_dir = Path(args.out_dir)
    rng = np.random.default_rng(args.seed)

    if args.kind == "masks":
        outputs = []
        for index, mask in enumerate(mask_suite(args.seed, args.size)):
            target = out_dir / f"mask_{index:02d}.pbm"
            atomic_write(target, format_pbm(mask))
            outputs.append(str(target))
        _print_json({"kind": args.kind, "seed": args.seed, "outputs": outputs})
        return ExitCode.OK

    summary = {"kind": args.kind, "seed": args.seed, "count": args.count, "length": args.length}
    if args.kind == "markov":
        transitions = random_transitions(rng)
        corpus = markov_corpus(transitions, args.count, args.length, seed=args.seed)
        contours = [
            normalize_position(DccContour(GridPoint(0, 0), AbsoluteDirection.E, s)) for s in corpus.strings
        ]
        summary["entropy_rate"] = entropy_rate(transitions)
        summary["transitions"] = transitions.tolist()
    else:
        contours = [natural_contour(rng, args.length) for _ in range(args.count)]

    target = out_dir / f"{args.kind}.txt"
    atomic_write(target, format_contours(contours))
    summary["output"] = str(target)
    _print_json(summary)
    return ExitCode.OK


def cmd_serve(args: argparse.Namespace, config: AppConfig) -> int:
    import uvicorn

    from .application import create_app

    if args.model:
        config.codec.model_path = args.model
    port = args.port or config.port
    uvicorn.run(create_app(config), host=args.host, port=port, log_level="info")
    return ExitCode.OK


def _add_tree_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--a", type=float, help="Prior weight a (alpha = a ln L)")
    parser.add_argument("--beta", type=float, help="Additive smoothing of context distributions")
    parser.add_argument("--depth", type=_positive_int, help="Maximum context depth D")
    parser.add_argument("--budget", type=_positive_int, help="Node budget K")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contour-codec",
        description="Context-tree coding of binary shape contours"
    )
    parser.add_argument("--config", default=DefaultValues.DEFAULT_CONFIG_FILE, help="JSON configuration file")
    parser.add_argument("--log-level", help="Override the environment's log level")
    parser.add_argument("--threads", type=_positive_int, help="Parallelism cap (default CONTOUR_CODEC_THREADS)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    trace = subparsers.add_parser("trace", help="Trace PBM masks into contour text files")
    trace.add_argument("masks", nargs="+")
    trace.add_argument("--out-dir", help="Directory for the .txt outputs (default: beside each mask)")
    trace.set_defaults(handler=cmd_trace)

    train = subparsers.add_parser("train", help="Train and prune a context tree")
    train.add_argument("corpus", nargs="+", help="Contour/PBM files or directories, read in sorted order")
    train.add_argument("-o", "--output", required=True, help="Model file to write")
    train.add_argument("--stats", help="Binary dump of the initial count trie")
    train.add_argument("--stats-text", help="Text dump of the initial count trie")
    train.add_argument("--report", help="JSON training report")
    _add_tree_flags(train)
    train.set_defaults(handler=cmd_train)

    encode = subparsers.add_parser("encode", help="Losslessly code one image's contours")
    encode.add_argument("input", help="Contour text file or PBM mask")
    encode.add_argument("--model", required=True)
    encode.add_argument("-o", "--output", required=True, help="Container file to write")
    encode.add_argument("--width", type=int, help="Image width (default: contour bounding box)")
    encode.add_argument("--height", type=int, help="Image height (default: contour bounding box)")
    encode.add_argument("--oversize-policy", choices=[p.value for p in OversizePolicy])
    encode.set_defaults(handler=cmd_encode)

    decode = subparsers.add_parser("decode", help="Decode a container into contour text")
    decode.add_argument("input")
    decode.add_argument("--model", required=True)
    decode.add_argument("-o", "--output", help="Contour file to write (default: stdout)")
    decode.set_defaults(handler=cmd_decode)

    sweep = subparsers.add_parser("rd-sweep", help="Rate-distortion sweep over lambda or d_max")
    sweep.add_argument("inputs", nargs="+", help="Contour/PBM files or directories")
    sweep.add_argument("--model", required=True)
    sweep.add_argument("--mode", choices=[m.value for m in ApproximationMode])
    sweep.add_argument("--lambda", dest="lambda_", type=_float_list, help="Comma-separated lambda grid (ssdd)")
    sweep.add_argument("--dmax", type=_float_list, help="d_max grid (madd) or region radius (ssdd)")
    sweep.add_argument("--history", choices=[h.value for h in HistoryMode])
    sweep.add_argument("--reject-self-intersecting", action="store_true")
    sweep.add_argument("--csv", help="CSV file to write (default: stdout)")
    sweep.set_defaults(handler=cmd_rd_sweep)

    stats = subparsers.add_parser("stats", help="Describe a trained model")
    stats.add_argument("model")
    stats.add_argument("--dump", help="Binary count-trie dump written by train --stats")
    stats.add_argument("--text", help="Write the dump as text to this file")
    stats.set_defaults(handler=cmd_stats)

    synth = subparsers.add_parser("synth", help="Generate seeded synthetic corpora or masks")
    synth.add_argument("kind", choices=["markov", "natural", "masks"])
    synth.add_argument("--out-dir", required=True)
    synth.add_argument("--seed", type=int, default=DefaultValues.DEFAULT_SEED)
    synth.add_argument("--count", type=_positive_int, default=10)
    synth.add_argument("--length", type=_positive_int, default=1000)
    synth.add_argument("--size", type=_positive_int, default=64, help="Mask side length")
    synth.set_defaults(handler=cmd_synth)

    serve = subparsers.add_parser("serve", help="Run the HTTP codec service")
    serve.add_argument("--model", help="Model file (default: configuration or CONTOUR_CODEC_MODEL)")
    serve.add_argument("--host", default="0.0.0.0")
    serve.add_argument("--port", type=int)
    serve.set_defaults(handler=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = ConfigLoader(args.config, create_if_missing=False).load()
    except ConfigurationError as e:
        sys.stderr.write(f"error: {e}\n")
        return ExitCode.INVALID_INPUT
    setup_logging(config.environment, args.log_level, stream=sys.stderr)
    if args.threads:
        config.threads = args.threads

    handler: Callable[[argparse.Namespace, AppConfig], int] = args.handler
    try:
        return int(handler(args, config))
    except CommandError as e:
        logger.error(str(e))
        return int(e.exit_code)
    except INVALID_INPUT_ERRORS as e:
        logger.error(f"{args.command}: {e}")
        return int(ExitCode.INVALID_INPUT)
    except Exception as e:
        logger.exception(f"{args.command} failed: {e}")
        return int(ExitCode.FAILURE)

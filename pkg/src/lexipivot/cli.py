"""Command-line front end.

    lexipivot <gen-corpus|train|extract|induce|eval|pipeline>
              --config FILE [--seed N] [--out DIR] [--threads N] ...

Exit codes: 0 success, 2 config error, 3 IO/format error, 4 numeric or
empty-result error. Errors print one line to stderr prefixed with
"lexipivot-error:". LEXIPIVOT_LOG=error|warn|info|debug sets verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import RunConfig, load_config
from .errors import LexipivotError
from . import pipeline

log = logging.getLogger("lexipivot")

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("LEXIPIVOT_LOG", "warn").lower(),
                            logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _common_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, default=None,
                     help="JSON config file (defaults apply when omitted)")
    sub.add_argument("--seed", type=int, default=None, help="override config seed")
    sub.add_argument("--out", type=Path, default=None, help="override output directory")
    sub.add_argument("--threads", type=int, default=None,
                     help="worker threads for read-only stages (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexipivot",
        description="Bilingual lexicon induction from mono-lingual caption corpora.")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen-corpus", help="generate a synthetic bilingual corpus")
    _common_args(gen)

    tr = commands.add_parser("train", help="train the caption model")
    _common_args(tr)
    tr.add_argument("--corpus", type=Path, required=True, help="corpus directory")
    group = tr.add_mutually_exclusive_group()
    group.add_argument("--mono", metavar="LANG", default=None,
                       help="train on a single language")
    group.add_argument("--multi", action="store_true",
                       help="train on all corpus languages (default)")

    ex = commands.add_parser("extract", help="extract word feature tables")
    _common_args(ex)
    ex.add_argument("--checkpoint", type=Path, required=True,
                    help="checkpoint prefix (without extension)")
    ex.add_argument("--corpus", type=Path, required=True)
    ex.add_argument("--method", choices=("probe", "attention"), default=None,
                    help="override extraction method")

    ind = commands.add_parser("induce", help="rank translations and evaluate")
    _common_args(ind)
    ind.add_argument("--tables", type=Path, required=True,
                     help="directory with .lxwf feature tables")
    ind.add_argument("--lexicon", type=Path, required=True)
    ind.add_argument("--methods", nargs="+", default=None,
                     help="subset of scoring methods")

    ev = commands.add_parser("eval", help="re-score existing rankings")
    _common_args(ev)
    ev.add_argument("--rankings", type=Path, required=True)
    ev.add_argument("--lexicon", type=Path, required=True)

    pipe = commands.add_parser("pipeline", help="run all stages into one directory")
    _common_args(pipe)
    return parser


def _resolve_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if args.config is None:
        config.validate()
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out_dir = str(args.out)
    if args.threads is not None:
        config.threads = args.threads
        config.validate()
    if getattr(args, "method", None):
        config.extraction.method = args.method
    if getattr(args, "methods", None):
        config.induction.methods = tuple(args.methods)
        config.induction.validate()
    return config


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve_config(args)
        out = Path(config.out_dir)
        if args.command == "gen-corpus":
            pipeline.stage_gen_corpus(config, out)
        elif args.command == "train":
            pipeline.stage_train(config, out, args.corpus, mono=args.mono)
        elif args.command == "extract":
            pipeline.stage_extract(config, out, args.checkpoint, args.corpus)
        elif args.command == "induce":
            pipeline.stage_induce(config, out, args.tables, args.lexicon)
        elif args.command == "eval":
            pipeline.stage_eval(config, out, args.rankings, args.lexicon)
        elif args.command == "pipeline":
            pipeline.run_pipeline(config, out)
        return 0
    except LexipivotError as exc:
        print(f"lexipivot-error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"lexipivot-error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

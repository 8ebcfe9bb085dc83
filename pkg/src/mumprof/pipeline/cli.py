"""Command line entry point: ``mumprof <command> --config run.yaml``.

Every stage command runs the pipeline up to and including that stage,
reusing up-to-date artifacts from earlier runs. Exit codes: 0 success,
2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, MumError
from .config import load_config
from .stages import Pipeline

COMMANDS = {
    "tokenize": "normalize the corpus into tokens",
    "embed": "compose tweet vectors from the embedding table",
    "scan-k": "heterogeneity elbow scan over topics.k_list",
    "fit-gmm": "fit the topic mixture and write responsibilities",
    "profile": "aggregate responsibilities into user profiles",
    "baseline": "hashtag labels, tf-idf classifier and baseline profiles",
    "cluster-users": "cluster user profiles",
    "evaluate": "cohort purity and keyword probe",
    "run": "all stages plus the report bundle",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML config file")
    common.add_argument("--seed", type=int, help="use this single seed instead of the configured seed lists")
    common.add_argument("--out", help="output directory (overrides paths.output)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="mumprof", description="Multi-topic user profiles from tweets.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_)
    fx = sub.add_parser("make-fixture", help="write a synthetic corpus, embeddings and config")
    fx.add_argument("directory")
    fx.add_argument("--seed", type=int, default=0)
    fx.add_argument("--background", type=int, default=360)
    fx.add_argument("--cohort", type=int, default=39)
    fx.add_argument("--dim", type=int, default=50)
    fx.add_argument("--min-tweets", type=int, default=300)
    fx.add_argument("--max-tweets", type=int, default=700)
    fx.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _make_fixture(args) -> int:
    from ..synthetic import topic_corpus, write_fixture

    synth = topic_corpus(n_background=args.background, n_cohort=args.cohort, dim=args.dim,
                         tweets_per_user=(args.min_tweets, args.max_tweets), seed=args.seed)
    path = write_fixture(args.directory, synth)
    print(f"wrote {len(synth.records)} tweets; config at {path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "make-fixture":
            return _make_fixture(args)
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.out:
            cfg = dataclasses.replace(cfg, output=Path(args.out)).validate()
        pipe = Pipeline(cfg)
        target = args.command
        if target == "baseline" and cfg.label_map is None:
            raise ConfigError("the baseline command needs paths.label_map")
        manifest = pipe.run(target)
        ran = ", ".join(pipe.executed) or "nothing (all up to date)"
        print(f"ran: {ran}")
        print(f"manifest: {pipe.manifest_path} ({len(manifest)} artifacts)")
        return 0
    except MumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

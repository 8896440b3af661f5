"""Command-line entry point: gen / mix / eval / viz.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import AffordGenError
from .pipeline import PipelineConfig, cmd_eval, cmd_gen, cmd_mix, cmd_viz

log = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="affordgen", description=__doc__)
    parser.add_argument("--config", help="pipeline config JSON", default=None)
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--workers", type=int, default=None, help="scene-level worker count")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("gen", help="generate scenes, images, and labels")
    sub.add_parser("mix", help="assemble the instruction-tuning mix")

    p_eval = sub.add_parser("eval", help="score predictions against a benchmark")
    p_eval.add_argument("--benchmark", required=True, help="benchmark directory")
    p_eval.add_argument("--predictions", required=True, help="predictions JSONL")
    p_eval.add_argument("--runs", type=int, default=3)

    p_viz = sub.add_parser("viz", help="render a diagnostic overlay for one record")
    p_viz.add_argument("--dataset", required=True, help="dataset JSONL")
    p_viz.add_argument("--index", type=int, required=True)
    p_viz.add_argument("--pred", default=None, help="prediction text to overlay")

    return parser


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        config.gen.seed = args.seed
        config.mix.shuffle_seed = args.seed
    if args.workers is not None:
        config.workers = args.workers
    if args.out is not None:
        config.out_dir = args.out
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "gen":
            config = _load_config(args)
            manifest = cmd_gen(config)
            print(json.dumps(manifest["totals"], indent=1, sort_keys=True))
        elif args.command == "mix":
            config = _load_config(args)
            manifest = cmd_mix(config)
            print(json.dumps(manifest, indent=1, sort_keys=True))
        elif args.command == "eval":
            out_dir = args.out or "eval_out"
            report = cmd_eval(args.benchmark, args.predictions, args.runs, out_dir)
            print(report.table())
        elif args.command == "viz":
            out_dir = args.out or "viz_out"
            path = cmd_viz(args.dataset, args.index, out_dir, args.pred)
            print(str(path))
    except (AffordGenError, FileNotFoundError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

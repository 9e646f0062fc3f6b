"""Command-line entry point: ``revtrust {simulate,detect,inject,evaluate}``.

Exit codes: 0 success, 1 usage or config error, 2 I/O error, 3 data
integrity error (malformed dataset, missing labels).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .domain import DatasetError, load_dataset, save_dataset
from .engine import CoverageError, SolverConfig, dumps_scores, load_scores, solve
from .metrics import MissingLabelsError, detect, evaluate, format_table, report_json
from .presets import PRESETS, preset
from .simulator import AttackScript, ConfigError, TargetNotFoundError, inject_attacker, load_config, run_scenario

log = logging.getLogger("revtrust")

SEED_ENV = "REVTRUST_SEED"

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INTEGRITY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_path, argv, outputs, seed=None, config_hash=None, started=None, inputs=()):
    manifest = {
        "tool": "revtrust",
        "version": __version__,
        "command": ["revtrust", *argv],
        "seed": seed,
        "config_hash": config_hash,
        "inputs": {str(p): _file_digest(p) for p in inputs},
        "outputs": {str(p): _file_digest(p) for p in outputs},
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _now():
    return datetime.now(timezone.utc).isoformat()


def _solver_config(args) -> SolverConfig:
    try:
        return SolverConfig(tolerance=args.tolerance, max_iterations=args.max_iters, initial_value=args.init)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# commands


def cmd_simulate(args, argv) -> int:
    started = _now()
    if args.dump_preset:
        cfg = preset(args.dump_preset, args.seed if args.seed is not None else 0)
        text = cfg.dumps()
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if bool(args.preset) == bool(args.config):
        raise UsageError("give exactly one of --preset or -c/--config")
    if not args.output:
        raise UsageError("-o/--output is required")
    seed = args.seed if args.seed is not None else _default_seed()
    if args.preset:
        cfg = preset(args.preset, seed if seed is not None else 0)
    else:
        cfg = load_config(args.config)
        if seed is not None:
            cfg = replace(cfg, seed=seed)
    d = run_scenario(cfg)
    save_dataset(d, args.output)
    write_manifest(args.output, argv, [args.output], seed=cfg.seed, config_hash=cfg.digest(), started=started)
    log.info("wrote %d reviews to %s", len(d), args.output)
    return EXIT_OK


def cmd_detect(args, argv) -> int:
    started = _now()
    cfg = _solver_config(args)
    d = load_dataset(args.input)
    result = solve(d, cfg)
    if not result.converged:
        log.warning(
            "warning: not converged after %d iterations (final delta %.3g > tolerance %.3g)",
            result.iterations,
            result.final_delta,
            cfg.tolerance,
        )
    fmt = "csv" if Path(args.output).suffix.lower() == ".csv" else "jsonl"
    Path(args.output).write_text(dumps_scores(result, cfg, fmt), encoding="utf-8")
    write_manifest(args.output, argv, [args.output], started=started, inputs=[args.input])
    return EXIT_OK


def cmd_inject(args, argv) -> int:
    started = _now()
    seed = args.seed if args.seed is not None else _default_seed()
    targets = tuple(t.strip() for t in args.targets.split(",") if t.strip())
    try:
        script = AttackScript(
            kind=args.kind,
            target_products=targets,
            attack_score=args.score,
            honest_elsewhere=args.honest_elsewhere,
            block_length=args.block_length,
            honest_score=args.honest_score,
        )
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    if args.n < 0:
        raise UsageError("-n must be non-negative")
    d = load_dataset(args.input)
    rng = np.random.default_rng(seed if seed is not None else 0)
    try:
        out = inject_attacker(d, script, args.n, rng, attacker_id=args.attacker_id)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    save_dataset(out, args.output)
    write_manifest(args.output, argv, [args.output], seed=seed, started=started, inputs=[args.input])
    return EXIT_OK


def cmd_evaluate(args, argv) -> int:
    started = _now()
    cfg = _solver_config(args)
    d = load_dataset(args.input)
    state, _ = load_scores(args.scores)
    report = evaluate(d, state, cfg)
    detection = detect(d, state, args.threshold) if args.threshold is not None else None
    table = format_table(report, detection, title=f"Evaluation of {args.input}")
    out = Path(args.output)
    table_path = out.with_suffix(".txt")
    out.write_text(report_json(report, detection), encoding="utf-8")
    table_path.write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    write_manifest(out, argv, [out, table_path], started=started, inputs=[args.input, args.scores])
    return EXIT_OK


# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="revtrust", description="Iterative trust scoring for labeled review datasets.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="generate a labeled review dataset from a scenario")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("-c", "--config", help="scenario config (JSON)")
    s.add_argument("--seed", type=int, help=f"override the scenario seed (default: ${SEED_ENV} or the config's seed)")
    s.add_argument("-o", "--output", help="dataset file (.jsonl or .csv)")
    s.add_argument("--dump-preset", choices=sorted(PRESETS), help="write the preset's config JSON instead of simulating")
    s.set_defaults(func=cmd_simulate)

    def solver_flags(q):
        q.add_argument("--tolerance", type=float, default=1e-6)
        q.add_argument("--max-iters", type=int, default=1000)
        q.add_argument("--init", type=float, default=0.5, help="uniform initial score")

    s = sub.add_parser("detect", help="compute trust, honesty and reliability scores")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("-o", "--output", required=True, help="score export (.jsonl or .csv)")
    solver_flags(s)
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("inject", help="append a scripted attacker to a dataset")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--kind", choices=("simple", "over_product", "over_time"), default="over_product")
    s.add_argument("--targets", required=True, help="comma-separated product ids")
    s.add_argument("--score", type=float, required=True, help="attack score on the 0-5 scale")
    s.add_argument("-n", type=int, default=20, help="number of reviews the attacker writes")
    s.add_argument("--attacker-id")
    s.add_argument("--no-honest-elsewhere", dest="honest_elsewhere", action="store_false")
    s.add_argument("--block-length", type=int)
    s.add_argument("--honest-score", type=float)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_inject)

    s = sub.add_parser("evaluate", help="summarise scores against ground-truth labels")
    s.add_argument("-i", "--input", required=True, help="labeled dataset")
    s.add_argument("-s", "--scores", required=True, help="score export from `detect`")
    s.add_argument("-o", "--output", required=True, help="JSON report; a .txt table is written alongside")
    s.add_argument("--threshold", type=float, help="also report precision/recall at this threshold")
    solver_flags(s)
    s.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    try:
        return args.func(args, argv)
    except (UsageError, ConfigError, TargetNotFoundError) as exc:
        print(f"revtrust {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, MissingLabelsError, CoverageError) as exc:
        print(f"revtrust {args.command}: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except OSError as exc:
        print(f"revtrust {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # unknown file suffix and similar argument problems
        print(f"revtrust {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``mpnr-lab run`` and ``mpnr-lab verify``."""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import ConfigError, load_config
from .errors import MpnrError, NumericalError
from .experiments import Step, render_csv, run_experiment

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

WORKERS_ENV = "MPNR_LAB_WORKERS"


def resolve_workers(cli_value: Optional[int]) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env is not None and env.strip():
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    else:
        value = 1 if cli_value is None else cli_value
    if value < 1:
        raise ConfigError(f"worker count must be >= 1, got {value}")
    return value


@contextmanager
def worker_map(workers: int):
    """Order-preserving map over a bounded process pool (plain ``map`` for one worker)."""
    if workers <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield pool.map


def _err(msg: str) -> None:
    print(f"mpnr-lab: {msg}", file=sys.stderr)


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        workers = resolve_workers(args.workers)
    except ConfigError as exc:
        _err(f"config error in {args.config}: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        _err(f"cannot read {args.config}: {exc.strerror}")
        return EXIT_CONFIG

    name = cfg.get("output", f"{cfg.experiment}.csv")
    out_path = Path(args.out) / name if args.out else Path(name)
    try:
        with worker_map(workers) as map_fn:
            table = run_experiment(cfg, map_fn)
    except (NumericalError, ArithmeticError) as exc:
        _err(f"numerical failure during {Step.current}: {type(exc).__name__}: {exc}")
        return EXIT_NUMERICAL
    except MpnrError as exc:
        _err(f"config error in {args.config}: {exc}")
        return EXIT_CONFIG

    manifest = f"mpnr-lab {__version__} experiment={cfg.experiment} config_sha256={cfg.sha256}"
    try:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(render_csv(table, manifest))
    except OSError as exc:
        _err(f"cannot write {out_path}: {exc.strerror}")
        return EXIT_FAIL
    print(f"wrote {len(table.rows)} rows to {out_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import CRITERIA

    chosen = sorted(CRITERIA) if not args.only else sorted(set(args.only))
    failed = 0
    for number in chosen:
        if number not in CRITERIA:
            _err(f"no criterion {number}")
            return EXIT_CONFIG
        try:
            result = CRITERIA[number]()
            line = result.line()
            failed += not result.passed
        except Exception as exc:  # report and continue with the rest
            line = f"FAIL [{number:2d}] raised {type(exc).__name__}: {exc}"
            failed += 1
        print(line, flush=True)
    print(f"{len(chosen) - failed}/{len(chosen)} criteria passed")
    return EXIT_OK if failed == 0 else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpnr-lab", description="Multiplexed photon-number-resolving detector simulations.")
    parser.add_argument("--version", action="version", version=f"mpnr-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment described by a TOML config")
    run.add_argument("config", help="path to the TOML configuration")
    run.add_argument("--out", metavar="DIR", help="directory for the CSV output")
    run.add_argument("--workers", type=int, metavar="N", help=f"worker processes (overridden by {WORKERS_ENV})")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run the built-in regression suite")
    ver.add_argument("--only", type=int, nargs="+", metavar="N", help="run only these criteria")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

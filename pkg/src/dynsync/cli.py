"""Command-line batch runner.

Exit status: 0 success, 2 invalid configuration, 3 dense-dimension cap
exceeded, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import Experiment, validate_config
from .exceptions import ConfigError, DenseCapError, NumericalError, TrackingAmbiguityError
from .presets import PRESETS, get_preset, list_presets
from .runner import run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAP = 3
EXIT_NUMERICAL = 4

_GNUPLOT_STUB = """# gnuplot stub: plots every column of series.csv against t
set datafile separator ','
set key autotitle columnhead
set xlabel 't'
plot for [i=2:*] 'series.csv' using 1:i with lines
"""


def _load_config(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _execute(cfg: dict, out: str | None, seed: int | None, threads: int | None, plot_stub: bool) -> int:
    exp = Experiment.from_dict(cfg, seed=seed, threads=threads)
    out_dir = Path(out or exp.config.get("output_dir") or f"dynsync_out/{exp.config.get('name', 'run')}")
    summary = run_experiment(exp, out_dir)
    if plot_stub and (out_dir / "series.csv").exists():
        (out_dir / "plot.gp").write_text(_GNUPLOT_STUB)
    print(f"wrote {out_dir}")
    if summary:
        print(json.dumps(summary, sort_keys=True, default=str)[:2000])
    return EXIT_OK


def _cmd_run(args) -> int:
    return _execute(_load_config(args.config), args.out, args.seed, args.threads, args.plot_stub)


def _cmd_preset(args) -> int:
    return _execute(get_preset(args.name), args.out, args.seed, args.threads, args.plot_stub)


def _cmd_list(args) -> int:
    rows = list_presets()
    width = max(len(r[0]) for r in rows)
    for name, desc, sub in rows:
        print(f"{name:<{width}}  {desc}")
        print(f"{'':<{width}}  [{sub}]")
    return EXIT_OK


def _cmd_validate(args) -> int:
    validate_config(_load_config(args.config))
    print(f"{args.config}: valid")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dynsync", description="Open-system synchronisation experiments")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def add_run_options(sp):
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--threads", type=int, help="worker cap for trajectories and BLAS")
        sp.add_argument("--plot-stub", action="store_true", help="also write a gnuplot script")

    sp = sub.add_parser("run", help="run a JSON experiment config")
    sp.add_argument("config")
    add_run_options(sp)
    sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("preset", help="run a named preset")
    sp.add_argument("name", choices=sorted(PRESETS))
    add_run_options(sp)
    sp.set_defaults(func=_cmd_preset)

    sp = sub.add_parser("list-presets", help="list available presets")
    sp.set_defaults(func=_cmd_list)

    sp = sub.add_parser("validate", help="check a config against the schema")
    sp.add_argument("config")
    sp.set_defaults(func=_cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"dynsync: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DenseCapError as exc:
        print(f"dynsync: {exc} (raise DYNSYNC_DENSE_CAP to allow)", file=sys.stderr)
        return EXIT_CAP
    except (NumericalError, TrackingAmbiguityError) as exc:
        print(f"dynsync: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry points: ``python -m srbandits {run,compare,surface,init-configs}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigError, NumericalError, PlacementError
from .harness import compare, emit_default_configs, run_experiment, surface_from_config


def parse_seeds(text: str) -> list[int]:
    """``"1..10"``, ``"3"`` or ``"1,4,7"``; ranges are inclusive."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ConfigError(f"empty seed range {part!r}", "seeds")
            seeds.extend(range(lo, hi + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ConfigError("no seeds given", "seeds")
    return seeds


def _run(args) -> int:
    cfg = load_config(args.config)
    result = run_experiment(cfg, args.seed, args.out, args.horizon)
    for k, v in result.summary.items():
        print(f"{k} = {v:.6g}" if isinstance(v, float) else f"{k} = {v}")
    return 0


def _compare(args) -> int:
    configs = [load_config(p) for p in args.configs.split(",") if p.strip()]
    comp = compare(configs, parse_seeds(args.seeds), args.out, args.horizon)
    print(comp.to_text(), end="")
    return 0


def _surface(args) -> int:
    surf = surface_from_config(load_config(args.config))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(surf.to_csv())
    tx, cs = surf.argmax()
    print(f"argmax p_tx_dbm = {tx:g}, t_cs_dbm = {cs:g}")
    return 0


def _init_configs(args) -> int:
    for p in emit_default_configs(args.out):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srbandits", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one seeded experiment and write its KPI CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--horizon", type=int, default=None, help="override the configured horizon")
    p.set_defaults(func=_run)

    p = sub.add_parser("compare", help="median KPIs of several configs over seeds")
    p.add_argument("--configs", required=True, help="comma-separated config files")
    p.add_argument("--seeds", required=True, help="e.g. 1..10 or 1,2,5")
    p.add_argument("--out", required=True)
    p.add_argument("--horizon", type=int, default=None)
    p.set_defaults(func=_compare)

    p = sub.add_parser("surface", help="export the worst-case capacity surface as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_surface)

    p = sub.add_parser("init-configs", help="write the default study configs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_init_configs)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PlacementError, NumericalError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

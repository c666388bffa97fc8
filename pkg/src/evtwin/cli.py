"""Command-line driver: ``evtwin <subcommand> -c config.yaml [-o outdir]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import runner
from .config import ConfigError, RunConfig, load_config
from .io import DataError
from .scenarios import ALL_SCENARIOS, Scenario

SCENARIO_CHOICES = [s.value for s in ALL_SCENARIOS] + ["all"]


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evtwin", description="Residential EV, PV and battery town simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("-c", "--config", required=True, type=Path, help="YAML run configuration")
        sp.add_argument("-o", "--out", type=Path, help="output directory (overrides the config)")
        return sp

    add("gen-town", "write a synthetic town as data files plus a config using them")
    add("synth", "synthesize households and vehicles")
    add("tours", "build vehicle tours and mobility validation metrics")
    sim = add("simulate", "run one scenario or all of them")
    sim.add_argument("--scenario", required=True, choices=SCENARIO_CHOICES, metavar="ID",
                     help=f"one of {', '.join(SCENARIO_CHOICES)}")
    add("report", "merge scenario outputs into one report")
    return p


def _out_dir(args, cfg: RunConfig) -> Path:
    return args.out if args.out is not None else cfg.output_dir


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        # gen-town only needs the synthetic-town section, so data paths are not checked
        cfg = load_config(args.config, check_paths=args.command != "gen-town")
        out = _out_dir(args, cfg)
        if args.command == "gen-town":
            path = runner.write_bundle(cfg, out)
            print(f"wrote synthetic town to {out} (config: {path.name})")
        elif args.command == "synth":
            pop = runner.write_population(cfg, out)
            s = pop.summary()
            print(f"{s['households']} households, {s['vehicles']} vehicles in {s['buildings']} buildings")
        elif args.command == "tours":
            mv = runner.write_tours(cfg, out)
            print(f"{mv.vehicle_count} vehicles, mean usage days {mv.mean_usage_days:.2f}")
        elif args.command == "simulate":
            scenarios = list(ALL_SCENARIOS) if args.scenario == "all" else [Scenario(args.scenario)]
            reports = runner.simulate(cfg, scenarios, out)
            for s, r in reports.items():
                print(f"{s.value}: grid import {r.grid_import_gwh * 1000:.1f} MWh")
        elif args.command == "report":
            rep = runner.merge_reports(cfg, out)
            print(f"merged {len(rep['scenarios'])} scenarios into {out / 'report.json'}")
    except (ConfigError, DataError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"evtwin: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

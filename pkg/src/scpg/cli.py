"""Command-line entry point: ``scpg run <config> ...`` and ``scpg export <config> ...``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import config_from_dict, config_to_yaml, dump_config, load_config
from .errors import ConfigError, DivergenceError

log = logging.getLogger("scpg")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scpg", description="Spiking CPG swimming simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario described by a YAML config")
    run.add_argument("config", help="path to the scenario YAML file")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    run.add_argument("--backend", choices=("ideal", "spiking"), default=None, help="override the CPG backend")
    run.add_argument("--print-config", action="store_true",
                     help="print the fully resolved config (all defaults) and exit")

    exp = sub.add_parser("export", help="build the spiking network and write it as a text file")
    exp.add_argument("config", help="path to the scenario YAML file")
    exp.add_argument("--out", required=True, help="destination text file")
    exp.add_argument("--seed", type=int, default=None)
    return parser


def _resolve(args):
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
        overrides["network"] = {"seed": args.seed}
    if getattr(args, "backend", None):
        overrides["backend"] = args.backend
    if getattr(args, "out", None) and args.command == "run":
        overrides["output_dir"] = args.out
    if overrides:
        data = dump_config(cfg)
        for k, v in overrides.items():
            data[k] = {**data[k], **v} if isinstance(v, dict) else v
        cfg = config_from_dict(data)
    return cfg


def _cmd_run(args) -> int:
    from .scenarios import run_scenario

    cfg = _resolve(args)
    if args.print_config:
        sys.stdout.write(config_to_yaml(cfg))
        return EXIT_OK
    report = run_scenario(cfg)
    log.info("build %.2f s, stepping %.3f s per simulated second", report.build_time,
             report.step_time_per_sim_second)
    print(f"{cfg.scenario}: wrote {len(report.files)} files to {cfg.output_dir}")
    return EXIT_OK


def _cmd_export(args) -> int:
    from .network import build_scpg
    from .nef import write_network

    cfg = _resolve(args)
    net = build_scpg(cfg.network)
    write_network(net.network, args.out)
    print(f"wrote {len(net.network.populations)} populations to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_export(args)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        where = exc.module or "unknown module"
        when = "unknown time" if exc.t is None else f"t = {exc.t:.3f} s"
        print(f"error: simulation diverged in {where} at {when}: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())

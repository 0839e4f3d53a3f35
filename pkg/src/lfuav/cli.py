"""Command-line entry point: ``lfuav {validate,outage-map,train,compare,rerun}``.

Exit codes: 0 success, 1 acceptance violation, 2 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML config or a run manifest (defaults if omitted)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", type=Path, help="output directory (default: <output_dir>/<command>)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lfuav", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="closed-form outage against Monte Carlo at random positions")
    _common(p)
    p = sub.add_parser("outage-map", help="summed outage over a position lattice")
    _common(p)
    p.add_argument("--grid-n", type=int, help="lattice points per axis")
    p = sub.add_parser("train", help="train one agent and write its curves and trajectory")
    _common(p)
    p.add_argument("--agent", choices=("sac", "ddpg"), default="sac")
    p = sub.add_parser("compare", help="SAC against DDPG over matched seeds and both D pairs")
    _common(p)
    p = sub.add_parser("rerun", help="re-execute the run recorded in a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, required=True)
    return parser


def _fmt(x: float) -> str:
    return f"{x:.6g}" if math.isfinite(x) else str(x)


def cmd_validate(cfg: ExperimentConfig, out: Path) -> int:
    from .experiments import run_validate

    rep = run_validate(cfg, out)
    print(f"{'case':>4} {'user':>4} {'n1':>9} {'n2':>9} {'D':>4} {'closed_form':>12} {'monte_carlo':>12} "
          f"{'std_err':>10} {'z':>7}")
    for r in rep.rows:
        print(f"{r.case:>4} {r.user:>4} {r.n1:>9.1f} {r.n2:>9.1f} {r.d:>4.2f} {_fmt(r.closed_form):>12} "
              f"{_fmt(r.monte_carlo):>12} {_fmt(r.std_error):>10} {_fmt(r.z):>7}"
              + ("" if r.status == "ok" else f"  {r.status}"))
    n = len(rep.cases())
    print(f"{rep.cases_within}/{n} geometries within {rep.z_pass:g} standard errors")
    if rep.violations:
        print(f"{len(rep.violations)} rows beyond |z| = {rep.z_fail:g} or failed", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_outage_map(cfg: ExperimentConfig, out: Path, grid_n: int | None) -> int:
    from .experiments import run_outage_map

    omap = run_outage_map(cfg, out, grid_n)
    n1, n2, best = omap.argmin()
    print(f"argmin cell ({n1:g}, {n2:g}) outage sum {best:.6g}")
    return EXIT_OK


def cmd_train(cfg: ExperimentConfig, out: Path, agent: str) -> int:
    from .experiments import run_train

    res = run_train(cfg, out, agent)
    n1, n2 = res.final_position
    print(f"{agent}: final position ({n1:.1f}, {n2:.1f}) outage sum {res.final_outage:.6g}; "
          f"reward mean first 50 {res.first_mean():.4g}, last 50 {res.last_mean():.4g}")
    return EXIT_OK


def cmd_compare(cfg: ExperimentConfig, out: Path) -> int:
    from .experiments import run_compare

    rep = run_compare(cfg, out)
    print(f"{'agent':>5} {'D':>10} {'mean final outage':>18} {'grid optimum':>13} {'ep to 10%':>9} "
          f"{'last50 var':>11}")
    for d, (_, _, best) in rep.optimum.items():
        for agent in dict.fromkeys(r.agent for r in rep.runs):
            sel = rep.select(agent, d)
            ep = sum(r.episodes_to_within() for r in sel) / len(sel)
            var = sum(r.last_var() for r in sel) / len(sel)
            print(f"{agent:>5} {str(list(d)):>10} {rep.mean_final_outage(agent, d):>18.6g} {best:>13.6g} "
                  f"{ep:>9.1f} {var:>11.4g}")
    for flag in rep.flags:
        print(f"WARNING: {flag}")
    return EXIT_OK


def _dispatch(command: str, cfg: ExperimentConfig, out: Path, args: dict) -> int:
    if command == "validate":
        return cmd_validate(cfg, out)
    if command == "outage-map":
        return cmd_outage_map(cfg, out, args.get("grid_n"))
    if command == "train":
        return cmd_train(cfg, out, args.get("agent", "sac"))
    if command == "compare":
        return cmd_compare(cfg, out)
    raise ConfigError(f"unknown command {command!r}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        if args.command == "rerun":
            from .experiments import RunManifest

            try:
                man = RunManifest.read(args.manifest)
            except (OSError, ValueError, TypeError) as exc:
                raise ConfigError(f"cannot read manifest: {exc}") from exc
            return _dispatch(man.command, ExperimentConfig.from_dict(man.config), args.out, man.args)
        cfg = ExperimentConfig.load(args.config)
        if args.seed is not None:
            cfg = cfg.with_overrides(seed=args.seed)
        out = args.out or Path(cfg.raw["output_dir"]) / args.command
        extra = {"grid_n": args.grid_n} if args.command == "outage-map" else {}
        if args.command == "train":
            extra["agent"] = args.agent
        return _dispatch(args.command, cfg, out, extra)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

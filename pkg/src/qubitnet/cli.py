"""Command-line interface.

Subcommands: simulate, plan-finite, plan-infinite, density, spectrum, verify.
Exit codes: 0 success, 2 config error, 3 budget refusal, 4 numerical failure,
5 property-check failure (verify mode). Every error path prints a single
machine-parsable line prefixed ERROR[config|budget|numerical].
"""

from __future__ import annotations

import argparse
import sys

from .config import PRESETS, build_config, load_config_file
from .errors import BudgetExceededError, ConfigError, NumericalError
from .runner import run_batch

_FLAG_KEYS = (
    "graph",
    "init",
    "seed",
    "trials",
    "horizon",
    "eps",
    "out",
    "workers",
    "save_trajectories",
    "k",
    "t",
    "power",
    "budget",
    "vi_tol",
    "max_iters",
)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key=value config file ('#' comments)")
    sub.add_argument("--preset", choices=sorted(PRESETS), help="built-in experiment preset")
    sub.add_argument("--graph", help="edge-list file or complete:N | ring:N | path:N")
    sub.add_argument("--init", help="comma list of angles in units of pi, e.g. 0,0,0.5")
    sub.add_argument("--seed", type=int, help="64-bit master seed (default 1)")
    sub.add_argument("--trials", type=int, help="number of Monte Carlo trials")
    sub.add_argument("--horizon", type=int, help="maximum number of slots")
    sub.add_argument("--eps", type=float, help="consensus fidelity tolerance (default 1e-9)")
    sub.add_argument("--out", help="output directory (default ./out)")
    sub.add_argument("--workers", type=int, help="parallel trial workers (default 1)")
    sub.add_argument(
        "--save-trajectories",
        dest="save_trajectories",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="write one trajectory CSV per run (simulate mode)",
    )


def _add_planner(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--k", type=int, help="number of measurement grid angles")
    sub.add_argument("--t", type=int, help="planning horizon (plan-finite)")
    sub.add_argument("--power", type=int, choices=(1, 2), help="terminal reward exponent")
    sub.add_argument("--budget", type=int, help="operation budget (default 1e9)")
    sub.add_argument("--vi-tol", dest="vi_tol", type=float, help="value-iteration tolerance")
    sub.add_argument("--max-iters", dest="max_iters", type=int, help="value-iteration cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qubitnet",
        description="Simulate and plan measurement-driven agreement on qubit networks.",
    )
    subs = parser.add_subparsers(dest="mode", required=True)
    for mode in ("simulate", "density", "spectrum", "verify"):
        sub = subs.add_parser(mode)
        _add_common(sub)
    for mode in ("plan-finite", "plan-infinite"):
        sub = subs.add_parser(mode)
        _add_common(sub)
        _add_planner(sub)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        flag_values = {k: getattr(args, k, None) for k in _FLAG_KEYS}

        base: dict = {}
        if args.preset:
            preset = dict(PRESETS[args.preset])
            preset_mode = preset.pop("mode")
            if preset_mode != args.mode:
                raise ConfigError(
                    f"preset {args.preset!r} is a {preset_mode} experiment, not {args.mode}"
                )
            base.update(preset)
        if args.config:
            file_values = load_config_file(args.config)
            file_values.pop("mode", None)
            base.update(file_values)

        cfg = build_config(args.mode, base, flag_values)
        result = run_batch(cfg)
    except ConfigError as exc:
        print(f"ERROR[config]: {exc}", file=sys.stderr)
        return 2
    except BudgetExceededError as exc:
        print(f"ERROR[budget]: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"ERROR[numerical]: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"ERROR[config]: {exc}", file=sys.stderr)
        return 2

    for note in result.notes:
        print(f"note: {note}", file=sys.stderr)

    if cfg.mode == "verify":
        failed = 0
        for check in result.check_results:
            status = "PASS" if check.passed else "FAIL"
            print(f"{status}: {check.name} ({check.detail})")
            failed += 0 if check.passed else 1
        if failed:
            print(f"ERROR[property]: {failed} verification check(s) failed", file=sys.stderr)
            return 5
        return 0

    for path in result.files:
        print(f"wrote {path}")
    if "aggregate" in result.summary:
        agg = result.summary["aggregate"]
        print(
            "consensus fraction "
            f"{agg['consensus_fraction']:.4f}, mean time {agg['consensus_time_mean']}"
        )
    elif "initial_value" in result.summary:
        print(f"value at initial state: {result.summary['initial_value']}")
    elif "lambda2" in result.summary:
        print(f"lambda2 = {result.summary['lambda2']}")
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

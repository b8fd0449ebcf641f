"""Command-line interface.

Subcommands: ``simulate`` (one configuration to batch statistics),
``sweep`` (cartesian parameter study), ``oracle`` (three-node closed forms
against the engine's single-shot mode), ``design`` (hardware platform
study over node counts) and ``distill-schedule`` (banded/pumping fidelity
curves).  Values come from an INI config file when given; command-line
flags override file values.  Exit code 0 on success; failures print one
machine-readable JSON line on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

from . import __version__
from .distill import banded_schedule, pumping_closed_form, pumping_limit
from .engine import CCMode, SimParams
from .harness import (
    DEFAULT_BATCHES,
    DEFAULT_RUNS_PER_BATCH,
    FULL_SCALE_BATCHES,
    FULL_SCALE_RUNS_PER_BATCH,
    SweepSpec,
    design_study,
    run_batches,
    sweep,
)
from .oracles import (
    CLOSED_FORMS,
    binomial_sigma,
    oracle_mode_run,
    printed_formula_report,
)
from .policies import DistillOrdering, parse_ordering, parse_policy
from .reporting import write_csv, write_json


def _read_config(path: str | None) -> configparser.ConfigParser:
    config = configparser.ConfigParser()
    if path:
        if not Path(path).exists():
            raise FileNotFoundError(f"config file not found: {path}")
        config.read(path)
    return config


def _config_get(config, section, key, fallback=None):
    if config.has_option(section, key):
        return config.get(section, key)
    return fallback


def _resolve(args, config, section, key, cast, default):
    """CLI flag > config file > default."""
    flag = getattr(args, key.replace("-", "_"), None)
    if flag is not None:
        return flag
    raw = _config_get(config, section, key)
    if raw is not None:
        return cast(raw)
    return default


def _batch_shape(args, config):
    if getattr(args, "full_scale", False):
        return FULL_SCALE_BATCHES, FULL_SCALE_RUNS_PER_BATCH
    batches = _resolve(args, config, "sweep", "batches", int, DEFAULT_BATCHES)
    runs = _resolve(args, config, "sweep", "runs", int, DEFAULT_RUNS_PER_BATCH)
    return batches, runs


def _sim_params(args, config) -> SimParams:
    return SimParams(
        n=_resolve(args, config, "params", "n", int, 7),
        n_ch=_resolve(args, config, "params", "n_ch", int, 1),
        p_l=_resolve(args, config, "params", "p_l", float, 0.5),
        p_sw=_resolve(args, config, "params", "p_sw", float, 0.5),
        m_star=_resolve(args, config, "params", "m_star", int, 12),
        m0=_resolve(args, config, "params", "m0", int, 0),
        cc_mode=CCMode(_resolve(args, config, "cc", "mode", str, "quasi-local")),
        t_cc=_resolve(args, config, "cc", "t_cc", int, 1),
        max_steps=_resolve(args, config, "params", "max_steps", int, 1_000_000),
        seed=_resolve(args, config, "params", "seed", int, 0),
    )


def _emit(rows, args, default_stem: str, kind: str):
    fmt = args.format or "csv"
    out = args.out or f"{default_stem}.{fmt}"
    if fmt == "csv":
        path = write_csv(rows, out)
    else:
        path = write_json(rows, out, kind=kind)
    print(path)
    return rows, Path(out)


def _print_config(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, default=str))


def cmd_simulate(args) -> int:
    config = _read_config(args.config)
    params = _sim_params(args, config)
    policy = parse_policy(_resolve(args, config, "policy", "swap", str, "fn"))
    ordering = parse_ordering(
        _resolve(args, config, "policy", "ordering", str, "none")
    )
    batches, runs = _batch_shape(args, config)
    seed = args.seed if args.seed is not None else params.seed
    if args.print_config:
        resolved = {
            k: (v.value if isinstance(v, CCMode) else v)
            for k, v in params.__dict__.items()
        }
        _print_config({
            "params": resolved, "policy": policy.tag(),
            "ordering": ordering.value, "batches": batches, "runs": runs,
            "seed": seed,
        })
        return 0
    stats = run_batches(
        params, policy, ordering,
        num_batches=batches, runs_per_batch=runs,
        master_seed=seed, workers=args.workers,
    )
    row = {
        "policy": policy.tag(), "ordering": ordering.value,
        "cc_mode": params.cc_mode.value, "n": params.n, "n_ch": params.n_ch,
        "p_l": params.p_l, "p_sw": params.p_sw, "m_star": params.m_star,
        "m0": params.m0, "t_cc": params.t_cc, "seed": seed,
        **stats.to_record(),
    }
    _emit([row], args, "simulate", "simulate")
    return 0


def _sweep_axes(args, config) -> list[tuple[str, list]]:
    axes: list[tuple[str, list]] = []
    if config.has_section("sweep"):
        for key, raw in config.items("sweep"):
            if not key.startswith("axis."):
                continue
            name = key[len("axis."):]
            values = [v.strip() for v in raw.split(",") if v.strip()]
            if name in ("policy", "ordering", "cc_mode"):
                axes.append((name, values))
            elif name in ("n", "n_ch", "m_star", "m0", "t_cc"):
                axes.append((name, [int(v) for v in values]))
            else:
                axes.append((name, [float(v) for v in values]))
    for spec in args.axis or []:
        name, _, raw = spec.partition("=")
        values = [v.strip() for v in raw.split(",") if v.strip()]
        if name in ("policy", "ordering", "cc_mode"):
            axes.append((name, values))
        elif name in ("n", "n_ch", "m_star", "m0", "t_cc"):
            axes.append((name, [int(v) for v in values]))
        else:
            axes.append((name, [float(v) for v in values]))
    if not axes:
        raise ValueError("sweep needs at least one axis (axis.<name> or --axis)")
    return axes


def cmd_sweep(args) -> int:
    config = _read_config(args.config)
    axes = _sweep_axes(args, config)
    params = _sim_params(args, config)
    fixed = {
        "n": params.n, "n_ch": params.n_ch, "p_l": params.p_l,
        "p_sw": params.p_sw, "m_star": params.m_star, "m0": params.m0,
        "cc_mode": params.cc_mode.value, "t_cc": params.t_cc,
        "max_steps": params.max_steps,
        "policy": _resolve(args, config, "policy", "swap", str, "fn"),
        "ordering": _resolve(args, config, "policy", "ordering", str, "none"),
    }
    for name, _ in axes:
        fixed.pop(name, None)
    batches, runs = _batch_shape(args, config)
    seed = args.seed if args.seed is not None else params.seed
    spec = SweepSpec(
        axes=axes, fixed=fixed, seed=seed,
        num_batches=batches, runs_per_batch=runs,
        budget=_resolve(args, config, "sweep", "budget", int, 4096),
        workers=args.workers,
    )
    if args.print_config:
        _print_config({
            "axes": axes, "fixed": fixed, "seed": seed,
            "batches": batches, "runs": runs, "budget": spec.budget,
        })
        return 0
    rows = sweep(spec)
    rows, out = _emit(rows, args, "sweep", "sweep")
    if args.plot:
        from .plots import plot_sweep

        axis = axes[-1][0]
        group = axes[0][0] if len(axes) > 1 else None
        print(plot_sweep(rows, axis, out.with_suffix(".png"), group_by=group))
    return 0


def cmd_oracle(args) -> int:
    ordering_names = (
        [args.ordering] if args.ordering else ["distill-swap", "swap-distill"]
    )
    channels = [args.n_ch] if args.n_ch else [2, 4]
    report = []
    for n_ch in channels:
        for name in ordering_names:
            ordering = parse_ordering(name)
            if (n_ch, ordering) not in CLOSED_FORMS:
                raise ValueError(f"no closed form for n_ch={n_ch}, {name}")
            analytic = CLOSED_FORMS[(n_ch, ordering)](args.m0, args.m_star, args.p_sw)
            empirical = oracle_mode_run(
                n_ch, args.m0, args.m_star, args.p_sw, ordering,
                trials=args.trials, seed=args.seed or 0,
            )
            sigma = binomial_sigma(analytic.success_prob, args.trials)
            entry = {
                "n_ch": n_ch,
                "ordering": name,
                "m0": args.m0,
                "m_star": args.m_star,
                "p_sw": args.p_sw,
                "trials": args.trials,
                "closed_form": analytic.to_dict(),
                "empirical": empirical.to_dict(),
                "binomial_sigma": sigma,
                "abs_deviation": abs(
                    analytic.success_prob - empirical.success_prob
                ),
            }
            if n_ch == 4 and ordering is DistillOrdering.SWAP_DISTILL:
                entry["printed_formula"] = printed_formula_report(
                    args.m0, args.m_star, args.p_sw
                )
            report.append(entry)
    out = args.out or "oracle.json"
    print(write_json(report, out, kind="oracle"))
    return 0


def cmd_design(args) -> int:
    config = _read_config(args.config)
    preset = args.preset or _config_get(config, "hardware", "preset")
    if preset is None:
        raise ValueError("design needs --preset or a [hardware] preset entry")
    batches, runs = _batch_shape(args, config)
    node_lo, _, node_hi = (args.nodes or "2..10").partition("..")
    rows = design_study(
        preset,
        node_range=range(int(node_lo), int(node_hi or node_lo) + 1),
        n_ch=args.n_ch or 5,
        p_sw=args.p_sw if args.p_sw is not None else 1.0,
        num_batches=batches,
        runs_per_batch=runs,
        seed=args.seed or 0,
        t_cc=args.t_cc if args.t_cc is not None else 1,
        workers=args.workers,
        distance_km=args.distance,
    )
    rows, out = _emit(rows, args, "design", "design")
    if args.plot:
        from .plots import plot_design

        print(plot_design(rows, out.with_suffix(".png")))
    return 0


def cmd_distill_schedule(args) -> int:
    rows = []
    if args.mode == "banded":
        schedule = banded_schedule(args.f0, args.n_ch)
        rows.append({"round": 0, "fidelity": args.f0, "cumulative_prob": 1.0})
        for r, (fidelity, cumulative) in enumerate(schedule, start=1):
            rows.append(
                {"round": r, "fidelity": fidelity, "cumulative_prob": cumulative}
            )
    else:
        for r in range(args.rounds + 1):
            rows.append(
                {"round": r, "fidelity": pumping_closed_form(args.f0, r)}
            )
        rows.append({"round": "limit", "fidelity": pumping_limit(args.f0)})
    rows, out = _emit(rows, args, "distill_schedule", "distill-schedule")
    if args.plot:
        from .plots import plot_distill_schedule

        numeric = [r for r in rows if isinstance(r["round"], int)]
        print(plot_distill_schedule(numeric, out.with_suffix(".png")))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmux",
        description="Multiplexed repeater-chain policy simulator",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--out", help="output path")
        p.add_argument("--batches", type=int, dest="batches")
        p.add_argument("--runs", type=int, dest="runs")
        p.add_argument("--full-scale", action="store_true",
                       help="paper-scale 20x1000 batch shape")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--print-config", action="store_true",
                       help="dump the resolved configuration and exit")

    sim = sub.add_parser("simulate", help="run one configuration")
    common(sim)
    sim.add_argument("--n", type=int)
    sim.add_argument("--n-ch", type=int, dest="n_ch")
    sim.add_argument("--p-l", type=float, dest="p_l")
    sim.add_argument("--p-sw", type=float, dest="p_sw")
    sim.add_argument("--m-star", type=int, dest="m_star")
    sim.add_argument("--m0", type=int)
    sim.add_argument("--max-steps", type=int, dest="max_steps")
    sim.add_argument("--policy", dest="swap")
    sim.add_argument("--ordering")
    sim.add_argument("--cc-mode", dest="mode",
                     choices=[m.value for m in CCMode])
    sim.add_argument("--t-cc", type=int, dest="t_cc")
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="cartesian parameter sweep")
    common(sw)
    sw.add_argument("--axis", action="append",
                    help="axis spec, e.g. --axis p_l=0.1,0.2,0.3")
    sw.add_argument("--plot", action="store_true")
    for flag, dest in (("--n", "n"), ("--n-ch", "n_ch"), ("--m-star", "m_star"),
                       ("--m0", "m0"), ("--t-cc", "t_cc"),
                       ("--max-steps", "max_steps")):
        sw.add_argument(flag, type=int, dest=dest)
    sw.add_argument("--p-l", type=float, dest="p_l")
    sw.add_argument("--p-sw", type=float, dest="p_sw")
    sw.add_argument("--policy", dest="swap")
    sw.add_argument("--ordering")
    sw.add_argument("--cc-mode", dest="mode", choices=[m.value for m in CCMode])
    sw.set_defaults(func=cmd_sweep)

    orc = sub.add_parser("oracle", help="three-node closed forms vs engine")
    orc.add_argument("--n-ch", type=int, choices=(2, 4), dest="n_ch")
    orc.add_argument("--ordering", choices=("distill-swap", "swap-distill"))
    orc.add_argument("--m0", type=int, default=2)
    orc.add_argument("--m-star", type=int, default=24, dest="m_star")
    orc.add_argument("--p-sw", type=float, default=0.5, dest="p_sw")
    orc.add_argument("--trials", type=int, default=100_000)
    orc.add_argument("--seed", type=int)
    orc.add_argument("--out")
    orc.set_defaults(func=cmd_oracle)

    des = sub.add_parser("design", help="hardware platform study")
    common(des)
    des.add_argument("--preset")
    des.add_argument("--distance", type=float, default=100.0)
    des.add_argument("--nodes", help="node range, e.g. 2..10")
    des.add_argument("--n-ch", type=int, dest="n_ch")
    des.add_argument("--p-sw", type=float, dest="p_sw")
    des.add_argument("--t-cc", type=int, dest="t_cc")
    des.add_argument("--plot", action="store_true")
    des.set_defaults(func=cmd_design)

    ds = sub.add_parser("distill-schedule", help="banded/pumping fidelity curves")
    ds.add_argument("--mode", choices=("banded", "pumping"), default="banded")
    ds.add_argument("--f0", type=float, required=True)
    ds.add_argument("--n-ch", type=int, default=16, dest="n_ch")
    ds.add_argument("--rounds", type=int, default=20)
    ds.add_argument("--format", choices=("csv", "json"))
    ds.add_argument("--out")
    ds.add_argument("--plot", action="store_true")
    ds.set_defaults(func=cmd_distill_schedule)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single reporting point
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

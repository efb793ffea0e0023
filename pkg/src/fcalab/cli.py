"""Command-line entry point.

Subcommands: simulate, cluster-rate, excitations, qtable, disagree-exact,
genfun, oracle. Flags are long-form only; numeric lists are comma
separated; --config points at a line-oriented `key = value` file whose
settings are overridden by explicit flags. Machine output goes only to
--out files; stdout carries a human-readable summary.

Exit codes: 0 all requested work completed (and all oracle checks passed),
1 oracle mismatch, 2 usage errors.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import constants, oracles
from .harness import (CLUSTER_HEADER, NE_HEADER, ExperimentConfig,
                      cluster_rate_experiment, excitation_experiment,
                      load_config_file, persist)
from .lattice import ColorConfig, Cycle, format_colors
from .rng import substream
from .solver import (DISAGREEMENT_CALIBRATION, FAMILIES, build_qtable,
                     disagreement_exact, genfun_row, matrix_A)

__all__ = ["Invocation", "run", "main"]

_SUBCOMMANDS = ("simulate", "cluster-rate", "excitations", "qtable",
                "disagree-exact", "genfun", "oracle")


@dataclass(frozen=True)
class Invocation:
    subcommand: str
    flags: dict
    config_path: str | None


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fcalab",
        description="kappa-color firefly automaton simulator and exact solver")
    sub = p.add_subparsers(dest="subcommand", metavar="subcommand")

    def common(sp):
        sp.add_argument("--config", default=None,
                        help="key = value settings file (flags override it)")
        sp.add_argument("--out", default=None, help="output CSV path")
        sp.add_argument("--seed", type=int, default=None,
                        help="64-bit master seed (default 0)")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker count (default: logical cores)")

    sp = sub.add_parser("simulate", help="run one trajectory and dump it")
    common(sp)
    sp.add_argument("--kappa", type=int, default=None, help="number of colors (>= 3)")
    sp.add_argument("--rule", choices=("fca", "ghm", "cca"), default=None,
                    help="update rule (default fca)")
    sp.add_argument("--length", type=int, default=None,
                    help="cycle length in sites (default 24)")
    sp.add_argument("--steps", type=int, default=None,
                    help="number of updates (default 10)")
    sp.add_argument("--init", default=None,
                    help="initial colors as a digit string (kappa <= 10); "
                         "random when omitted")
    sp.add_argument("--report", action="store_true",
                    help="print per-step excitation/blink/flip counts")

    sp = sub.add_parser("cluster-rate",
                        help="edge-disagreement frequency on cycles")
    common(sp)
    sp.add_argument("--kappa", type=int, default=None, help="number of colors")
    sp.add_argument("--rule", choices=("fca", "ghm", "cca"), default=None,
                    help="update rule (default fca)")
    sp.add_argument("--times", type=_int_list, default=None,
                    help="comma-separated measurement times in steps")
    sp.add_argument("--runs", type=int, default=None,
                    help="independent cycles to average (default 64)")
    sp.add_argument("--length", type=int, default=None,
                    help="cycle length in sites; 0 = auto 2*max(t)+4")

    sp = sub.add_parser("excitations",
                        help="scaled excitation-count distribution (kappa=3)")
    common(sp)
    sp.add_argument("--tau", type=int, default=None,
                    help="scale parameter: counts at time 3*tau (default 200)")
    sp.add_argument("--trials", type=int, default=None,
                    help="sample size (default 10000)")
    sp.add_argument("--method", choices=("tournament", "direct"), default=None,
                    help="tournament: O(tau) max-rank proxy; direct: full simulation")

    sp = sub.add_parser("qtable", help="survival-probability tables")
    common(sp)
    sp.add_argument("--T", type=int, required=True, help="horizon in steps")
    sp.add_argument("--mode", choices=("exact", "float"), default="float",
                    help="exact rationals (T <= 400) or binary64")

    sp = sub.add_parser("disagree-exact",
                        help="exact adjacent-disagreement probability at time 3*tau")
    common(sp)
    sp.add_argument("--tau", type=int, required=True, help="tau >= 1")
    sp.add_argument("--mode", choices=("exact", "float"), default="exact",
                    help="arithmetic mode (exact capped at tau <= 200)")

    sp = sub.add_parser("genfun",
                        help="generating-function root q_minus(u) and matrix checks")
    common(sp)
    sp.add_argument("--u", type=_float_list, default=None,
                    help="comma-separated u values in (0,1); default ladder "
                         "1-10^-k, k=2..6")

    sp = sub.add_parser("oracle", help="run a brute-force arbitration suite")
    common(sp)
    sp.add_argument("--check", choices=sorted(oracles.SUITES), required=True,
                    help="suite name")
    sp.add_argument("--trials", type=int, default=None,
                    help="trial count override (suite-dependent default)")
    sp.add_argument("--steps", type=int, default=None,
                    help="step count override (particle-consistency)")
    return p


def _merge(args, keys: tuple[str, ...], defaults: dict) -> dict:
    """flag > config file > defaults, reported as a plain dict."""
    file_vals = {}
    if args.config:
        file_vals = load_config_file(args.config)
    out = {}
    for key in keys:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            out[key] = flag
        elif key in file_vals:
            out[key] = file_vals[key]
        elif key in defaults:
            out[key] = defaults[key]
    return out


def _cmd_simulate(args) -> int:
    vals = _merge(args, ("kappa", "rule", "length", "steps", "seed"),
                  {"kappa": 3, "rule": "fca", "length": 24, "steps": 10, "seed": 0})
    kappa, rule = vals["kappa"], vals["rule"]
    if args.init is not None:
        if kappa > 10:
            raise SystemExit("--init digit strings require kappa <= 10")
        colors = [int(ch) for ch in args.init.strip()]
        length = len(colors)
    else:
        length = vals["length"]
        colors = substream(vals["seed"], 0).integers(0, kappa, size=length,
                                                     dtype=np.uint8)
    cfg = ColorConfig(kappa, colors, Cycle(length))
    lines = [format_colors(cfg)]
    reports = []
    cur = cfg
    from .lattice import _STEPPERS
    for _ in range(vals["steps"]):
        cur, rep = _STEPPERS[rule](cur, want_report=True)
        lines.append(format_colors(cur))
        reports.append(rep)
    for i, line in enumerate(lines):
        print(line)
        if args.report and i > 0:
            rep = reports[i - 1]
            print(f"# t={i - 1}: excited={len(rep.excited)} "
                  f"blinking={len(rep.blinking)} flipped={sorted(rep.flipped_edges)}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return 0


def _experiment_config(args, extra_keys=(), **overrides) -> ExperimentConfig:
    keys = ("kappa", "rule", "times", "runs", "length", "tau", "trials",
            "method", "seed", "threads", "out") + extra_keys
    vals = _merge(args, keys, {})
    base = ExperimentConfig(**{k: v for k, v in vals.items() if v is not None})
    return base.merged(**overrides)


def _cmd_cluster_rate(args) -> int:
    cfg = _experiment_config(args, name="cluster-rate")
    if not cfg.times:
        cfg = cfg.merged(times=(100, 400, 1600))
    stats, rows = cluster_rate_experiment(cfg)
    for row in rows:
        t, p, se, sq = row[1], row[5], row[6], row[7]
        print(f"t={t}: p_hat={p:.6g} (se {se:.2g})  sqrt(t)*p_hat={sq:.6g}")
    print(f"site updates/s: {stats.notes['updates_per_second']:.3g}")
    if cfg.out:
        paths = persist(rows, CLUSTER_HEADER, cfg.out, cfg,
                        {"summary": stats.as_dict()})
        print(f"wrote {paths['csv']}")
    return 0


def _cmd_excitations(args) -> int:
    cfg = _experiment_config(args, name="excitations")
    stats, rows = excitation_experiment(cfg)
    ks = stats.estimates["ks"]
    print(f"method={stats.notes['method']} tau={stats.notes['tau']} "
          f"trials={stats.notes['trials']}")
    print(f"KS distance to 1 - 4*P(Z>=r)*P(Z<=r): {ks:.5f} "
          f"(noise floor ~{stats.stderr['ks_noise_floor']:.5f})")
    if cfg.out:
        paths = persist(rows, NE_HEADER, cfg.out, cfg,
                        {"summary": stats.as_dict(), "ks": ks})
        print(f"wrote {paths['csv']}")
    return 0


def _cmd_qtable(args) -> int:
    vals = _merge(args, ("seed",), {"seed": 0})
    T, mode = args.T, args.mode
    tables = build_qtable(T, mode=mode, keep_rows=True)
    rows = []
    for f, fam in enumerate(FAMILIES):
        for t in range(T + 1):
            row = tables.rows[f][t]
            for x in range(len(row)) if T else [0]:
                if mode == "exact":
                    rows.append((fam, x, t, row[x], t + 1))
                else:
                    rows.append((fam, x, t, float(row[x])))
    header = ("family,x,t,numerator,log3_denominator" if mode == "exact"
              else "family,x,t,value")
    if args.out:
        cfg = ExperimentConfig(name="qtable", seed=vals["seed"], out=args.out)
        paths = persist(rows, header, args.out, cfg,
                        {"mode": mode, "T": T, "variant": tables.variant})
        print(f"wrote {paths['csv']} ({len(rows)} rows)")
    else:
        print(header)
        for row in rows[:20]:
            print(",".join(str(v) for v in row))
        if len(rows) > 20:
            print(f"... {len(rows) - 20} more rows (use --out)")
    return 0


def _cmd_disagree_exact(args) -> int:
    tau = args.tau
    if args.mode == "exact":
        if tau > 200:
            raise SystemExit("exact mode capped at tau <= 200; use --mode float")
        p = disagreement_exact(tau)
        pf = float(p)
        print(f"P(disagree at t=3*{tau}) = {p} = {pf:.12g}")
    else:
        tables = build_qtable(2 * tau, mode="float", keep_rows=False)
        pf = disagreement_exact(tau, tables)
        print(f"P(disagree at t=3*{tau}) = {pf:.12g}")
    sq = math.sqrt(3 * tau) * pf
    print(f"sqrt(3*tau) * p = {sq:.9g}  "
          f"(limit {constants.REFERENCE['cluster_constant_k3']:.9g})")
    print(f"calibration: variant={DISAGREEMENT_CALIBRATION['variant']} "
          f"offsets={DISAGREEMENT_CALIBRATION['offsets']}")
    if args.out:
        cfg = ExperimentConfig(name="disagree-exact", tau=tau, out=args.out)
        persist([(tau, 3 * tau, pf, sq)], "tau,t,p,sqrt_t_p", args.out, cfg,
                {"calibration": DISAGREEMENT_CALIBRATION})
        print(f"wrote {args.out}")
    return 0


def _cmd_genfun(args) -> int:
    us = args.u or tuple(1.0 - 10.0 ** (-k) for k in range(2, 7))
    a11 = matrix_A(Fraction(1), Fraction(1))
    det = a11.det()
    minors = a11.minors()
    print(f"det A(1,1) = {det} (exact)")
    print(f"minors at (1,1): {tuple(int(m) for m in minors)}")
    rows = []
    for u in us:
        r = genfun_row(u)
        rows.append((r["u"], r["q_minus"], r["ratio_to_3sqrt3_over_2"],
                     r["detA_residual"]))
        print(f"u={u}: q_minus={r['q_minus']:.12f} "
              f"ratio={r['ratio_to_3sqrt3_over_2']:.6f} "
              f"residual={r['detA_residual']:.2e}")
    if args.out:
        cfg = ExperimentConfig(name="genfun", out=args.out)
        persist(rows, "u,q_minus,ratio_to_3sqrt3_over_2,detA_residual",
                args.out, cfg, {"detA_11": str(det),
                                "minors_11": [str(m) for m in minors]})
        print(f"wrote {args.out}")
    return int(det != 0)


def _cmd_oracle(args) -> int:
    suite = oracles.SUITES[args.check]
    kwargs = {}
    if args.trials is not None and args.check in ("particle-consistency",
                                                  "flip-burn-in"):
        kwargs["trials"] = args.trials
    if args.steps is not None and args.check == "particle-consistency":
        kwargs["steps"] = args.steps
    if args.seed is not None and args.check in ("particle-consistency",
                                                "flip-burn-in", "prop62"):
        kwargs["seed"] = args.seed
    ok, lines = suite(**kwargs)
    for line in lines:
        print(line)
    print(f"{args.check}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


_HANDLERS = {
    "simulate": _cmd_simulate,
    "cluster-rate": _cmd_cluster_rate,
    "excitations": _cmd_excitations,
    "qtable": _cmd_qtable,
    "disagree-exact": _cmd_disagree_exact,
    "genfun": _cmd_genfun,
    "oracle": _cmd_oracle,
}


def run(argv) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.subcommand is None:
        parser.print_usage()
        return 2
    flags = {k: v for k, v in vars(args).items()
             if k not in ("subcommand", "config") and v is not None}
    inv = Invocation(args.subcommand, flags, args.config)
    if inv.config_path is not None and not os.path.exists(inv.config_path):
        print(f"error: config file not found: {inv.config_path}", file=sys.stderr)
        return 2
    return _HANDLERS[inv.subcommand](args)


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()

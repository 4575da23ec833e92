"""Command line entry point: ``cascadelab <subcommand> [options]``.

Exit codes: 0 success, 1 a replica failed or a comparison did not pass,
2 invalid configuration or unknown name.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

from .. import analytic
from ..degree_model import ActivationLaw, ConfigurationError
from . import compare as compare_mod
from . import figures
from .config import ConfigError, ExperimentConfig, SeedSpec, Sweep, apply_parameter, load_config
from .runner import csv_text, run, write_outputs


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    g = parser.add_argument_group("global options")
    g.add_argument("--config", default=d, help="experiment config (JSON)")
    g.add_argument("--seed", type=int, default=d, help="root seed (unsigned 64-bit), overrides the config")
    g.add_argument("--out", default=d, help="output path (default stdout)")
    g.add_argument("--replicas", type=int, default=d, help="replicas per sweep point")
    g.add_argument("--n", type=int, default=d, help="number of vertices")
    g.add_argument("--threads", type=int, default=d, help="worker processes (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cascadelab", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help):
        p = sub.add_parser(name, help=help)
        _global_flags(p, suppress=True)
        return p

    add("analytic", help="limit values (roots, fractions, flags) for each config point")
    add("simulate", help="Monte Carlo replicas for each config point")
    p = add("sweep", help="Monte Carlo over a parameter sweep")
    p.add_argument("--param", choices=("lambda", "q", "alpha", "pi"))
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--steps", type=int)
    add("pivotal", help="pivotal-set fraction and pivotal-pair cascades")
    p = add("seedsize", help="critical uniform seed fraction alpha_c")
    p.add_argument("--simulate", action="store_true", help="also simulate just below and above alpha_c")
    p.add_argument("--delta", type=float, default=0.1, help="relative offset from alpha_c for --simulate")
    p = add("coexist", help="coexistence criterion for the pivotal equilibrium")
    p.add_argument("--lambda-c", action="store_true", help="also locate lambda_c (Poisson, proportional)")
    p.add_argument("--simulate", action="store_true", help="also simulate the largest inactive component")
    p = add("figure", help="tabulate the curves of a named figure")
    p.add_argument("name", help=f"one of {', '.join(sorted(figures.FIGURES))}")
    p.add_argument("--q", type=float)
    p.add_argument("--pi", type=float)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--family", choices=("poisson", "powerlaw"))
    p.add_argument("--lambdas", type=float, nargs="+")
    p = add("compare", help="deviation report between an analytic and a simulated CSV")
    p.add_argument("analytic_csv")
    p.add_argument("simulated_csv")
    p.add_argument("--key")
    p.add_argument("--analytic-column")
    p.add_argument("--simulated-column")
    p.add_argument("--tolerance", type=float)
    return parser


def _config(args, required: bool = True) -> ExperimentConfig | None:
    if args.config is None:
        if required:
            raise ConfigError("this subcommand needs --config")
        return None
    cfg = load_config(args.config)
    try:
        return cfg.with_overrides(rng_seed=args.seed, n=args.n, replicas=args.replicas, output_path=args.out)
    except ConfigurationError as e:
        raise ConfigError(str(e)) from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _lead(cfg: ExperimentConfig) -> list[str]:
    return [cfg.sweep.parameter] if cfg.sweep else []


def _threads(args) -> int:
    return max(1, args.threads or 1)


# subcommands ------------------------------------------------------------------------


def cmd_analytic(args) -> int:
    cfg = _config(args)
    header = _lead(cfg) + ["root", "fraction", "gamma", "s", "condition_holds", "qc", "hypothesis_ok", "residual"]
    rows = []
    for value, m in cfg.points():
        p, t, pi = m.degree, m.threshold, m.pi
        rep = analytic.pivotal_and_cascade_fractions(p, t, pi)
        law = m.seed.resolve(cfg.n)
        if isinstance(law, ActivationLaw) and law.is_degree_based:
            fp = analytic.solve_zhat(analytic.ModelParams(p, t, law, pi))
        else:
            fp = analytic.solve_xi(p, t, pi)
        qc = float(rep.qc) if rep.qc is not None else math.nan
        rows.append(([value] if cfg.sweep else []) + [
            fp.root, fp.final_fraction, rep.gamma_fraction, rep.s_fraction,
            rep.condition_holds, qc, fp.hypothesis_ok, fp.residual,
        ])
    _emit(csv_text(header, rows), cfg.output_path)
    return 0


def _simulate(cfg: ExperimentConfig, args) -> int:
    result = run(cfg, threads=_threads(args))
    write_outputs(result)
    for s in result.summaries:
        for r in s.records:
            if r.failed:
                print(f"replica {r.replica} of point {r.point} failed: {r.error}", file=sys.stderr)
    return result.exit_code


def cmd_simulate(args) -> int:
    return _simulate(_config(args), args)


def cmd_sweep(args) -> int:
    cfg = _config(args)
    given = [args.param, args.lo, args.hi, args.steps]
    if any(v is not None for v in given):
        if any(v is None for v in given):
            raise ConfigError("--param, --lo, --hi and --steps go together")
        if args.hi < args.lo or args.steps < 1:
            raise ConfigError("need lo <= hi and steps >= 1", "sweep")
        apply_parameter(cfg.model, args.param, args.lo)
        cfg = replace(cfg, sweep=Sweep(args.param, args.lo, args.hi, args.steps))
    if cfg.sweep is None:
        raise ConfigError("no sweep given (config 'sweep' or --param/--lo/--hi/--steps)", "sweep")
    return _simulate(cfg, args)


def cmd_pivotal(args) -> int:
    cfg = _config(args)
    cfg = replace(cfg, model=replace(cfg.model, seed=SeedSpec("pivotal_pair")))
    return _simulate(cfg, args)


def cmd_seedsize(args) -> int:
    cfg = _config(args)
    header = _lead(cfg) + ["alpha_c", "alpha_c_scan", "final_below", "final_above", "agree"]
    if args.simulate:
        header += ["alpha_below", "sim_below", "analytic_below", "alpha_above", "sim_above", "analytic_above"]
    rows = []
    failed = 0
    for i, (value, m) in enumerate(cfg.points()):
        dr = analytic.alpha_c_report(m.degree, m.threshold, m.pi)
        sc = analytic.alpha_c_scan(m.degree, m.threshold, m.pi)
        a, b = dr.alpha_c, sc.alpha_c
        agree = (a is None and b is None) or (a is not None and b is not None and abs(a - b) <= 1e-4)
        row = ([value] if cfg.sweep else []) + [
            math.nan if a is None else a, math.nan if b is None else b,
            dr.final_before, dr.final_after, agree,
        ]
        if args.simulate:
            if a is None or a == 0.0:
                row += [math.nan] * 6
            else:
                for alpha in (a * (1 - args.delta), a * (1 + args.delta)):
                    mm = replace(m, seed=SeedSpec("uniform", alpha=alpha))
                    sub = replace(cfg, model=mm, sweep=None, rng_seed=cfg.rng_seed + i)
                    res = run(sub, threads=_threads(args))
                    failed += res.failed
                    s = res.summaries[0]
                    row += [alpha, s.mean, s.analytic.get("analytic_fraction")]
        rows.append(row)
    _emit(csv_text(header, rows), cfg.output_path)
    return 1 if failed else 0


def cmd_coexist(args) -> int:
    cfg = _config(args)
    header = _lead(cfg) + ["xi", "criterion", "coexists", "inactive_giant", "hypotheses_ok"]
    if args.lambda_c:
        header += ["lambda_c"]
    if args.simulate:
        header += ["sim_largest_inactive", "sim_stderr"]
    rows = []
    failed = 0
    for i, (value, m) in enumerate(cfg.points()):
        rep = analytic.coexistence(m.threshold, m.degree, m.pi)
        row = ([value] if cfg.sweep else []) + [
            rep.xi, rep.criterion, rep.coexists, rep.inactive_giant, rep.hypotheses_ok,
        ]
        if args.lambda_c:
            if m.degree.kind != "poisson" or m.threshold.kind != "proportional":
                raise ConfigError("lambda_c needs a poisson degree law and a proportional threshold", "model")
            roots = analytic.lambda_c(m.threshold.q, m.pi)
            row += [roots[0] if roots else math.nan]
        if args.simulate:
            sub = replace(cfg, model=replace(m, seed=SeedSpec("pivotal_set")), sweep=None, rng_seed=cfg.rng_seed + i)
            res = run(sub, threads=_threads(args), analytic_values=False)
            failed += res.failed
            x = res.summaries[0].largest_inactive_fractions
            se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
            row += [float(x.mean()) if x.size else math.nan, se]
        rows.append(row)
    _emit(csv_text(header, rows), cfg.output_path)
    return 1 if failed else 0


def cmd_figure(args) -> int:
    cfg = _config(args, required=False)
    opts = {
        "q": args.q, "pi": args.pi, "lo": args.lo, "hi": args.hi, "steps": args.steps,
        "family": args.family, "lambdas": args.lambdas,
    }
    if cfg is not None:
        if cfg.model.threshold.kind == "proportional" and opts["q"] is None:
            opts["q"] = cfg.model.threshold.q
        if opts["pi"] is None:
            opts["pi"] = cfg.model.pi
    if args.name == "trials":
        opts.update(n=args.n if args.n is not None else (cfg.n if cfg else None),
                    replicas=args.replicas if args.replicas is not None else (cfg.replicas if cfg else None),
                    seed=args.seed if args.seed is not None else (cfg.rng_seed if cfg else None))
    header, rows = figures.figure(args.name, **opts)
    _emit(csv_text(header, rows), args.out)
    return 0


def cmd_compare(args) -> int:
    rep = compare_mod.compare(
        args.analytic_csv, args.simulated_csv, args.key, args.analytic_column,
        args.simulated_column, args.tolerance,
    )
    _emit(csv_text(*rep.table()), args.out)
    print(f"max deviation {rep.max_deviation:.12g}: {'pass' if rep.passed else 'FAIL'}", file=sys.stderr)
    return 0 if rep.passed else 1


COMMANDS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "pivotal": cmd_pivotal,
    "seedsize": cmd_seedsize,
    "coexist": cmd_coexist,
    "figure": cmd_figure,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as e:
        print(f"cascadelab: config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"cascadelab: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

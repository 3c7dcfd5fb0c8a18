"""Command-line entry point: ``aspot <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from dataclasses import fields
from pathlib import Path

from .core import PotInstance, SolverConfig, validate
from .exceptions import DegenerateInstance, MaxIterationsExceeded, NoConvergence, PotError
from .oracle import solve_exact
from .solvers import SOLVERS, aspot_setup, solve, theory_bounds
from .apps.color import (color_transfer, image_pixels, kmeans_quantize, read_ppm,
                         recolor_image, write_ppm)
from .apps.compare import bench_scaling
from .apps.registration import RegistrationConfig, read_xyz, register_point_clouds, write_xyz

_CONFIG_FLAGS = {
    "epsilon": "epsilon",
    "gamma": "gamma_override",
    "tol": "tol",
    "max_iter": "max_iterations",
    "block_rule": "block_rule",
    "p": "tuning_exponent_p",
    "log_every": "log_every",
    "round_every": "round_every",
}


def _solver_flags(parser, multi=False):
    if multi:
        parser.add_argument("--solvers", default="aspot,sinkhorn",
                            help="comma-separated solver names")
    else:
        parser.add_argument("--solver", choices=sorted(SOLVERS), default="aspot")
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--gamma", type=float, help="override the derived regularization")
    parser.add_argument("--tol", type=float, help="override the derived stopping tolerance")
    parser.add_argument("--p", type=float, help="tuning exponent for tuned-sinkhorn")
    parser.add_argument("--max-iter", type=int)
    parser.add_argument("--block-rule", choices=["greedy", "round-robin"])
    parser.add_argument("--log-every", type=int)
    parser.add_argument("--round-every", type=int)
    parser.add_argument("--config", type=Path, help="JSON file of solver settings")


def _common_flags(parser):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", type=Path, default=Path("."))
    parser.add_argument("--deterministic", action="store_true",
                        help="omit wall-time columns so traces are byte-reproducible")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aspot", description="Entropic partial optimal transport solvers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance JSON file")
    p.add_argument("instance", type=Path)
    _solver_flags(p)
    _common_flags(p)

    p = sub.add_parser("compare", help="run several solvers on one instance")
    p.add_argument("instance", type=Path)
    _solver_flags(p, multi=True)
    _common_flags(p)

    p = sub.add_parser("oracle", help="exact optimum by dense simplex (n <= 15)")
    p.add_argument("instance", type=Path)
    _common_flags(p)

    p = sub.add_parser("bench-scaling", help="runtime against n on the synthetic family")
    p.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400, 800])
    p.add_argument("--solver", choices=sorted(SOLVERS), default="aspot")
    p.add_argument("--repeats", type=int, default=3, help="timed runs per size; the best counts")
    _common_flags(p)

    p = sub.add_parser("color-transfer", help="recolor a PPM image with another's palette")
    p.add_argument("source", type=Path)
    p.add_argument("target", type=Path)
    p.add_argument("--colors", type=int, default=64)
    p.add_argument("--s-frac", type=float, default=0.2)
    _solver_flags(p)
    _common_flags(p)

    p = sub.add_parser("register", help="rigidly align a source cloud onto a target cloud")
    p.add_argument("source", type=Path)
    p.add_argument("target", type=Path)
    p.add_argument("--alpha", type=float, default=0.4)
    p.add_argument("--gamma0", type=float, default=4.4e-3)
    p.add_argument("--anneal-rate", type=float, default=0.83)
    p.add_argument("--threshold", type=float, default=1e-5)
    p.add_argument("--max-registrations", type=int, default=60)
    _solver_flags(p)
    _common_flags(p)
    return parser


def solver_config(args, **defaults) -> SolverConfig:
    """Flags override the config file, which overrides ``defaults``."""
    settings = dict(defaults)
    if getattr(args, "config", None) is not None:
        doc = json.loads(args.config.read_text())
        known = {f.name for f in fields(SolverConfig)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        settings.update(doc)
    for flag, key in _CONFIG_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            settings[key] = value
    settings["deterministic"] = True if args.deterministic else settings.get("deterministic", True)
    return SolverConfig(**settings)


def _bounds(instance, config, solver, trace):
    """Iteration bound for the run's gamma and tolerance, or None when undefined."""
    try:
        setup = aspot_setup(instance, config.epsilon, config.gamma_override)
        if solver == "aspot":
            return theory_bounds(instance, setup.gamma, setup.eps_tilde,
                                 setup.mixed_r, setup.mixed_c)
        return theory_bounds(instance, trace.meta["gamma"], trace.meta["tolerance"],
                             setup.mixed_r, setup.mixed_c)
    except (DegenerateInstance, ValueError):
        return None


def _run(instance, solver, config):
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxIterationsExceeded)
        plan, trace = solve(instance, solver, config)
    return plan, trace, time.perf_counter() - start


def _summary(instance, solver, config, plan, trace, wall):
    bounds = _bounds(instance, config, solver, trace)
    meta = {k: v for k, v in trace.meta.items() if isinstance(v, (int, float, str, bool))}
    return {
        "solver": solver,
        "cost": plan.cost(instance),
        "E": trace.records[-1].E if trace.records else None,
        "iterations": trace.iterations,
        "converged": bool(trace.meta.get("converged", False)),
        "wall_time_s": wall,
        "gamma": trace.meta.get("gamma"),
        "tolerance": trace.meta.get("tolerance"),
        "mass": plan.mass,
        "theory_bounds": None if bounds is None else {
            "R": bounds.R, "L": bounds.L, "mu_f": bounds.mu_f,
            "iteration_bound": bounds.iteration_bound},
        "meta": meta,
    }


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cmd_solve(args) -> int:
    instance = validate(PotInstance.load(args.instance))
    config = solver_config(args)
    plan, trace, wall = _run(instance, args.solver, config)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "plan.json").write_text(plan.to_json() + "\n")
    trace.write_csv(out / "trace.csv", include_time=not args.deterministic)
    summary = _summary(instance, args.solver, config, plan, trace, wall)
    if args.deterministic:
        summary.pop("wall_time_s")
    _write_json(out / "summary.json", summary)
    print(f"{args.solver}: cost={summary['cost']:.10g} iterations={summary['iterations']} "
          f"converged={summary['converged']}")
    return 0


def _side_by_side(traces) -> str:
    names = list(traces)
    by_t = {name: {r.t: r for r in traces[name].records} for name in names}
    steps = sorted(set().union(*by_t.values()))
    header = ["t"] + [f"{col}_{name}" for name in names for col in ("E", "rounded_cost")]
    lines = [",".join(header)]
    for t in steps:
        row = [str(t)]
        for name in names:
            rec = by_t[name].get(t)
            row.append("" if rec is None else repr(float(rec.E)))
            row.append("" if rec is None or rec.rounded_cost is None else repr(float(rec.rounded_cost)))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    instance = validate(PotInstance.load(args.instance))
    names = [s.strip() for s in args.solvers.split(",") if s.strip()]
    unknown = [s for s in names if s not in SOLVERS]
    if unknown or not names:
        raise ValueError(f"unknown solvers {unknown}; choose from {sorted(SOLVERS)}")
    config = solver_config(args, round_every=1)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    traces, summaries = {}, {}
    for name in names:
        plan, trace, wall = _run(instance, name, config)
        trace.write_csv(out / f"trace_{name}.csv", include_time=not args.deterministic)
        traces[name] = trace
        summaries[name] = _summary(instance, name, config, plan, trace, wall)
        if args.deterministic:
            summaries[name].pop("wall_time_s")
        print(f"{name}: cost={summaries[name]['cost']:.10g} iterations={trace.iterations}")
    (out / "comparison.csv").write_text(_side_by_side(traces))
    _write_json(out / "summary.json", summaries)
    return 0


def cmd_oracle(args) -> int:
    instance = validate(PotInstance.load(args.instance))
    value, X = solve_exact(instance)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(args.out_dir / "oracle.json", {"value": value, "X": X.tolist()})
    print(f"optimum={value:.12g}")
    return 0


def cmd_bench_scaling(args) -> int:
    result = bench_scaling(args.sizes, seed=args.seed, solver=args.solver, repeats=args.repeats)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "scaling.csv").write_text(result.to_csv())
    _write_json(args.out_dir / "summary.json",
                {"solver": args.solver, "sizes": list(result.sizes),
                 "runtimes_s": list(result.runtimes), "iterations": list(result.iterations),
                 "slope": result.slope})
    sys.stdout.write(result.to_csv())
    print(f"slope={result.slope:.3f}")
    return 0


def cmd_color_transfer(args) -> int:
    src = read_ppm(args.source)
    tgt = read_ppm(args.target)
    a = kmeans_quantize(image_pixels(src), args.colors, args.seed)
    b = kmeans_quantize(image_pixels(tgt), args.colors, args.seed)
    config = solver_config(args)
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxIterationsExceeded)
        recolored, plan, trace = color_transfer(a, b, args.s_frac, args.solver, config)
    wall = time.perf_counter() - start
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_ppm(out / "recolored.ppm", recolor_image(src.shape, a, recolored))
    trace.write_csv(out / "trace.csv", include_time=not args.deterministic)
    summary = {"solver": args.solver, "colors": args.colors, "s_frac": args.s_frac,
               "iterations": trace.iterations, "mass": plan.mass,
               "converged": bool(trace.meta.get("converged", False)),
               "gamma": trace.meta.get("gamma")}
    if not args.deterministic:
        summary["wall_time_s"] = wall
    _write_json(out / "summary.json", summary)
    print(f"recolored {src.shape[1]}x{src.shape[0]} image in {trace.iterations} iterations")
    return 0


def cmd_register(args) -> int:
    Q = read_xyz(args.source)
    P = read_xyz(args.target)
    reg = RegistrationConfig(alpha=args.alpha, gamma0=args.gamma0, anneal_rate=args.anneal_rate,
                             transform_threshold=args.threshold,
                             max_registrations=args.max_registrations)
    defaults = {"epsilon": reg.epsilon, "tol": reg.tol, "max_iterations": reg.max_iterations}
    config = solver_config(args, **defaults)
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NoConvergence)
        result = register_point_clouds(P, Q, reg, args.solver, config)
    wall = time.perf_counter() - start
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_xyz(out / "registered.xyz", result.transform.apply(Q))
    (out / "registrations.csv").write_text(result.to_csv())
    summary = {"solver": args.solver, "registrations": result.registrations,
               "converged": result.converged,
               "accumulated_iterations": result.steps[-1].accumulated_iterations,
               "R": result.transform.R.tolist(), "t": result.transform.t.tolist()}
    if not args.deterministic:
        summary["wall_time_s"] = wall
    _write_json(out / "summary.json", summary)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(f"{result.registrations} registrations, converged={result.converged}")
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "compare": cmd_compare,
    "oracle": cmd_oracle,
    "bench-scaling": cmd_bench_scaling,
    "color-transfer": cmd_color_transfer,
    "register": cmd_register,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (PotError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"aspot {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

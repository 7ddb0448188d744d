"""Command-line interface wiring the toolkit together.

Exit codes: 0 on success, 1 on a domain error (malformed input, infeasible
model, failed verification), 2 on usage errors.  Domain errors are printed
as one JSON object per line on standard error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import analysis, plots
from .aggregation import (
    build_da_aggregation,
    build_fa_aggregation,
    build_ksp_aggregation,
    emit_aggregation,
    parse_aggregation,
    validate_aggregation,
)
from .errors import AggrenetError
from .instances import emit_native, generate_random, parse_dow, parse_native, validate
from .model import (
    add_cutset_constraints,
    build_model,
    relax,
    stats,
)
from .mps import emit_mps, parse_mps
from .paths import k_shortest_paths, surrogate_costs
from .solve import OPTIMAL, brute_force_mip, check_solution, solve_lp, solve_mip

HIERARCHY_TOL = 1e-6


class CliError(AggrenetError):
    pass


def _read(path: str) -> str:
    if not os.path.exists(path):
        raise CliError(f"input file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _check_output(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise CliError(f"output directory not found: {parent}")


def _write(path: str, text: str):
    _check_output(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _load_instance(path: str, fmt: str):
    text = _read(path)
    name = os.path.splitext(os.path.basename(path))[0]
    if fmt == "dow":
        return parse_dow(text, name=name)
    return parse_native(text, name=name)


def _parse_k_list(text: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise CliError(f"bad path-count list {text!r}, expected e.g. 1,2,3")
    if not values or any(v < 0 for v in values):
        raise CliError(f"path counts must be nonnegative integers, got {text!r}")
    return values


def _load_aggregation(inst, spec: str):
    if spec == "da":
        return build_da_aggregation(inst)
    if spec == "fa":
        return build_fa_aggregation(inst)
    if spec.startswith("ksp:"):
        try:
            k = int(spec.split(":", 1)[1])
        except ValueError:
            raise CliError(f"bad aggregation spec {spec!r}, expected ksp:<K>")
        return build_ksp_aggregation(inst, k)
    return parse_aggregation(_read(spec), inst)


def cmd_parse(args) -> int:
    inst = _load_instance(args.file, args.format)
    report = validate(inst)
    print(f"instance {inst.name}: {inst.n_nodes} nodes, {len(inst.arcs)} arcs, "
          f"{len(inst.commodities)} commodities, {report.origin_count} origins")
    for entry in report.entries:
        print(f"violation {entry.code}: {entry.message}")
    return 0 if report.ok() else 1


def cmd_gen(args) -> int:
    _check_output(args.output)
    print(f"seed {args.seed}")
    inst = generate_random(
        n_nodes=args.nodes,
        arc_density=args.density,
        n_commodities=args.commodities,
        capacity_ratio=args.capacity_ratio,
        fixed_to_flow_ratio=args.fixed_ratio,
        seed=args.seed,
    )
    _write(args.output, emit_native(inst))
    print(f"wrote {args.output}: {inst.n_nodes} nodes, {len(inst.arcs)} arcs, "
          f"{len(inst.commodities)} commodities")
    return 0


def cmd_ksp(args) -> int:
    inst = _load_instance(args.instance, args.format)
    if not (1 <= args.origin <= inst.n_nodes and 1 <= args.destination <= inst.n_nodes):
        raise CliError("endpoints outside the instance's node range")
    costs = surrogate_costs(inst)
    paths = k_shortest_paths(inst, costs, args.origin - 1, args.destination - 1, args.k)
    for p in paths:
        nodes = " ".join(str(n + 1) for n in p.nodes)
        print(f"{p.cost:.6g} {nodes}")
    return 0


def cmd_aggregate(args) -> int:
    _check_output(args.output)
    inst = _load_instance(args.instance, args.format)
    if args.method == "ksp":
        pa = build_ksp_aggregation(inst, args.k)
    elif args.method == "da":
        pa = build_da_aggregation(inst)
    else:
        pa = build_fa_aggregation(inst)
    report = validate_aggregation(pa, inst)
    if not report.ok():
        raise CliError("aggregation failed validation: " + report.entries[0].message)
    _write(args.output, emit_aggregation(pa, inst))
    print(f"wrote {args.output}: {len(pa.dispersions)} dispersions ({pa.scheme})")
    return 0


def cmd_build(args) -> int:
    if args.full_labeling and args.variant != "pai":
        raise CliError("--full-labeling applies only to --variant pai")
    if args.drop_redundant_flow and args.variant != "pae":
        raise CliError("--drop-redundant-flow applies only to --variant pae")
    if not args.emit.startswith("mps:"):
        raise CliError(f"unsupported emit target {args.emit!r}, expected mps:<path>")
    out_path = args.emit.split(":", 1)[1]
    _check_output(out_path)

    inst = _load_instance(args.instance, args.format)
    pa = _load_aggregation(inst, args.agg)
    model = build_model(
        inst, pa, args.variant,
        clip_si=args.clip_si,
        full_labeling=args.full_labeling,
        drop_redundant_flow=args.drop_redundant_flow,
    )
    if args.cutset:
        model = add_cutset_constraints(model, inst)
    if args.relax:
        model = relax(model)
    _write(out_path, emit_mps(model))
    s = stats(model)
    classes = " ".join(f"{k}={v}" for k, v in s.by_class)
    print(f"wrote {out_path}: rows={s.rows} cols={s.cols} nnz={s.nonzeros} "
          f"density={s.nonzero_density:.6f} [{classes}]")
    return 0


def cmd_solve(args) -> int:
    model = parse_mps(_read(args.model))
    out_path = args.output or os.path.splitext(args.model)[0] + ".sol"
    if args.mip:
        sol = solve_mip(model, node_limit=args.node_limit,
                        time_limit=args.time_limit, tol=args.tol)
        print(f"status {sol.status}")
        if sol.objective is not None:
            print(f"objective {sol.objective:.10g}")
            print(f"bound {sol.bound:.10g} gap {sol.gap:.3e} nodes {sol.nodes}")
        values = sol.values
        ok = sol.status in (OPTIMAL, "Feasible")
    else:
        sol = solve_lp(relax(model), tol=args.tol, iter_limit=args.iter_limit)
        print(f"status {sol.status}")
        if sol.objective is not None:
            print(f"objective {sol.objective:.10g}")
            print(f"iterations {sol.iterations} time_ms {1000 * sol.wall_time:.3f}")
        values = sol.values
        ok = sol.status == OPTIMAL
    if values:
        lines = [f"{name} {value:.12g}" for name, value in values.items()]
        _write(out_path, "\n".join(lines) + "\n")
        print(f"wrote {out_path}")
    return 0 if ok else 1


def cmd_compare(args) -> int:
    _check_output(args.report)
    inst = _load_instance(args.instance, args.format)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    k_values = _parse_k_list(args.k)
    report = analysis.compare_formulations(
        inst, variants=variants, k_values=k_values,
        time_runs=args.time_runs, jobs=args.jobs, clip_si=args.clip_si,
    )
    csv_text = report.to_csv()
    _write(args.report, csv_text)
    written = [args.report]
    if args.gnuplot:
        _write(args.gnuplot, analysis.dump_points(report))
        written.append(args.gnuplot)
    if args.plot:
        prefix = os.path.splitext(args.report)[0]
        written.extend(plots.render_compare_figures(report, prefix))
    for row in report.rows:
        value = "-" if row.lp_value is None else f"{row.lp_value:.6g}"
        print(f"{row.label():>8} status={row.status} lp={value}")
    print("wrote " + " ".join(written))
    return 0


def _check(checks, label, ok, detail=""):
    checks.append(ok)
    suffix = f" ({detail})" if detail else ""
    print(f"{'PASS' if ok else 'FAIL'} {label}{suffix}")


def cmd_verify(args) -> int:
    inst = _load_instance(args.instance, args.format)
    k_values = _parse_k_list(args.k)
    checks: list[bool] = []

    report = validate(inst)
    _check(checks, "instance invariants", report.ok(),
           f"{len(report.entries)} violations" if report.entries else "")

    da = build_da_aggregation(inst)
    fa = build_fa_aggregation(inst)
    ksp_aggs = {k: build_ksp_aggregation(inst, k) for k in k_values}
    for label, pa in [("da", da), ("fa", fa)] + [(f"ksp:{k}", v) for k, v in sorted(ksp_aggs.items())]:
        rep = validate_aggregation(pa, inst)
        _check(checks, f"aggregation {label} valid", rep.ok())

    from .aggregation import network_size
    n_k, n_a = len(inst.commodities), len(inst.arcs)
    da_nodes, da_arcs = network_size(da, inst)
    fa_nodes, fa_arcs = network_size(fa, inst)
    n_origins = len(inst.origins())
    _check(checks, "disaggregated layer arcs = K*A", da_arcs == n_k * n_a,
           f"{da_arcs} vs {n_k * n_a}")
    _check(checks, "aggregated layer arcs = origins*A", fa_arcs == n_origins * n_a,
           f"{fa_arcs} vs {n_origins * n_a}")
    _check(checks, "layer nodes = layers*N",
           da_nodes == n_k * inst.n_nodes and fa_nodes == n_origins * inst.n_nodes)

    sorted_k = sorted(ksp_aggs)
    monotone = True
    for lo, hi in zip(sorted_k, sorted_k[1:]):
        for disp_lo, disp_hi in zip(ksp_aggs[lo].dispersions, ksp_aggs[hi].dispersions):
            for k in disp_lo.members:
                if not disp_lo.critical[k] <= disp_hi.critical[k]:
                    monotone = False
    if len(sorted_k) > 1:
        _check(checks, "critical arcs monotone in K", monotone)

    def lp_value(pa, variant):
        model = relax(build_model(inst, pa, variant))
        sol = solve_lp(model)
        return sol.objective if sol.status == OPTIMAL else None

    z_da = lp_value(da, "pa")
    z_fa = lp_value(fa, "pa")
    if z_da is None or z_fa is None:
        _check(checks, "LP relaxations solvable", False, "baseline LP not optimal")
    else:
        for k in sorted_k:
            z_pa = lp_value(ksp_aggs[k], "pa")
            z_pai = lp_value(ksp_aggs[k], "pai")
            z_pae = lp_value(ksp_aggs[k], "pae")
            values = [z_fa, z_pa, z_pai, z_pae, z_da]
            ok = all(v is not None for v in values)
            if ok:
                slack = HIERARCHY_TOL * max(1.0, abs(z_da))
                ok = all(a <= b + slack for a, b in zip(values, values[1:]))
            chain = " <= ".join("-" if v is None else f"{v:.6g}" for v in values)
            _check(checks, f"bound hierarchy (K={k})", ok, chain)

    if len(inst.arcs) <= 12:
        reference = brute_force_mip(inst)
        for label, pa, variant in [
            ("da", da, "pa"), ("fa", fa, "pa"),
            (f"pa-{sorted_k[0]}", ksp_aggs[sorted_k[0]], "pa"),
            (f"pai-{sorted_k[0]}", ksp_aggs[sorted_k[0]], "pai"),
            (f"pae-{sorted_k[0]}", ksp_aggs[sorted_k[0]], "pae"),
        ]:
            sol = solve_mip(build_model(inst, pa, variant))
            if reference == math.inf:
                ok = sol.status == "Infeasible"
                detail = "infeasible"
            else:
                ok = (
                    sol.status == OPTIMAL
                    and abs(sol.objective - reference) <= 1e-6 * max(1.0, abs(reference))
                )
                detail = f"{sol.objective:.6g} vs {reference:.6g}" if sol.objective is not None else sol.status
            _check(checks, f"integer optimum matches enumeration ({label})", ok, detail)

    da_model = build_model(inst, da, "pa")
    round_trip = parse_mps(emit_mps(da_model))
    same_stats = stats(round_trip) == stats(da_model)
    _check(checks, "MPS round-trip stats", same_stats)

    print(f"{sum(checks)}/{len(checks)} checks passed")
    return 0 if all(checks) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aggrenet",
        description="Build, analyze and solve aggregated network design models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_format(p):
        p.add_argument("--format", choices=("native", "dow"), default="native",
                       help="instance file format (default native)")

    p = sub.add_parser("parse", help="parse and validate an instance file")
    p.add_argument("file")
    add_format(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--density", type=float, required=True)
    p.add_argument("--commodities", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--capacity-ratio", type=float, default=1.5)
    p.add_argument("--fixed-ratio", type=float, default=5.0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("ksp", help="k shortest surrogate-cost paths")
    p.add_argument("instance")
    add_format(p)
    p.add_argument("--from", dest="origin", type=int, required=True,
                   help="origin node (1-based)")
    p.add_argument("--to", dest="destination", type=int, required=True,
                   help="destination node (1-based)")
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_ksp)

    p = sub.add_parser("aggregate", help="construct a partial aggregation")
    p.add_argument("instance")
    add_format(p)
    p.add_argument("--method", choices=("da", "fa", "ksp"), required=True)
    p.add_argument("--k", type=int, default=1, help="paths per commodity for ksp")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("build", help="build a model and emit MPS")
    p.add_argument("instance")
    add_format(p)
    p.add_argument("--agg", required=True, help="da | fa | ksp:<K> | <aggregation file>")
    p.add_argument("--variant", choices=("pa", "pai", "pae"), default="pa")
    p.add_argument("--cutset", action="store_true", help="add single-node cut-set rows")
    p.add_argument("--clip-si", action="store_true",
                   help="cap strong-inequality coefficients at the arc capacity")
    p.add_argument("--full-labeling", action="store_true",
                   help="emit labeling rows at every node (pai only)")
    p.add_argument("--drop-redundant-flow", action="store_true",
                   help="drop plain conservation at expanded nodes (pae only)")
    p.add_argument("--relax", action="store_true", help="emit the LP relaxation")
    p.add_argument("--emit", required=True, help="mps:<path>")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("solve", help="solve an MPS model")
    p.add_argument("model")
    p.add_argument("--mip", action="store_true", help="branch and bound instead of the LP relaxation")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--time-limit", type=float, default=None, help="seconds")
    p.add_argument("--node-limit", type=int, default=100_000)
    p.add_argument("--iter-limit", type=int, default=None)
    p.add_argument("-o", "--output", default=None, help="assignment file (default <model>.sol)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="LP metrics across formulations")
    p.add_argument("instance")
    add_format(p)
    p.add_argument("--variants", default="da,fa,pa,pai,pae")
    p.add_argument("--k", default="1,2,3", help="comma-separated path counts")
    p.add_argument("--report", required=True, help="CSV output path")
    p.add_argument("--plot", action="store_true", help="render trade-off charts next to the CSV")
    p.add_argument("--gnuplot", default=None, help="also dump plain-text points to this path")
    p.add_argument("--time-runs", type=int, default=3)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--clip-si", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="run the invariant suite on an instance")
    p.add_argument("instance")
    add_format(p)
    p.add_argument("--k", default="1,2", help="comma-separated path counts to verify")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AggrenetError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

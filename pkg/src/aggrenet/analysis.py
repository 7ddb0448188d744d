"""Solution mappings between formulations and cross-formulation metrics.

The mappings re-label flows between variable spaces: a disaggregated point
maps onto any partial aggregation by summing per-commodity flows into group
flows (with the gadget z-flows reconstructed from the arc-wise sums), and a
partially aggregated point maps onto the full aggregation by summing group
flows per origin.  Both keep the design variables and the objective value
unchanged.

Metrics follow the percentage conventions used throughout the comparison
reports: losses and reductions are relative to the fully disaggregated
baseline.
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .aggregation import (
    PartialAggregation,
    arc_groups,
    build_da_aggregation,
    build_fa_aggregation,
    build_ksp_aggregation,
    gadget_sets,
    validate_aggregation,
)
from .errors import AggregationMismatch, NonPositiveBase
from .instances import Instance
from .model import (
    ModelIR,
    ModelStats,
    build_model,
    relax,
    stats,
    x_name,
    y_name,
    z_in_name,
    z_out_name,
)
from .solve import OPTIMAL, solve_lp

ALL_VARIANTS = ("da", "fa", "pa", "pai", "pae")


def _da_flows(da_values: dict[str, float], inst: Instance) -> list[dict[int, float]]:
    """Per-commodity arc flows decoded from a disaggregated assignment."""
    flows = []
    for k in range(len(inst.commodities)):
        per_arc = {}
        for a, arc in enumerate(inst.arcs):
            per_arc[a] = da_values[x_name(k, arc, (k,))]
        flows.append(per_arc)
    return flows


def _require_cover(pa: PartialAggregation, inst: Instance):
    report = validate_aggregation(pa, inst)
    if not report.ok():
        raise AggregationMismatch(
            "; ".join(e.message for e in report.entries[:3]) or "invalid aggregation"
        )


def map_da_to_pae(da_values: dict[str, float], pa: PartialAggregation, inst: Instance) -> dict[str, float]:
    """Transform a disaggregated point into the gadget-expanded space of
    ``pa``: group flows are per-commodity sums, the design variables carry
    over, and each z-flow collects the commodity flows of the aggregated arc
    copies feeding its artificial arc."""
    _require_cover(pa, inst)
    flows = _da_flows(da_values, inst)
    adj = inst.adjacency
    out: dict[str, float] = {}
    for arc in inst.arcs:
        out[y_name(arc)] = da_values[y_name(arc)]
    for b, disp in enumerate(pa.dispersions):
        for a, arc in enumerate(inst.arcs):
            for group in arc_groups(disp, a):
                out[x_name(b, arc, group)] = sum(flows[k][a] for k in group)
        for node in range(inst.n_nodes):
            g = gadget_sets(disp, inst, node)
            if g.empty():
                continue
            for c_set in g.inflow:
                feeding = [
                    a for a in adj.predecessors[node] if disp.aggregated_on(a) == c_set
                ]
                for d_set in g.intermediate:
                    common = sorted(set(c_set) & set(d_set))
                    if not common:
                        continue
                    out[z_in_name(b, node, c_set, d_set)] = sum(
                        flows[k][a] for a in feeding for k in common
                    )
            for c_set in g.outflow:
                draining = [
                    a for a in adj.successors[node] if disp.aggregated_on(a) == c_set
                ]
                for d_set in g.intermediate:
                    common = sorted(set(d_set) & set(c_set))
                    if not common:
                        continue
                    out[z_out_name(b, node, d_set, c_set)] = sum(
                        flows[k][a] for a in draining for k in common
                    )
    return out


def map_pa_to_fa(pa_values: dict[str, float], pa: PartialAggregation, inst: Instance) -> dict[str, float]:
    """Collapse a partially aggregated point onto the full aggregation by
    summing all group flows of the same origin; design variables carry over."""
    _require_cover(pa, inst)
    fa = build_fa_aggregation(inst)
    out: dict[str, float] = {}
    for arc in inst.arcs:
        out[y_name(arc)] = pa_values[y_name(arc)]
    for fb, fa_disp in enumerate(fa.dispersions):
        for a, arc in enumerate(inst.arcs):
            total = 0.0
            for b, disp in enumerate(pa.dispersions):
                if disp.origin != fa_disp.origin:
                    continue
                for group in arc_groups(disp, a):
                    total += pa_values[x_name(b, arc, group)]
            out[x_name(fb, arc, fa_disp.members)] = total
    return out


def assignment_objective(model: ModelIR, assignment: dict[str, float]) -> float:
    return sum(v.obj * assignment[v.name] for v in model.variables if v.obj != 0.0)


def bound_loss(z_base: float, z_other: float) -> float:
    """Percentage of LP value lost relative to the baseline."""
    if z_base <= 0:
        raise NonPositiveBase(f"baseline LP value must be positive, got {z_base}")
    return 100.0 * (z_base - z_other) / z_base


def size_reduction(base: ModelStats, other: ModelStats) -> float:
    if base.size <= 0:
        raise NonPositiveBase("baseline model size must be positive")
    return 100.0 * (1.0 - other.size / base.size)


def time_reduction(t_base: float, t_other: float) -> float:
    if t_base <= 0:
        raise NonPositiveBase(f"baseline time must be positive, got {t_base}")
    return 100.0 * (1.0 - t_other / t_base)


def fa_reduction(inst: Instance) -> float:
    """Percentage drop in commodity count from full aggregation by origin."""
    n_k = len(inst.commodities)
    if n_k <= 0:
        raise NonPositiveBase("instance has no commodities")
    return 100.0 * (n_k - len(inst.origins())) / n_k


CSV_COLUMNS = [
    "instance", "variant", "K", "lp_value", "lp_time_ms", "rows", "cols", "nnz",
    "size", "density", "bound_loss_pct", "size_red_pct", "time_red_pct", "fa_red_pct",
]


@dataclass
class MetricsRow:
    instance: str
    variant: str
    k: int | None
    status: str
    lp_value: float | None
    lp_time_ms: float | None
    model_stats: ModelStats
    bound_loss_pct: float | None = None
    size_red_pct: float | None = None
    time_red_pct: float | None = None
    fa_red_pct: float | None = None

    def label(self) -> str:
        return self.variant if self.k is None else f"{self.variant}-{self.k}"


@dataclass
class MetricsReport:
    rows: list[MetricsRow]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            s = row.model_stats
            writer.writerow([
                row.instance,
                row.variant,
                "" if row.k is None else row.k,
                _fmt_num(row.lp_value, "{:.10g}"),
                _fmt_num(row.lp_time_ms, "{:.3f}"),
                s.rows, s.cols, s.nonzeros, s.size,
                f"{s.nonzero_density:.6f}",
                _fmt_num(row.bound_loss_pct, "{:.4f}"),
                _fmt_num(row.size_red_pct, "{:.4f}"),
                _fmt_num(row.time_red_pct, "{:.4f}"),
                _fmt_num(row.fa_red_pct, "{:.4f}"),
            ])
        return buf.getvalue()


def _fmt_num(value, spec):
    return "" if value is None else spec.format(value)


def _row_specs(variants, k_values):
    specs = [("da", None)]
    for variant in variants:
        if variant == "da":
            continue
        if variant == "fa":
            specs.append(("fa", None))
        elif variant in ("pa", "pai", "pae"):
            specs.extend((variant, k) for k in k_values)
        else:
            raise ValueError(f"unknown variant {variant!r}")
    return specs


def compare_formulations(
    inst: Instance,
    variants=ALL_VARIANTS,
    k_values=(1, 2, 3),
    time_runs: int = 3,
    jobs: int = 1,
    clip_si: bool = False,
) -> MetricsReport:
    """One LP-relaxation row per requested (variant, K).

    The disaggregated row is always computed first and serves as the
    baseline for loss and reduction columns.  Solver failures mark the row
    (empty metric fields) without stopping the run.  Wall times are the
    median of ``time_runs`` solves; keep ``jobs`` at 1 when timings matter.
    """
    specs = _row_specs(variants, k_values)
    agg_cache: dict[int, PartialAggregation] = {}

    def aggregation_for(k):
        if k not in agg_cache:
            agg_cache[k] = build_ksp_aggregation(inst, k)
        return agg_cache[k]

    def run(spec) -> MetricsRow:
        variant, k = spec
        if variant == "da":
            model = build_model(inst, build_da_aggregation(inst), "pa", clip_si=clip_si)
        elif variant == "fa":
            model = build_model(inst, build_fa_aggregation(inst), "pa", clip_si=clip_si)
        else:
            model = build_model(inst, aggregation_for(k), variant, clip_si=clip_si)
        model_stats = stats(model)
        relaxed = relax(model)
        times = []
        solution = None
        for _ in range(max(1, time_runs)):
            begin = time.monotonic()
            candidate = solve_lp(relaxed)
            times.append(time.monotonic() - begin)
            if solution is None:
                solution = candidate
        value = solution.objective if solution.status == OPTIMAL else None
        return MetricsRow(
            instance=inst.name or "instance",
            variant=variant,
            k=k,
            status=solution.status,
            lp_value=value,
            lp_time_ms=1000.0 * statistics.median(times),
            model_stats=model_stats,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run, specs))
    else:
        rows = [run(spec) for spec in specs]

    base = rows[0]
    fa_red = fa_reduction(inst)
    for row in rows:
        row.fa_red_pct = fa_red
        if base.lp_value is not None and base.lp_value > 0 and row.lp_value is not None:
            row.bound_loss_pct = bound_loss(base.lp_value, row.lp_value)
        row.size_red_pct = size_reduction(base.model_stats, row.model_stats)
        if base.lp_time_ms and row.lp_time_ms is not None and base.lp_time_ms > 0:
            row.time_red_pct = time_reduction(base.lp_time_ms, row.lp_time_ms)

    kept = rows if "da" in variants else rows[1:]
    return MetricsReport(kept)


def dump_points(report: MetricsReport) -> str:
    """Whitespace-separated trade-off points, one row per formulation, for
    external plotting tools."""
    lines = ["# label bound_loss_pct size_red_pct time_red_pct lp_time_ms lp_value"]
    for row in report.rows:
        lines.append(
            " ".join([
                row.label(),
                _fmt_num(row.bound_loss_pct, "{:.6f}") or "nan",
                _fmt_num(row.size_red_pct, "{:.6f}") or "nan",
                _fmt_num(row.time_red_pct, "{:.6f}") or "nan",
                _fmt_num(row.lp_time_ms, "{:.3f}") or "nan",
                _fmt_num(row.lp_value, "{:.10g}") or "nan",
            ])
        )
    return "\n".join(lines) + "\n"

"""Solver-independent linear models for the aggregation variants.

``build_model`` assembles the partially aggregated model for a given
aggregation: flow conservation per (dispersion, node), arc capacities linking
to the binary design variables, and one strong inequality per arc copy.  The
``pai`` variant adds forward/backward labeling inequalities at the nodes
where a commodity owns a dedicated arc copy; the ``pae`` variant expands such
nodes into a gadget of artificial nodes joined by cost-free z-flow variables.

Row and column names are deterministic functions of the instance indices
(1-based, matching the file formats), so two builds of the same inputs are
byte-identical and survive MPS round trips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .aggregation import (
    PartialAggregation,
    arc_groups,
    build_da_aggregation,
    build_fa_aggregation,
    gadget_sets,
    validate_aggregation,
)
from .errors import InvalidAggregation, ModelError
from .instances import Instance

INF = math.inf

VARIANTS = ("pa", "pai", "pae")

LESS = "<="
EQUAL = "="
GREATER = ">="

#: Constraint classes, keyed by row-name prefix.
ROW_CLASSES = {
    "fc": "flow_conservation",
    "cap": "capacity",
    "si": "strong_inequality",
    "fl": "labeling",
    "bl": "labeling",
    "gm": "gadget",
    "gi": "gadget",
    "go": "gadget",
    "cut": "cutset",
}


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float = 0.0
    ub: float = INF
    integer: bool = False
    obj: float = 0.0


@dataclass(frozen=True)
class Constraint:
    name: str
    sense: str
    rhs: float
    coeffs: tuple[tuple[str, float], ...]


@dataclass
class ModelIR:
    name: str
    variables: list[Variable]
    constraints: list[Constraint]

    def var_index(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.variables)}

    def check(self) -> None:
        names = set()
        for v in self.variables:
            if v.name in names:
                raise ModelError(f"duplicate variable name {v.name}")
            names.add(v.name)
        rows = set()
        for c in self.constraints:
            if c.name in rows:
                raise ModelError(f"duplicate constraint name {c.name}")
            rows.add(c.name)
            for var_name, _ in c.coeffs:
                if var_name not in names:
                    raise ModelError(f"row {c.name} references unknown variable {var_name}")


@dataclass(frozen=True)
class ModelStats:
    rows: int
    cols: int
    nonzeros: int
    by_class: tuple[tuple[str, int], ...]

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @property
    def nonzero_density(self) -> float:
        return self.nonzeros / self.size if self.size else 0.0

    def class_count(self, label: str) -> int:
        return dict(self.by_class).get(label, 0)


def group_token(group) -> str:
    return ".".join(str(k + 1) for k in group)


def x_name(b, arc, group) -> str:
    return f"x_b{b + 1}_a{arc.tail + 1}_{arc.head + 1}_g{group_token(group)}"


def y_name(arc) -> str:
    return f"y_a{arc.tail + 1}_{arc.head + 1}"


def z_in_name(b, node, inflow_set, mid_set) -> str:
    return f"z_b{b + 1}_n{node + 1}_i_g{group_token(inflow_set)}_g{group_token(mid_set)}"


def z_out_name(b, node, mid_set, outflow_set) -> str:
    return f"z_b{b + 1}_n{node + 1}_o_g{group_token(mid_set)}_g{group_token(outflow_set)}"


def _net_supply(inst, members, node) -> float:
    rhs = 0.0
    for k in members:
        c = inst.commodities[k]
        if c.origin == node:
            rhs += c.demand
        if c.destination == node:
            rhs -= c.demand
    return rhs


def build_model(
    inst: Instance,
    pa: PartialAggregation,
    variant: str = "pa",
    clip_si: bool = False,
    full_labeling: bool = False,
    drop_redundant_flow: bool = False,
    name: str = "",
) -> ModelIR:
    """Assemble the linear model for a validated partial aggregation.

    ``clip_si`` caps the strong-inequality coefficient at the arc capacity;
    ``full_labeling`` emits labeling rows for every (dispersion, commodity,
    node) instead of only where a dedicated arc copy is incident;
    ``drop_redundant_flow`` removes the plain conservation row at expanded
    gadget nodes, which the gadget rows imply.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    report = validate_aggregation(pa, inst)
    if not report.ok():
        raise InvalidAggregation(report)

    adj = inst.adjacency
    variables: list[Variable] = []
    constraints: list[Constraint] = []

    groups_on = {}  # (b, arc_idx) -> list of groups
    for b, disp in enumerate(pa.dispersions):
        for a in range(len(inst.arcs)):
            groups_on[b, a] = arc_groups(disp, a)

    for b, disp in enumerate(pa.dispersions):
        for a, arc in enumerate(inst.arcs):
            for group in groups_on[b, a]:
                variables.append(Variable(x_name(b, arc, group), obj=arc.flow_cost))
    for arc in inst.arcs:
        variables.append(Variable(y_name(arc), ub=1.0, integer=True, obj=arc.fixed_cost))

    gadgets = {}
    if variant == "pae":
        for b, disp in enumerate(pa.dispersions):
            for node in range(inst.n_nodes):
                g = gadget_sets(disp, inst, node)
                if not g.empty():
                    gadgets[b, node] = g
        for (b, node), g in sorted(gadgets.items()):
            for c_set in g.inflow:
                for d_set in g.intermediate:
                    if set(c_set) & set(d_set):
                        variables.append(Variable(z_in_name(b, node, c_set, d_set)))
            for d_set in g.intermediate:
                for c_set in g.outflow:
                    if set(d_set) & set(c_set):
                        variables.append(Variable(z_out_name(b, node, d_set, c_set)))

    # Flow conservation per (dispersion, node).
    for b, disp in enumerate(pa.dispersions):
        for node in range(inst.n_nodes):
            if drop_redundant_flow and (b, node) in gadgets:
                continue
            coeffs = []
            for a in adj.successors[node]:
                for group in groups_on[b, a]:
                    coeffs.append((x_name(b, inst.arcs[a], group), 1.0))
            for a in adj.predecessors[node]:
                for group in groups_on[b, a]:
                    coeffs.append((x_name(b, inst.arcs[a], group), -1.0))
            constraints.append(
                Constraint(
                    f"fc_b{b + 1}_n{node + 1}",
                    EQUAL,
                    _net_supply(inst, disp.members, node),
                    tuple(coeffs),
                )
            )

    # Arc capacity with the design variable.
    for a, arc in enumerate(inst.arcs):
        coeffs = []
        for b in range(len(pa.dispersions)):
            for group in groups_on[b, a]:
                coeffs.append((x_name(b, arc, group), 1.0))
        coeffs.append((y_name(arc), -arc.capacity))
        constraints.append(
            Constraint(f"cap_a{arc.tail + 1}_{arc.head + 1}", LESS, 0.0, tuple(coeffs))
        )

    # One strong inequality per arc copy.
    for b in range(len(pa.dispersions)):
        for a, arc in enumerate(inst.arcs):
            for group in groups_on[b, a]:
                bound = sum(inst.commodities[k].demand for k in group)
                if clip_si:
                    bound = min(bound, arc.capacity)
                constraints.append(
                    Constraint(
                        f"si_b{b + 1}_a{arc.tail + 1}_{arc.head + 1}_g{group_token(group)}",
                        LESS,
                        0.0,
                        ((x_name(b, arc, group), 1.0), (y_name(arc), -bound)),
                    )
                )

    if variant == "pai":
        constraints.extend(
            _labeling_rows(inst, pa, groups_on, full_labeling)
        )
    if variant == "pae":
        constraints.extend(_gadget_rows(inst, pa, groups_on, gadgets))

    model = ModelIR(name or f"{pa.scheme}_{variant}_{inst.name or 'model'}", variables, constraints)
    model.check()
    return model


def _labeling_rows(inst, pa, groups_on, full_labeling):
    """Forward/backward labeling inequalities.

    Flow that enters a node on a commodity's dedicated copy must leave on a
    copy whose set contains that commodity (forward); flow leaving on the
    dedicated copy must have arrived on a copy containing it (backward).
    Rows are emitted only where the commodity owns an incident dedicated
    copy; elsewhere they are implied by flow conservation.
    """
    adj = inst.adjacency
    rows = []
    for b, disp in enumerate(pa.dispersions):
        for k in disp.members:
            for node in range(inst.n_nodes):
                incident = list(adj.predecessors[node]) + list(adj.successors[node])
                if not full_labeling and not any(
                    a in disp.critical[k] for a in incident
                ):
                    continue
                c = inst.commodities[k]
                rhs = (c.demand if c.origin == node else 0.0) - (
                    c.demand if c.destination == node else 0.0
                )
                fwd = []
                bwd = []
                for a in adj.successors[node]:
                    arc = inst.arcs[a]
                    for group in groups_on[b, a]:
                        if k in group:
                            fwd.append((x_name(b, arc, group), 1.0))
                        if group == (k,):
                            bwd.append((x_name(b, arc, group), 1.0))
                for a in adj.predecessors[node]:
                    arc = inst.arcs[a]
                    for group in groups_on[b, a]:
                        if group == (k,):
                            fwd.append((x_name(b, arc, group), -1.0))
                        if k in group:
                            bwd.append((x_name(b, arc, group), -1.0))
                rows.append(
                    Constraint(f"fl_b{b + 1}_k{k + 1}_n{node + 1}", GREATER, rhs, tuple(fwd))
                )
                rows.append(
                    Constraint(f"bl_b{b + 1}_k{k + 1}_n{node + 1}", LESS, rhs, tuple(bwd))
                )
    return rows


def _gadget_rows(inst, pa, groups_on, gadgets):
    """Conservation rows of the node expansion.

    Each expanded node carries one row per intermediate node (dedicated-copy
    flow plus z-flow balances the local demand of its commodity set), one row
    per inflow aggregated node (z-flow out equals aggregated flow in), and
    one row per outflow aggregated node (aggregated flow out equals z-flow
    in).
    """
    adj = inst.adjacency
    rows = []
    for (b, node), g in sorted(gadgets.items()):
        disp = pa.dispersions[b]
        for d_set in g.intermediate:
            coeffs = []
            d_ids = set(d_set)
            for a in adj.successors[node]:
                arc = inst.arcs[a]
                if d_ids & set(disp.disaggregated_on(a)):
                    coeffs.append((x_name(b, arc, d_set), 1.0))
            for a in adj.predecessors[node]:
                arc = inst.arcs[a]
                if d_ids & set(disp.disaggregated_on(a)):
                    coeffs.append((x_name(b, arc, d_set), -1.0))
            for c_set in g.outflow:
                if d_ids & set(c_set):
                    coeffs.append((z_out_name(b, node, d_set, c_set), 1.0))
            for c_set in g.inflow:
                if d_ids & set(c_set):
                    coeffs.append((z_in_name(b, node, c_set, d_set), -1.0))
            rows.append(
                Constraint(
                    f"gm_b{b + 1}_n{node + 1}_g{group_token(d_set)}",
                    EQUAL,
                    _net_supply(inst, d_set, node),
                    tuple(coeffs),
                )
            )
        for c_set in g.inflow:
            coeffs = []
            for d_set in g.intermediate:
                if set(c_set) & set(d_set):
                    coeffs.append((z_in_name(b, node, c_set, d_set), 1.0))
            for a in adj.predecessors[node]:
                arc = inst.arcs[a]
                if disp.aggregated_on(a) == c_set:
                    coeffs.append((x_name(b, arc, c_set), -1.0))
            rows.append(
                Constraint(
                    f"gi_b{b + 1}_n{node + 1}_g{group_token(c_set)}",
                    EQUAL,
                    0.0,
                    tuple(coeffs),
                )
            )
        for c_set in g.outflow:
            coeffs = []
            for a in adj.successors[node]:
                arc = inst.arcs[a]
                if disp.aggregated_on(a) == c_set:
                    coeffs.append((x_name(b, arc, c_set), 1.0))
            for d_set in g.intermediate:
                if set(d_set) & set(c_set):
                    coeffs.append((z_out_name(b, node, d_set, c_set), -1.0))
            rows.append(
                Constraint(
                    f"go_b{b + 1}_n{node + 1}_g{group_token(c_set)}",
                    EQUAL,
                    0.0,
                    tuple(coeffs),
                )
            )
    return rows


def build_da_model(inst: Instance, **kwargs) -> ModelIR:
    """The fully disaggregated model: one layer per commodity."""
    return build_model(inst, build_da_aggregation(inst), "pa", **kwargs)


def build_fa_model(inst: Instance, **kwargs) -> ModelIR:
    """The fully aggregated model: one layer per origin node."""
    return build_model(inst, build_fa_aggregation(inst), "pa", **kwargs)


def add_cutset_constraints(model: ModelIR, inst: Instance) -> ModelIR:
    """Append single-node cut-set rows on the design variables.

    Outgoing capacity at a node must cover the demand originating there, and
    incoming capacity must cover the demand terminating there.  Rows with a
    zero right-hand side are omitted as vacuous.
    """
    adj = inst.adjacency
    extra = []
    for node in range(inst.n_nodes):
        supply = sum(c.demand for c in inst.commodities if c.origin == node)
        if supply > 0:
            coeffs = tuple(
                (y_name(inst.arcs[a]), inst.arcs[a].capacity) for a in adj.successors[node]
            )
            extra.append(Constraint(f"cut_src_n{node + 1}", GREATER, supply, coeffs))
        absorbed = sum(c.demand for c in inst.commodities if c.destination == node)
        if absorbed > 0:
            coeffs = tuple(
                (y_name(inst.arcs[a]), inst.arcs[a].capacity) for a in adj.predecessors[node]
            )
            extra.append(Constraint(f"cut_snk_n{node + 1}", GREATER, absorbed, coeffs))
    out = ModelIR(model.name, list(model.variables), list(model.constraints) + extra)
    out.check()
    return out


def relax(model: ModelIR) -> ModelIR:
    """Continuous relaxation: every binary variable becomes 0 <= y <= 1."""
    variables = [
        replace(v, integer=False, lb=max(v.lb, 0.0), ub=min(v.ub, 1.0)) if v.integer else v
        for v in model.variables
    ]
    return ModelIR(model.name, variables, list(model.constraints))


def stats(model: ModelIR) -> ModelStats:
    counts: dict[str, int] = {}
    nonzeros = 0
    for c in model.constraints:
        prefix = c.name.split("_", 1)[0]
        label = ROW_CLASSES.get(prefix, "other")
        counts[label] = counts.get(label, 0) + 1
        nonzeros += len(c.coeffs)
    return ModelStats(
        rows=len(model.constraints),
        cols=len(model.variables),
        nonzeros=nonzeros,
        by_class=tuple(sorted(counts.items())),
    )

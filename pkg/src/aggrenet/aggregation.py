"""Dispersions and partial aggregations of commodities.

A dispersion groups same-origin commodities and records, per commodity, the
set of arcs on which it is split out of the group (its critical arcs).  A
partial aggregation is a list of dispersions covering every commodity exactly
once.  The fully disaggregated and fully aggregated schemes are the two
extremes: critical arcs everywhere, and critical arcs nowhere.

All commodity sets are canonicalized as sorted tuples so that group identity,
model naming and iteration order are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import Unreachable
from .instances import Instance
from .paths import k_shortest_paths, surrogate_costs

Group = tuple[int, ...]


def _canon(ids) -> Group:
    return tuple(sorted(ids))


@dataclass
class Dispersion:
    """Same-origin commodity group with per-arc disaggregation choices.

    ``critical`` maps each member commodity to the arc indices on which it is
    disaggregated from the group.  On arc ``a`` the group therefore splits
    into the aggregated part (members without ``a`` in their critical set)
    and one singleton per member with ``a`` critical.
    """

    origin: int
    members: Group
    critical: dict[int, frozenset[int]]

    def destinations(self, inst: Instance) -> Group:
        return _canon({inst.commodities[k].destination for k in self.members})

    def disaggregated_on(self, arc_idx: int) -> Group:
        return _canon(k for k in self.members if arc_idx in self.critical[k])

    def aggregated_on(self, arc_idx: int) -> Group:
        return _canon(k for k in self.members if arc_idx not in self.critical[k])


@dataclass
class PartialAggregation:
    dispersions: list[Dispersion]
    scheme: str = "custom"

    def dispersion_of(self) -> dict[int, int]:
        """Commodity id -> dispersion index (first occurrence wins)."""
        owner = {}
        for b, disp in enumerate(self.dispersions):
            for k in disp.members:
                owner.setdefault(k, b)
        return owner


@dataclass(frozen=True)
class GadgetSets:
    """Artificial node families used by the node-expansion variant.

    ``split`` holds the commodities with an incident disaggregated arc at the
    node; ``intermediate`` the commodity sets of the intermediate nodes;
    ``inflow`` / ``outflow`` the distinct aggregated sets over incoming and
    outgoing arcs.  Empty ``split`` means the node keeps its plain shape.
    """

    split: Group
    intermediate: tuple[Group, ...]
    inflow: tuple[Group, ...]
    outflow: tuple[Group, ...]

    def empty(self) -> bool:
        return not self.split


@dataclass(frozen=True)
class AggValidationEntry:
    code: str
    message: str


@dataclass
class AggValidationReport:
    entries: list[AggValidationEntry] = field(default_factory=list)

    def ok(self) -> bool:
        return not self.entries

    def add(self, code, message):
        self.entries.append(AggValidationEntry(code, message))


def build_da_aggregation(inst: Instance) -> PartialAggregation:
    """One singleton dispersion per commodity, disaggregated on every arc."""
    all_arcs = frozenset(range(len(inst.arcs)))
    dispersions = [
        Dispersion(origin=c.origin, members=(k,), critical={k: all_arcs})
        for k, c in enumerate(inst.commodities)
    ]
    return PartialAggregation(dispersions, scheme="da")


def build_fa_aggregation(inst: Instance) -> PartialAggregation:
    """One dispersion per origin node, aggregated on every arc."""
    empty = frozenset()
    dispersions = []
    for origin in inst.origins():
        members = _canon(
            k for k, c in enumerate(inst.commodities) if c.origin == origin
        )
        dispersions.append(
            Dispersion(origin=origin, members=members, critical={k: empty for k in members})
        )
    return PartialAggregation(dispersions, scheme="fa")


def build_ksp_aggregation(inst: Instance, k_paths: int) -> PartialAggregation:
    """One dispersion per origin; each commodity disaggregated on the arcs of
    its ``k_paths`` cheapest surrogate-cost paths.

    ``k_paths = 0`` performs no path search and reproduces the fully
    aggregated structure.  Raises Unreachable naming the first commodity whose
    destination cannot be reached when ``k_paths >= 1``.
    """
    if k_paths < 0:
        raise ValueError("k_paths must be nonnegative")
    costs = surrogate_costs(inst)
    dispersions = []
    for origin in inst.origins():
        members = _canon(
            k for k, c in enumerate(inst.commodities) if c.origin == origin
        )
        critical = {}
        for k in members:
            dest = inst.commodities[k].destination
            if k_paths == 0:
                critical[k] = frozenset()
                continue
            try:
                paths = k_shortest_paths(inst, costs, origin, dest, k_paths)
            except Unreachable:
                raise Unreachable(origin, dest, commodity=k)
            critical[k] = frozenset(a for p in paths for a in p.arcs)
        dispersions.append(Dispersion(origin=origin, members=members, critical=critical))
    return PartialAggregation(dispersions, scheme=f"ksp:{k_paths}")


def arc_groups(disp: Dispersion, arc_idx: int) -> list[Group]:
    """Commodity sets carried by the copies of one arc in this dispersion's
    layer: the aggregated remainder (omitted when empty) plus one singleton
    per disaggregated member.  Sorted lexicographically.
    """
    groups = [(k,) for k in disp.disaggregated_on(arc_idx)]
    aggregated = disp.aggregated_on(arc_idx)
    if aggregated:
        groups.append(aggregated)
    return sorted(groups)


def gadget_sets(disp: Dispersion, inst: Instance, node: int) -> GadgetSets:
    """The four artificial-node families of the node expansion at ``node``.

    The inflow/outflow families collect the distinct nonempty aggregated sets
    over incoming respectively outgoing arcs.
    """
    adj = inst.adjacency
    incident = list(adj.predecessors[node]) + list(adj.successors[node])
    split = _canon({k for a in incident for k in disp.disaggregated_on(a)})
    if not split:
        return GadgetSets((), (), (), ())

    rest = tuple(k for k in disp.members if k not in split)
    intermediate = [(k,) for k in split]
    if rest:
        intermediate.append(rest)
    inflow = sorted(
        {disp.aggregated_on(a) for a in adj.predecessors[node]} - {()}
    )
    outflow = sorted(
        {disp.aggregated_on(a) for a in adj.successors[node]} - {()}
    )
    return GadgetSets(split, tuple(sorted(intermediate)), tuple(inflow), tuple(outflow))


def validate_aggregation(pa: PartialAggregation, inst: Instance) -> AggValidationReport:
    """Check unique membership, common origins, and arc index ranges."""
    report = AggValidationReport()
    n_arcs = len(inst.arcs)
    owner: dict[int, int] = {}
    for b, disp in enumerate(pa.dispersions):
        label = f"dispersion {b + 1}"
        if not disp.members:
            report.add("EmptyDispersion", f"{label}: no members")
        for k in disp.members:
            if not 0 <= k < len(inst.commodities):
                report.add("UnknownCommodity", f"{label}: commodity {k + 1} not in instance")
                continue
            if k in owner:
                report.add(
                    "DuplicateMembership",
                    f"commodity {k + 1} in dispersions {owner[k] + 1} and {b + 1}",
                )
            else:
                owner[k] = b
            if inst.commodities[k].origin != disp.origin:
                report.add(
                    "MixedOrigin",
                    f"{label}: commodity {k + 1} originates at node "
                    f"{inst.commodities[k].origin + 1}, not {disp.origin + 1}",
                )
            if k not in disp.critical:
                report.add("MissingCritical", f"{label}: no critical arc set for commodity {k + 1}")
                continue
            bad = [a for a in disp.critical[k] if not 0 <= a < n_arcs]
            if bad:
                report.add("UnknownArc", f"{label}: commodity {k + 1} lists arcs outside the instance")
    for k in range(len(inst.commodities)):
        if k not in owner:
            report.add("Uncovered", f"commodity {k + 1} belongs to no dispersion")
    return report


def network_size(pa: PartialAggregation, inst: Instance) -> tuple[int, int]:
    """(nodes, arcs) of the implied layered network: one full node copy per
    dispersion, one arc copy per group member per original arc."""
    n_nodes = len(pa.dispersions) * inst.n_nodes
    n_arcs = sum(
        len(arc_groups(disp, a))
        for disp in pa.dispersions
        for a in range(len(inst.arcs))
    )
    return n_nodes, n_arcs


AGG_MAGIC = "mcnd-agg"
AGG_VERSION = 1


def emit_aggregation(pa: PartialAggregation, inst: Instance) -> str:
    """Text form: per dispersion its origin and members, then one critical-arc
    record per member.  Arcs are written as 1-based ``tail-head`` tokens."""
    lines = [f"{AGG_MAGIC} {AGG_VERSION}"]
    for disp in pa.dispersions:
        members = " ".join(str(k + 1) for k in disp.members)
        lines.append(f"dispersion {disp.origin + 1} {members}")
        for k in disp.members:
            arcs = sorted(
                (inst.arcs[a].tail + 1, inst.arcs[a].head + 1) for a in disp.critical[k]
            )
            tokens = " ".join(f"{i}-{j}" for i, j in arcs)
            lines.append(f"critical {k + 1} {tokens}".rstrip())
    return "\n".join(lines) + "\n"


def parse_aggregation(text: str, inst: Instance) -> PartialAggregation:
    from .errors import MalformedHeader, NonNumericField, ParseError

    lines = [
        (no, raw.split("#", 1)[0].strip())
        for no, raw in enumerate(text.splitlines(), start=1)
    ]
    lines = [(no, line) for no, line in lines if line]
    if not lines or lines[0][1].split() != [AGG_MAGIC, str(AGG_VERSION)]:
        raise MalformedHeader(1, f"expected '{AGG_MAGIC} {AGG_VERSION}'")

    dispersions: list[Dispersion] = []
    current: dict | None = None

    def flush():
        if current is None:
            return
        missing = [k for k in current["members"] if k not in current["critical"]]
        if missing:
            raise ParseError(
                current["line"], f"missing critical record for commodity {missing[0] + 1}"
            )
        dispersions.append(
            Dispersion(current["origin"], _canon(current["members"]), current["critical"])
        )

    for no, line in lines[1:]:
        tokens = line.split()
        if tokens[0] == "dispersion":
            flush()
            if len(tokens) < 3:
                raise ParseError(no, "dispersion line needs an origin and members")
            try:
                origin = int(tokens[1]) - 1
                members = [int(t) - 1 for t in tokens[2:]]
            except ValueError:
                raise NonNumericField(no, "dispersion fields must be integers")
            current = {"origin": origin, "members": members, "critical": {}, "line": no}
        elif tokens[0] == "critical":
            if current is None:
                raise ParseError(no, "critical record before any dispersion")
            try:
                k = int(tokens[1]) - 1
            except (IndexError, ValueError):
                raise NonNumericField(no, "critical record needs a commodity id")
            arcs = set()
            for tok in tokens[2:]:
                try:
                    i_s, j_s = tok.split("-")
                    pair = (int(i_s) - 1, int(j_s) - 1)
                except ValueError:
                    raise NonNumericField(no, f"bad arc token {tok!r}, expected 'tail-head'")
                if pair not in inst.arc_index:
                    raise ParseError(no, f"arc {tok} not in the instance")
                arcs.add(inst.arc_index[pair])
            current["critical"][k] = frozenset(arcs)
        else:
            raise ParseError(no, f"unknown record {tokens[0]!r}")
    flush()
    return PartialAggregation(dispersions, scheme="file")

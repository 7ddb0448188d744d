"""Problem instances: parsing, validation, emission, and random generation.

An instance is a directed graph with per-arc flow cost, capacity and fixed
charge, plus a list of commodities (origin, destination, demand).  Node
indices are 0-based internally; all file formats and user-facing output use
1-based numbering.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property

from .errors import (
    CountMismatch,
    FieldCount,
    InfeasibleParameters,
    MalformedHeader,
    NonNumericField,
    NonPositiveDemand,
    ParseError,
    SelfLoop,
)

NATIVE_MAGIC = "mcnd"
NATIVE_VERSION = 1

#: Retries of the arc sample before random generation gives up on reachability.
MAX_ARC_RESAMPLES = 200


@dataclass(frozen=True)
class Arc:
    tail: int
    head: int
    flow_cost: float
    capacity: float
    fixed_cost: float


@dataclass(frozen=True)
class Commodity:
    origin: int
    destination: int
    demand: float


@dataclass(frozen=True)
class Adjacency:
    """Outgoing / incoming arc indices per node."""

    successors: tuple[tuple[int, ...], ...]
    predecessors: tuple[tuple[int, ...], ...]


@dataclass
class Instance:
    n_nodes: int
    arcs: list[Arc]
    commodities: list[Commodity]
    name: str = ""

    @cached_property
    def adjacency(self) -> Adjacency:
        succ = [[] for _ in range(self.n_nodes)]
        pred = [[] for _ in range(self.n_nodes)]
        for idx, arc in enumerate(self.arcs):
            succ[arc.tail].append(idx)
            pred[arc.head].append(idx)
        return Adjacency(
            tuple(tuple(s) for s in succ),
            tuple(tuple(p) for p in pred),
        )

    @cached_property
    def arc_index(self) -> dict[tuple[int, int], int]:
        return {(a.tail, a.head): i for i, a in enumerate(self.arcs)}

    def origins(self) -> list[int]:
        """Distinct commodity origin nodes, ascending."""
        return sorted({c.origin for c in self.commodities})

    def total_demand(self) -> float:
        return sum(c.demand for c in self.commodities)


@dataclass(frozen=True)
class ValidationEntry:
    code: str
    message: str


@dataclass
class ValidationReport:
    entries: list[ValidationEntry] = field(default_factory=list)
    origin_count: int = 0

    def ok(self) -> bool:
        return not self.entries

    def add(self, code, message):
        self.entries.append(ValidationEntry(code, message))


def _lines_with_numbers(text):
    """Yield (line_no, stripped) for content lines, dropping comments/blanks."""
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _ints(tokens, line_no, what):
    out = []
    for tok in tokens:
        try:
            out.append(int(tok))
        except ValueError:
            raise NonNumericField(line_no, f"expected integer {what}, got {tok!r}")
    return out


def _floats(tokens, line_no, what):
    out = []
    for tok in tokens:
        try:
            value = float(tok)
        except ValueError:
            raise NonNumericField(line_no, f"expected number {what}, got {tok!r}")
        if value != value or value in (float("inf"), float("-inf")):
            raise NonNumericField(line_no, f"{what} must be finite, got {tok!r}")
        out.append(value)
    return out


def _check_arc_line(line_no, tail, head, capacity):
    if tail == head:
        raise SelfLoop(line_no, f"self-loop arc on node {tail}")
    if capacity <= 0:
        raise ParseError(line_no, f"capacity must be positive, got {capacity}")


def _check_commodity_line(line_no, origin, dest, demand):
    if demand <= 0:
        raise NonPositiveDemand(line_no, f"demand must be positive, got {demand}")
    if origin == dest:
        raise ParseError(line_no, "origin and destination coincide")


def _check_node_ref(line_no, value, n_nodes, what):
    if not 1 <= value <= n_nodes:
        raise ParseError(line_no, f"{what} {value} outside 1..{n_nodes}")


def parse_dow(text: str, name: str = "") -> Instance:
    """Parse the DOW layout used by Canad-style distributions.

    Layout: optional title line, then ``|N| |A| |K|``, then ``|A|`` arc lines
    ``tail head cost capacity fixed [extra ignored]``, then ``|K|`` lines
    ``origin destination demand``.  Node numbers are 1-based.
    """
    lines = list(_lines_with_numbers(text))
    if not lines:
        raise MalformedHeader(1, "empty input")

    pos = 0
    header_no, header = lines[pos]
    tokens = header.split()
    if len(tokens) != 3 or not all(t.lstrip("+-").isdigit() for t in tokens):
        # First line is a title; the header must follow.
        title = header
        pos += 1
        if pos >= len(lines):
            raise MalformedHeader(header_no, "missing 'nodes arcs commodities' header")
        header_no, header = lines[pos]
        tokens = header.split()
        if len(tokens) != 3:
            raise MalformedHeader(
                header_no, f"expected 'nodes arcs commodities', got {header!r}"
            )
    else:
        title = ""
    n_nodes, n_arcs, n_comms = _ints(tokens, header_no, "header field")
    if n_nodes <= 0 or n_arcs < 0 or n_comms < 0:
        raise MalformedHeader(header_no, "header counts must be positive")
    pos += 1
    if len(lines) - pos < n_arcs + n_comms:
        raise CountMismatch(
            lines[-1][0],
            f"header promises {n_arcs} arcs and {n_comms} commodities, "
            f"only {len(lines) - pos} content lines follow",
        )

    arcs = []
    for _ in range(n_arcs):
        if pos >= len(lines):
            raise CountMismatch(
                lines[-1][0], f"expected {n_arcs} arc lines, found {len(arcs)}"
            )
        line_no, line = lines[pos]
        tokens = line.split()
        if len(tokens) < 5:
            raise FieldCount(
                line_no, f"arc line needs 'tail head cost capacity fixed', got {len(tokens)} fields"
            )
        tail, head = _ints(tokens[:2], line_no, "arc endpoint")
        cost, capacity, fixed = _floats(tokens[2:5], line_no, "arc attribute")
        _check_node_ref(line_no, tail, n_nodes, "arc tail")
        _check_node_ref(line_no, head, n_nodes, "arc head")
        _check_arc_line(line_no, tail, head, capacity)
        if cost < 0 or fixed < 0:
            raise ParseError(line_no, "arc costs must be nonnegative")
        arcs.append(Arc(tail - 1, head - 1, cost, capacity, fixed))
        pos += 1

    commodities = []
    for _ in range(n_comms):
        if pos >= len(lines):
            raise CountMismatch(
                lines[-1][0],
                f"expected {n_comms} commodity lines, found {len(commodities)}",
            )
        line_no, line = lines[pos]
        tokens = line.split()
        if len(tokens) != 3:
            raise FieldCount(
                line_no, f"commodity line needs 'origin destination demand', got {len(tokens)} fields"
            )
        origin, dest = _ints(tokens[:2], line_no, "commodity endpoint")
        (demand,) = _floats(tokens[2:], line_no, "demand")
        _check_node_ref(line_no, origin, n_nodes, "origin")
        _check_node_ref(line_no, dest, n_nodes, "destination")
        _check_commodity_line(line_no, origin, dest, demand)
        commodities.append(Commodity(origin - 1, dest - 1, demand))
        pos += 1

    if pos < len(lines):
        raise CountMismatch(
            lines[pos][0], "trailing content after the declared commodity lines"
        )
    return Instance(n_nodes, arcs, commodities, name=name or title)


def parse_native(text: str, name: str = "") -> Instance:
    """Parse the native format: magic line, counts, arc lines, commodity lines.

    Unlike :func:`parse_dow`, the arc lines are strict: exactly five fields.
    """
    lines = list(_lines_with_numbers(text))
    if not lines:
        raise MalformedHeader(1, "empty input")

    line_no, magic = lines[0]
    tokens = magic.split()
    if len(tokens) != 2 or tokens[0] != NATIVE_MAGIC:
        raise MalformedHeader(line_no, f"expected '{NATIVE_MAGIC} {NATIVE_VERSION}', got {magic!r}")
    version = _ints(tokens[1:], line_no, "format version")[0]
    if version != NATIVE_VERSION:
        raise MalformedHeader(line_no, f"unsupported format version {version}")

    if len(lines) < 2:
        raise MalformedHeader(line_no, "missing 'nodes arcs commodities' line")
    line_no, counts = lines[1]
    tokens = counts.split()
    if len(tokens) != 3:
        raise MalformedHeader(line_no, f"expected 'nodes arcs commodities', got {counts!r}")
    n_nodes, n_arcs, n_comms = _ints(tokens, line_no, "count")
    if n_nodes <= 0:
        raise MalformedHeader(line_no, "node count must be positive")

    pos = 2
    if len(lines) - pos < n_arcs + n_comms:
        raise CountMismatch(
            lines[-1][0],
            f"header promises {n_arcs} arcs and {n_comms} commodities, "
            f"only {len(lines) - pos} content lines follow",
        )
    arcs = []
    for _ in range(n_arcs):
        if pos >= len(lines):
            raise CountMismatch(
                lines[-1][0], f"expected {n_arcs} arc lines, found {len(arcs)}"
            )
        line_no, line = lines[pos]
        tokens = line.split()
        if len(tokens) != 5:
            raise FieldCount(
                line_no, f"arc line needs exactly 5 fields, got {len(tokens)}"
            )
        tail, head = _ints(tokens[:2], line_no, "arc endpoint")
        cost, capacity, fixed = _floats(tokens[2:], line_no, "arc attribute")
        _check_node_ref(line_no, tail, n_nodes, "arc tail")
        _check_node_ref(line_no, head, n_nodes, "arc head")
        _check_arc_line(line_no, tail, head, capacity)
        if cost < 0 or fixed < 0:
            raise ParseError(line_no, "arc costs must be nonnegative")
        arcs.append(Arc(tail - 1, head - 1, cost, capacity, fixed))
        pos += 1

    commodities = []
    for _ in range(n_comms):
        if pos >= len(lines):
            raise CountMismatch(
                lines[-1][0],
                f"expected {n_comms} commodity lines, found {len(commodities)}",
            )
        line_no, line = lines[pos]
        tokens = line.split()
        if len(tokens) != 3:
            raise FieldCount(
                line_no, f"commodity line needs exactly 3 fields, got {len(tokens)}"
            )
        origin, dest = _ints(tokens[:2], line_no, "commodity endpoint")
        (demand,) = _floats(tokens[2:], line_no, "demand")
        _check_node_ref(line_no, origin, n_nodes, "origin")
        _check_node_ref(line_no, dest, n_nodes, "destination")
        _check_commodity_line(line_no, origin, dest, demand)
        commodities.append(Commodity(origin - 1, dest - 1, demand))
        pos += 1

    if pos < len(lines):
        raise CountMismatch(lines[pos][0], "trailing content after commodity lines")
    return Instance(n_nodes, arcs, commodities, name=name)


def _fmt(value: float) -> str:
    # repr round-trips floats exactly; integers print without the trailing .0
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def emit_native(inst: Instance) -> str:
    lines = [f"{NATIVE_MAGIC} {NATIVE_VERSION}"]
    lines.append(f"{inst.n_nodes} {len(inst.arcs)} {len(inst.commodities)}")
    for a in inst.arcs:
        lines.append(
            f"{a.tail + 1} {a.head + 1} {_fmt(a.flow_cost)} {_fmt(a.capacity)} {_fmt(a.fixed_cost)}"
        )
    for c in inst.commodities:
        lines.append(f"{c.origin + 1} {c.destination + 1} {_fmt(c.demand)}")
    return "\n".join(lines) + "\n"


def validate(inst: Instance) -> ValidationReport:
    """Report every invariant violation; an empty report means a valid instance.

    The report also carries the number of distinct commodity origins, which
    drives the size of the fully aggregated formulation.
    """
    report = ValidationReport()
    seen_pairs = {}
    for idx, a in enumerate(inst.arcs):
        where = f"arc {idx + 1} ({a.tail + 1},{a.head + 1})"
        if not (0 <= a.tail < inst.n_nodes and 0 <= a.head < inst.n_nodes):
            report.add("ArcEndpointRange", f"{where}: endpoint outside 1..{inst.n_nodes}")
            continue
        if a.tail == a.head:
            report.add("SelfLoop", f"{where}: self-loop")
        key = (a.tail, a.head)
        if key in seen_pairs:
            report.add("DuplicateArc", f"{where}: duplicate of arc {seen_pairs[key] + 1}")
        else:
            seen_pairs[key] = idx
        if a.flow_cost < 0:
            report.add("NegativeFlowCost", f"{where}: flow cost {a.flow_cost}")
        if a.fixed_cost < 0:
            report.add("NegativeFixedCost", f"{where}: fixed cost {a.fixed_cost}")
        if a.capacity <= 0:
            report.add("NonPositiveCapacity", f"{where}: capacity {a.capacity}")
    for idx, c in enumerate(inst.commodities):
        where = f"commodity {idx + 1}"
        if not (0 <= c.origin < inst.n_nodes and 0 <= c.destination < inst.n_nodes):
            report.add("CommodityEndpointRange", f"{where}: endpoint outside 1..{inst.n_nodes}")
            continue
        if c.origin == c.destination:
            report.add("SameOriginDestination", f"{where}: origin equals destination")
        if c.demand <= 0:
            report.add("NonPositiveDemand", f"{where}: demand {c.demand}")
    report.origin_count = len({c.origin for c in inst.commodities})
    return report


def _reachable_from(inst: Instance, source: int) -> set[int]:
    seen = {source}
    stack = [source]
    adj = inst.adjacency
    while stack:
        node = stack.pop()
        for arc_idx in adj.successors[node]:
            head = inst.arcs[arc_idx].head
            if head not in seen:
                seen.add(head)
                stack.append(head)
    return seen


def all_reachable(inst: Instance) -> bool:
    """True when every commodity's destination is reachable from its origin."""
    cache: dict[int, set[int]] = {}
    for c in inst.commodities:
        if c.origin not in cache:
            cache[c.origin] = _reachable_from(inst, c.origin)
        if c.destination not in cache[c.origin]:
            return False
    return True


def generate_random(
    n_nodes: int,
    arc_density: float,
    n_commodities: int,
    capacity_ratio: float = 1.5,
    fixed_to_flow_ratio: float = 5.0,
    seed: int = 0,
    name: str = "",
) -> Instance:
    """Generate a deterministic random instance.

    Commodity endpoints are drawn first; the arc set is then resampled until
    every destination is reachable from its origin (bounded retries).
    Capacities are scaled from total demand by ``capacity_ratio``, with a
    floor above the largest single demand so any one commodity fits any arc.
    """
    if n_nodes < 2 or n_commodities < 1:
        raise InfeasibleParameters("need at least 2 nodes and 1 commodity")
    if not 0 < arc_density <= 1:
        raise InfeasibleParameters(f"arc density {arc_density} outside (0, 1]")
    if capacity_ratio <= 0 or fixed_to_flow_ratio < 0:
        raise InfeasibleParameters("ratios must be positive")

    rng = random.Random(seed)
    commodities = []
    for _ in range(n_commodities):
        origin = rng.randrange(n_nodes)
        dest = rng.randrange(n_nodes - 1)
        if dest >= origin:
            dest += 1
        commodities.append(Commodity(origin, dest, round(rng.uniform(1.0, 10.0), 3)))

    total_demand = sum(c.demand for c in commodities)
    max_demand = max(c.demand for c in commodities)
    mean_demand = total_demand / n_commodities

    pairs = None
    for _ in range(MAX_ARC_RESAMPLES):
        candidate = [
            (i, j)
            for i in range(n_nodes)
            for j in range(n_nodes)
            if i != j and rng.random() < arc_density
        ]
        probe = Instance(n_nodes, [Arc(i, j, 0.0, 1.0, 0.0) for i, j in candidate], commodities)
        if all_reachable(probe):
            pairs = candidate
            break
    if pairs is None:
        raise InfeasibleParameters(
            f"could not reach all destinations with density {arc_density} "
            f"after {MAX_ARC_RESAMPLES} arc samples"
        )

    arcs = []
    for i, j in pairs:
        cost = round(rng.uniform(1.0, 10.0), 3)
        fixed = round(fixed_to_flow_ratio * cost * mean_demand * rng.uniform(0.5, 1.5), 3)
        capacity = round(
            max(1.05 * max_demand, capacity_ratio * total_demand * rng.uniform(0.4, 1.0)), 3
        )
        arcs.append(Arc(i, j, cost, capacity, fixed))

    label = name or f"rand_n{n_nodes}_k{n_commodities}_s{seed}"
    return Instance(n_nodes, arcs, commodities, name=label)

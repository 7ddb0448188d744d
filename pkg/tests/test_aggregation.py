import pytest

from aggrenet.aggregation import (
    Dispersion,
    PartialAggregation,
    arc_groups,
    build_da_aggregation,
    build_fa_aggregation,
    build_ksp_aggregation,
    emit_aggregation,
    gadget_sets,
    network_size,
    parse_aggregation,
    validate_aggregation,
)
from aggrenet.errors import Unreachable
from aggrenet.instances import Arc, Commodity, Instance
from aggrenet.paths import k_shortest_paths, shortest_path, surrogate_costs

from hubs import gadget_hub


def test_da_builder_singletons(single_origin):
    pa = build_da_aggregation(single_origin)
    assert len(pa.dispersions) == 4
    for k, disp in enumerate(pa.dispersions):
        assert disp.members == (k,)
        for a in range(len(single_origin.arcs)):
            assert disp.disaggregated_on(a) == (k,)
            assert disp.aggregated_on(a) == ()
            assert arc_groups(disp, a) == [(k,)]


def test_fa_builder_one_dispersion_per_origin(single_origin, triangle):
    pa = build_fa_aggregation(single_origin)
    assert len(pa.dispersions) == 1
    disp = pa.dispersions[0]
    assert disp.members == (0, 1, 2, 3)
    for a in range(len(single_origin.arcs)):
        assert disp.disaggregated_on(a) == ()
        assert arc_groups(disp, a) == [(0, 1, 2, 3)]
    assert len(build_fa_aggregation(triangle).dispersions) == 2


def test_fa_equals_da_when_origins_distinct(triangle):
    fa = build_fa_aggregation(triangle)
    da = build_da_aggregation(triangle)
    assert [d.members for d in fa.dispersions] == [d.members for d in da.dispersions]


def test_destinations(single_origin):
    pa = build_fa_aggregation(single_origin)
    assert pa.dispersions[0].destinations(single_origin) == (3, 5, 6, 7)


def test_ksp_zero_matches_fa(corpus):
    for inst in corpus:
        ksp0 = build_ksp_aggregation(inst, 0)
        fa = build_fa_aggregation(inst)
        assert [d.members for d in ksp0.dispersions] == [d.members for d in fa.dispersions]
        for d0, d1 in zip(ksp0.dispersions, fa.dispersions):
            assert all(not d0.critical[k] for k in d0.members)
            assert d0.origin == d1.origin


def test_ksp_critical_arcs_are_path_arcs(corpus):
    inst = corpus[1]
    costs = surrogate_costs(inst)
    pa = build_ksp_aggregation(inst, 2)
    for disp in pa.dispersions:
        for k in disp.members:
            com = inst.commodities[k]
            paths = k_shortest_paths(inst, costs, com.origin, com.destination, 2)
            expected = frozenset(a for p in paths for a in p.arcs)
            assert disp.critical[k] == expected


def test_ksp_single_path_disaggregation():
    # two same-origin commodities with disjoint cheapest paths
    arcs = [
        Arc(0, 1, 1.0, 10.0, 0.0),  # 1->2 toward dest 2
        Arc(0, 2, 1.0, 10.0, 0.0),  # 1->3 toward dest 3
        Arc(1, 2, 5.0, 10.0, 0.0),
        Arc(2, 1, 5.0, 10.0, 0.0),
    ]
    inst = Instance(3, arcs, [Commodity(0, 1, 1.0), Commodity(0, 2, 1.0)])
    pa = build_ksp_aggregation(inst, 1)
    disp = pa.dispersions[0]
    assert disp.critical[0] == frozenset({0})
    assert disp.critical[1] == frozenset({1})
    assert disp.disaggregated_on(0) == (0,)
    assert disp.aggregated_on(0) == (1,)


def test_ksp_monotone_in_k(corpus):
    for inst in corpus[:4]:
        aggs = {k: build_ksp_aggregation(inst, k) for k in (0, 1, 2, 3)}
        for k in (0, 1, 2):
            for d_lo, d_hi in zip(aggs[k].dispersions, aggs[k + 1].dispersions):
                for member in d_lo.members:
                    assert d_lo.critical[member] <= d_hi.critical[member]


def test_ksp_unreachable_names_commodity():
    inst = Instance(
        3,
        [Arc(0, 1, 1.0, 5.0, 1.0)],
        [Commodity(0, 1, 1.0), Commodity(0, 2, 2.0)],
    )
    with pytest.raises(Unreachable) as err:
        build_ksp_aggregation(inst, 1)
    assert err.value.commodity == 1
    # no path search for k=0, so the same instance aggregates fine
    assert build_ksp_aggregation(inst, 0).dispersions


def test_arc_groups_partition(corpus):
    for inst in corpus[:4]:
        for pa in (build_ksp_aggregation(inst, 1), build_ksp_aggregation(inst, 2)):
            for disp in pa.dispersions:
                for a in range(len(inst.arcs)):
                    groups = arc_groups(disp, a)
                    merged = sorted(k for g in groups for k in g)
                    assert merged == list(disp.members)
                    assert len({g for g in groups}) == len(groups)


def test_arc_groups_split_hub():
    inst, pa, _ = gadget_hub()
    disp = pa.dispersions[0]
    assert arc_groups(disp, 0) == [(0,), (1, 2, 3)]
    assert arc_groups(disp, 1) == [(0,), (1,), (2, 3)]
    assert arc_groups(disp, 2) == [(0, 2, 3), (1,)]
    assert arc_groups(disp, 4) == [(0, 1, 2, 3)]


def test_gadget_sets_worked_hub():
    inst, pa, _ = gadget_hub()
    g = gadget_sets(pa.dispersions[0], inst, 2)
    assert g.split == (0, 1)
    assert g.intermediate == ((0,), (1,), (2, 3))
    assert g.inflow == ((1, 2, 3), (2, 3))
    assert g.outflow == ((0, 2, 3),)


def test_gadget_sets_empty_when_aggregated(single_origin):
    pa = build_fa_aggregation(single_origin)
    for node in range(single_origin.n_nodes):
        assert gadget_sets(pa.dispersions[0], single_origin, node).empty()


def test_gadget_sets_singleton_dispersion(single_arc):
    pa = build_da_aggregation(single_arc)
    g = gadget_sets(pa.dispersions[0], single_arc, 0)
    assert g.split == (0,)
    assert g.intermediate == ((0,),)
    assert g.inflow == ()
    assert g.outflow == ()


def test_validate_aggregation_builders(corpus):
    for inst in corpus:
        for pa in (
            build_da_aggregation(inst),
            build_fa_aggregation(inst),
            build_ksp_aggregation(inst, 2),
        ):
            assert validate_aggregation(pa, inst).ok()


def test_validate_aggregation_duplicate_membership(triangle):
    disp_a = Dispersion(0, (0,), {0: frozenset()})
    disp_b = Dispersion(1, (0, 1), {0: frozenset(), 1: frozenset()})
    report = validate_aggregation(PartialAggregation([disp_a, disp_b]), triangle)
    codes = [e.code for e in report.entries]
    assert "DuplicateMembership" in codes
    assert "MixedOrigin" in codes  # commodity 1 does not originate at node 2


def test_validate_aggregation_uncovered(triangle):
    pa = PartialAggregation([Dispersion(0, (0,), {0: frozenset()})])
    assert "Uncovered" in [e.code for e in validate_aggregation(pa, triangle).entries]


def test_network_size_formulas(corpus):
    for inst in corpus:
        n_k, n_a = len(inst.commodities), len(inst.arcs)
        da_nodes, da_arcs = network_size(build_da_aggregation(inst), inst)
        assert da_nodes == n_k * inst.n_nodes
        assert da_arcs == n_k * n_a
        fa_nodes, fa_arcs = network_size(build_fa_aggregation(inst), inst)
        origins = len(inst.origins())
        assert fa_nodes == origins * inst.n_nodes
        assert fa_arcs == origins * n_a
        pa = build_ksp_aggregation(inst, 2)
        pa_nodes, pa_arcs = network_size(pa, inst)
        assert pa_nodes == len(pa.dispersions) * inst.n_nodes
        assert fa_arcs <= pa_arcs <= da_arcs


def test_aggregation_file_round_trip(corpus):
    inst = corpus[2]
    for pa in (
        build_da_aggregation(inst),
        build_fa_aggregation(inst),
        build_ksp_aggregation(inst, 2),
    ):
        text = emit_aggregation(pa, inst)
        again = parse_aggregation(text, inst)
        assert [d.origin for d in again.dispersions] == [d.origin for d in pa.dispersions]
        assert [d.members for d in again.dispersions] == [d.members for d in pa.dispersions]
        for d0, d1 in zip(pa.dispersions, again.dispersions):
            assert d0.critical == d1.critical
        assert emit_aggregation(again, inst) == text

import pytest

from aggrenet.instances import Arc, Commodity, Instance, generate_random


@pytest.fixture
def single_arc():
    """One arc, one commodity: cheapest closed form is flow 5 plus the fixed
    charge, with the strong inequality forcing the arc fully open."""
    return Instance(
        2,
        [Arc(0, 1, 1.0, 10.0, 4.0)],
        [Commodity(0, 1, 5.0)],
        name="single_arc",
    )


@pytest.fixture
def two_commodity_arc():
    """Two same-pair commodities on one zero-flow-cost arc."""
    return Instance(
        2,
        [Arc(0, 1, 0.0, 10.0, 10.0)],
        [Commodity(0, 1, 2.0), Commodity(0, 1, 3.0)],
        name="two_commodity_arc",
    )


@pytest.fixture
def triangle():
    """Three nodes, three arcs, two commodities with distinct origins."""
    return Instance(
        3,
        [
            Arc(0, 1, 1.0, 8.0, 6.0),
            Arc(1, 2, 1.0, 8.0, 6.0),
            Arc(0, 2, 3.0, 8.0, 10.0),
        ],
        [Commodity(0, 2, 2.0), Commodity(1, 2, 3.0)],
        name="triangle",
    )


@pytest.fixture
def single_origin():
    """Eight nodes, ten arcs, four commodities all leaving node 1."""
    pairs = [(1, 2), (1, 3), (2, 4), (2, 5), (3, 5), (3, 6), (5, 7), (5, 8), (7, 4), (8, 6)]
    arcs = [Arc(i - 1, j - 1, 1.0, 6.0, 3.0) for i, j in pairs]
    comms = [Commodity(0, d - 1, 1.0) for d in (7, 8, 4, 6)]
    return Instance(8, arcs, comms, name="single_origin")


def small_corpus():
    """Deterministic assorted instances for module-level property tests."""
    recipes = [
        (4, 0.7, 3, 1.2, 3.0, 101),
        (5, 0.5, 4, 1.0, 5.0, 102),
        (5, 0.8, 6, 2.0, 2.0, 103),
        (6, 0.4, 5, 1.0, 6.0, 104),
        (6, 0.6, 8, 1.5, 4.0, 105),
        (7, 0.35, 6, 0.9, 5.0, 106),
        (7, 0.5, 10, 1.8, 3.0, 107),
        (8, 0.3, 7, 1.2, 4.0, 108),
    ]
    out = []
    for n, dens, k, cap, fx, seed in recipes:
        out.append(generate_random(n, dens, k, capacity_ratio=cap,
                                   fixed_to_flow_ratio=fx, seed=seed))
    return out


@pytest.fixture(scope="session")
def corpus():
    return small_corpus()

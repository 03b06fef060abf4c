"""Shared fixtures: the small exact test-set graphs used across the suite."""

import pytest

from isinglab.graphs import (
    complete_graph,
    cycle_graph,
    disjoint_union,
    path_graph,
    random_regular,
)


@pytest.fixture(scope="session")
def k2():
    return complete_graph(2)


@pytest.fixture(scope="session")
def k3():
    return complete_graph(3)


@pytest.fixture(scope="session")
def k4():
    return complete_graph(4)


@pytest.fixture(scope="session")
def p3():
    return path_graph(3)


@pytest.fixture(scope="session")
def rr10():
    return random_regular(10, 3, seed=7, simple=True)


@pytest.fixture(scope="session")
def two_c6():
    return disjoint_union(cycle_graph(6), 2).graph


def exact_test_set():
    """The fixed exact-oracle graph family (<= 18 free vertices each)."""
    graphs = {
        "K2": complete_graph(2),
        "K3": complete_graph(3),
        "K4": complete_graph(4),
        "P3": path_graph(3),
    }
    for n in (5, 6, 7, 8):
        graphs[f"C{n}"] = cycle_graph(n)
    graphs["RR10"] = random_regular(10, 3, seed=7, simple=True)
    graphs["2xC6"] = disjoint_union(cycle_graph(6), 2).graph
    return graphs

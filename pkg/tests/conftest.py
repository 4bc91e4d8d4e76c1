import json

import pytest

from eonbench.topology import builtin_topology, load_topology


def make_topology(name, nodes, edges, directed=False):
    doc = {
        "name": name,
        "nodes": nodes,
        "links": [{"a": a, "b": b, "length_km": 1.0, "directed": directed} for a, b in edges],
    }
    return load_topology(json.dumps(doc))


@pytest.fixture(scope="session")
def triangle():
    return make_topology("triangle", ["A", "B", "C"], [("A", "B"), ("B", "C"), ("A", "C")])


@pytest.fixture(scope="session")
def chain():
    return make_topology("chain", ["A", "B", "C"], [("A", "B"), ("B", "C")])


@pytest.fixture(scope="session")
def six_node():
    return builtin_topology("six_node")


@pytest.fixture(scope="session")
def cost239():
    return builtin_topology("cost239")

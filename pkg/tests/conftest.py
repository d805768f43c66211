import random

import numpy as np
import pytest

import graphscan as gs

# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_connected_graph(rng: random.Random, n: int, extra_edges: int):
    """Random connected graph: random spanning tree plus random extra edges."""
    pairs = []
    order = list(range(n))
    rng.shuffle(order)
    for i in range(1, n):
        pairs.append((order[i], rng.choice(order[:i])))
    for _ in range(extra_edges):
        u, w = rng.randrange(n), rng.randrange(n)
        if u != w:
            pairs.append((u, w))
    # route labels through strings to exercise the dense remapping
    return gs.graph_from_pairs([(str(u), str(w)) for u, w in pairs],
                               label_map={str(i): i for i in range(n)})


def random_graph(rng: random.Random, n: int, m: int):
    """Random graph, possibly disconnected."""
    pairs = [(rng.randrange(n), rng.randrange(n)) for _ in range(m)]
    pairs = [(u, w) for u, w in pairs if u != w]
    if not pairs:
        pairs = [(0, min(1, n - 1))] if n > 1 else []
    return gs.graph_from_pairs([(str(u), str(w)) for u, w in pairs],
                               label_map={str(i): i for i in range(n)})


def adjacency_dict(g):
    return {v: set(int(w) for w in g.neighbors(v)) for v in range(g.n)}


def nested_sets(adj, v, depth):
    """Literal recursive nested neighborhoods: N_0 = {v}, N_i = neighbors(N_{i-1})."""
    sets = [{v}]
    for _ in range(depth):
        sets.append({w for u in sets[-1] for w in adj[u]})
    return sets


def oracle_layers(adj, v, depth):
    """Layers derived from the literal nested sets: N_i minus all earlier N_m."""
    sets = nested_sets(adj, v, depth)
    layers = [set(sets[0])]
    union = set(sets[0])
    for i in range(1, depth + 1):
        layers.append(sets[i] - union)
        union |= sets[i]
    return sets, layers


def oracle_exact_members(adj, v, m):
    """Independent exact-m-neighborhood: full inner layers + smallest-id tail.

    Returns None when the reachable component has fewer than m vertices.
    """
    union = {v}
    layers = [{v}]
    while len(union) < m:
        nxt = {w for u in layers[-1] for w in adj[u]} - union
        if not nxt:
            return None
        layers.append(nxt)
        union |= nxt
    inner = set().union(*layers[:-1]) if len(layers) > 1 else set()
    need = m - len(inner)
    return sorted(inner | set(sorted(layers[-1])[:need]))


@pytest.fixture
def two_triangle_graph():
    """Two triangles joined by one edge; classic separated-levels case."""
    pairs = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]
    g = gs.graph_from_pairs([(str(u), str(w)) for u, w in pairs],
                            label_map={str(i): i for i in range(6)})
    return gs.set_observations(g, np.array([0.0, 0.0, 0.0, 9.0, 9.0, 9.0]))

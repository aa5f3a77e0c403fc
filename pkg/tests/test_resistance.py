"""Effective resistance tests: known networks, dual solvers, tree laws."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from conftest import random_lattice_tree

from ust3d.resistance import (
    effective_resistance,
    effective_resistance_exact,
    pairwise_resistance,
    point_to_set_resistance,
    tree_resistance,
)
from ust3d.wilson import (
    FiniteGraph,
    complete_graph,
    cycle_graph,
    path_graph,
    star_graph,
)


# ---------------------------------------------------------------------------
# known values
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("graph,a,b,expected", [
    (path_graph(4), 0, 3, Fraction(3)),          # three unit edges in series
    (cycle_graph(4), 0, 1, Fraction(3, 4)),      # 1 parallel to 3
    (cycle_graph(4), 0, 2, Fraction(1)),         # 2 parallel to 2
    (complete_graph(3), 0, 1, Fraction(2, 3)),
    (complete_graph(4), 0, 1, Fraction(1, 2)),
    (star_graph(4), 1, 2, Fraction(2)),          # through the hub
])
def test_known_two_point_values(graph, a, b, expected):
    assert effective_resistance_exact(graph, [a], [b]) == expected
    assert effective_resistance(graph, [a], [b]) == pytest.approx(
        float(expected), abs=1e-12)


def test_known_set_values():
    g = star_graph(4)  # hub 0, leaves 1..4
    assert effective_resistance_exact(g, [0], [1, 2, 3, 4]) == Fraction(1, 4)
    assert effective_resistance_exact(g, [1], [2, 3, 4]) == Fraction(1) + Fraction(1, 3)
    c = cycle_graph(5)  # grounding {2,3} shorts their edge: 2 parallel to 2
    assert effective_resistance_exact(c, [0], [2, 3]) == Fraction(1)


def test_symmetry_in_terminal_sets():
    g = cycle_graph(6)
    assert effective_resistance(g, [0, 1], [3]) == pytest.approx(
        effective_resistance(g, [3], [0, 1]), abs=1e-12)


def test_terminal_validation():
    g = complete_graph(3)
    with pytest.raises(ValueError):
        effective_resistance(g, [], [1])
    with pytest.raises(ValueError):
        effective_resistance(g, [0], [0, 1])
    with pytest.raises(ValueError):
        effective_resistance(g, [0], [5])
    with pytest.raises(ValueError):
        effective_resistance_exact(g, [0, 1], [1])


# ---------------------------------------------------------------------------
# float vs exact solver
# ---------------------------------------------------------------------------

def _random_connected_graph(n: int, extra: int, seed: int) -> FiniteGraph:
    rng = np.random.default_rng(seed)
    edges = {(int(rng.integers(0, v)), v) for v in range(1, n)}
    while len(edges) < n - 1 + extra:
        u, v = (int(a) for a in rng.integers(0, n, size=2))
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return FiniteGraph(n, sorted(edges))


@pytest.mark.parametrize("seed", range(8))
def test_float_solver_matches_exact_solver(seed):
    g = _random_connected_graph(10, 6, seed)
    rng = np.random.default_rng(100 + seed)
    a, b = (int(v) for v in rng.choice(10, size=2, replace=False))
    exact = effective_resistance_exact(g, [a], [b])
    assert effective_resistance(g, [a], [b]) == pytest.approx(
        float(exact), rel=1e-11)


def test_rayleigh_monotonicity():
    # adding an edge can only lower (or keep) the effective resistance
    rng = np.random.default_rng(0)
    for seed in range(5):
        g = _random_connected_graph(8, 3, seed)
        non_edges = [(u, v) for u in range(8) for v in range(u + 1, 8)
                     if (u, v) not in set(g.edges)]
        u, v = non_edges[int(rng.integers(0, len(non_edges)))]
        g2 = FiniteGraph(8, list(g.edges) + [(u, v)])
        before = effective_resistance_exact(g, [0], [7])
        after = effective_resistance_exact(g2, [0], [7])
        assert after <= before


# ---------------------------------------------------------------------------
# trees
# ---------------------------------------------------------------------------

def _tree_as_finite_graph(tree) -> FiniteGraph:
    edges = [(min(v, int(p)), max(v, int(p)))
             for v, p in enumerate(tree.parent) if p >= 0]
    return FiniteGraph(tree.n, edges)


@pytest.mark.parametrize("seed", range(5))
def test_tree_resistance_equals_distance_and_laplacian_solve(seed):
    tree = random_lattice_tree(120, seed)
    g = _tree_as_finite_graph(tree)
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(10):
        a, b = (int(v) for v in rng.choice(tree.n, size=2, replace=False))
        pa, pb = tree.point_of(a), tree.point_of(b)
        pairs.append((pa, pb))
        r = tree_resistance(tree, pa, pb)
        assert r == float(tree.distance(pa, pb))  # series law, exact
        assert effective_resistance(g, [a], [b]) == pytest.approx(r, rel=1e-9)
    solved = pairwise_resistance(tree, pairs)
    series = np.array([tree_resistance(tree, *p) for p in pairs])
    assert np.allclose(solved, series, rtol=1e-9, atol=1e-9)


def test_tree_resistance_same_point_is_zero():
    tree = random_lattice_tree(30, 1)
    p = tree.point_of(4)
    assert tree_resistance(tree, p, p) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_point_to_set_matches_dirichlet_solver(seed):
    tree = random_lattice_tree(90, 10 + seed)
    g = _tree_as_finite_graph(tree)
    rng = np.random.default_rng(seed)
    ids = rng.choice(tree.n, size=6, replace=False)
    x = int(ids[0])
    B = [int(v) for v in ids[1:]]
    folded = point_to_set_resistance(
        tree, tree.point_of(x), [tree.point_of(v) for v in B])
    exact = effective_resistance_exact(g, [x], B)
    assert folded == pytest.approx(float(exact), rel=1e-12)


def test_point_to_set_edge_cases():
    tree = random_lattice_tree(30, 2)
    x = tree.point_of(5)
    assert point_to_set_resistance(tree, x, [x]) == 0.0
    with pytest.raises(ValueError):
        point_to_set_resistance(tree, x, [])
    # singleton target reduces to the series law
    y = tree.point_of(20)
    assert point_to_set_resistance(tree, x, [y]) == pytest.approx(
        tree_resistance(tree, x, y), rel=1e-12)
    # adding points to B can only lower the resistance
    z = tree.point_of(11)
    assert point_to_set_resistance(tree, x, [y, z]) <= point_to_set_resistance(
        tree, x, [y]) + 1e-12

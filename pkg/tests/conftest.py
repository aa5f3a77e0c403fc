"""Shared fixtures: kernel warmup and small random lattice trees."""

from __future__ import annotations

import numpy as np
import pytest

from ust3d.lerw import loop_erase, sample_M_n
from ust3d.probes import TubeGeometry, tube_a1_probability, tube_event_check
from ust3d.srw import RngConfig, run_walk, step_cap
from ust3d.treewalk import heat_kernel_mc, heat_kernel_profile
from ust3d.ust import SpanningTree
from ust3d.wilson import (
    UstWindowConfig,
    complete_graph,
    sample_window_raw,
    wilson_finite,
)

DIRECTIONS = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
    dtype=np.int64)


def random_lattice_tree(n: int, seed: int) -> SpanningTree:
    """A random n-vertex lattice tree grown by neighbor attachment."""
    rs = np.random.default_rng(seed)
    parent = {(0, 0, 0): None}
    order = [(0, 0, 0)]
    while len(parent) < n:
        base = order[int(rs.integers(len(order)))]
        step = DIRECTIONS[int(rs.integers(6))]
        cand = (base[0] + int(step[0]), base[1] + int(step[1]),
                base[2] + int(step[2]))
        if cand not in parent:
            parent[cand] = base
            order.append(cand)
    return SpanningTree.from_parent_map(parent)


@pytest.fixture(scope="session", autouse=True)
def kernels_warm():
    """Touch every jitted kernel once so test timings exclude compilation."""
    rng = RngConfig(1, 0)
    run_walk((0, 0, 0), step_cap(8), rng)
    loop_erase(run_walk((0, 0, 0), step_cap(64), rng).path)
    sample_M_n(3, rng)
    wilson_finite(complete_graph(3), 0, rng)
    tree = sample_window_raw(UstWindowConfig(R=2), rng)
    tree.ball_volumes([1, 2])
    heat_kernel_profile(tree, (0, 0, 0), [0, 2])
    heat_kernel_mc(tree.to_spanning_tree(), (0, 0, 0), 2, 64, rng)
    tube_a1_probability(4, 1, 8, rng)
    walk = run_walk((0, 0, 0), step_cap(256), rng)
    tube_event_check(walk.path, TubeGeometry(4, 1), 5.0, 0.5,
                     hit_trials=4, rng=rng)

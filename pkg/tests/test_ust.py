"""SpanningTree tests: construction, paths, balls, serialization."""

from __future__ import annotations

from collections import deque

import numpy as np
import pytest
from conftest import random_lattice_tree

from ust3d.srw import RngConfig
from ust3d.ust import SpanningTree, TreeMeta
from ust3d.wilson import UstWindowConfig, sample_window_ust


def _adjacency(tree: SpanningTree) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {v: [] for v in range(tree.n)}
    for v in range(tree.n):
        p = int(tree.parent[v])
        if p >= 0:
            adj[v].append(p)
            adj[p].append(v)
    return adj


def _bfs_oracle(adj, start):
    """Distances and BFS parents from start over an adjacency dict."""
    dist = {start: 0}
    prev = {start: None}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                prev[w] = u
                queue.append(w)
    return dist, prev


# ---------------------------------------------------------------------------
# construction and validation
# ---------------------------------------------------------------------------

def test_from_parent_map_small_tree():
    tree = SpanningTree.from_parent_map({
        (0, 0, 0): None,
        (1, 0, 0): (0, 0, 0),
        (0, 1, 0): (0, 0, 0),
        (1, 1, 0): (1, 0, 0),
    })
    assert tree.n == 4
    assert tree.root == (0, 0, 0)
    assert tree.contains((1, 1, 0))
    assert not tree.contains((2, 2, 2))
    assert tree.point_of(tree.id_of((0, 1, 0))) == (0, 1, 0)
    with pytest.raises(KeyError):
        tree.id_of((9, 9, 9))


def test_from_arrays_rejects_malformed_input():
    pts = np.array([[0, 0, 0], [1, 0, 0]], dtype=np.int64)
    with pytest.raises(ValueError):  # no root
        SpanningTree.from_arrays(pts, np.array([1, 2]))
    with pytest.raises(ValueError):  # two roots
        SpanningTree.from_arrays(pts, np.array([-2, -2]))
    with pytest.raises(ValueError):  # parent point absent
        SpanningTree.from_arrays(
            pts, np.array([-2, SpanningTree.from_parent_map(
                {(5, 5, 5): None})._codes[0]]))
    dup = np.array([[0, 0, 0], [0, 0, 0]], dtype=np.int64)
    with pytest.raises(ValueError):
        SpanningTree.from_arrays(dup, np.array([-2, -2]))


def test_from_parent_map_rejects_non_neighbor_parent():
    with pytest.raises(ValueError):
        SpanningTree.from_parent_map({
            (0, 0, 0): None,
            (2, 0, 0): (0, 0, 0),  # two steps away
        })


def test_from_parent_map_rejects_disconnected_cycle():
    mapping = {
        (0, 0, 0): None,
        (5, 0, 0): (6, 0, 0),
        (6, 0, 0): (6, 1, 0),
        (6, 1, 0): (5, 1, 0),
        (5, 1, 0): (5, 0, 0),
    }
    with pytest.raises(ValueError):
        SpanningTree.from_parent_map(mapping)


def test_constructor_requires_sorted_points():
    tree = random_lattice_tree(20, 0)
    order = np.argsort(-tree._codes)
    with pytest.raises(ValueError):
        SpanningTree(tree.points[order], tree.parent, 0)


# ---------------------------------------------------------------------------
# structure queries
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_depths_and_degrees_match_adjacency_oracle(seed):
    tree = random_lattice_tree(150, seed)
    adj = _adjacency(tree)
    dist, _ = _bfs_oracle(adj, tree.root_id)
    depth = tree.depths()
    assert all(depth[v] == dist[v] for v in range(tree.n))
    deg = tree.degrees()
    assert all(deg[v] == len(adj[v]) for v in range(tree.n))
    assert int(deg.sum()) == 2 * (tree.n - 1)
    vid = tree.n // 2
    assert tree.degree_measure(tree.point_of(vid)) == len(adj[vid])


def test_children_csr_partitions_non_root_vertices():
    tree = random_lattice_tree(120, 3)
    indptr, indices = tree.children_csr()
    assert indptr[0] == 0 and indptr[-1] == tree.n - 1
    assert sorted(indices.tolist()) == sorted(
        v for v in range(tree.n) if v != tree.root_id)
    for v in indices[indptr[5]:indptr[6]]:
        assert tree.parent[v] == 5


@pytest.mark.parametrize("seed", range(5))
def test_path_ids_matches_bfs_oracle(seed):
    tree = random_lattice_tree(150, seed)
    adj = _adjacency(tree)
    rng = np.random.default_rng(seed)
    for _ in range(20):
        a, b = (int(v) for v in rng.integers(0, tree.n, size=2))
        pa, pb = tree.point_of(a), tree.point_of(b)
        ids = tree.path_ids(pa, pb)
        assert ids[0] == a and ids[-1] == b
        assert len(set(ids)) == len(ids)
        dist, prev = _bfs_oracle(adj, a)
        assert tree.distance(pa, pb) == dist[b]
        oracle = [b]
        while prev[oracle[-1]] is not None:
            oracle.append(prev[oracle[-1]])
        assert ids == oracle[::-1]
        pts = tree.path_in_tree(pa, pb)
        assert (np.abs(np.diff(pts, axis=0)).sum(axis=1) == 1).all()


def test_path_toward_root_and_depth_agree():
    tree = random_lattice_tree(80, 7)
    x = tree.point_of(tree.n - 1)
    path = tree.path_toward_root(x)
    assert tuple(path[0]) == x
    assert tuple(path[-1]) == tree.root
    assert len(path) - 1 == int(tree.depths()[tree.id_of(x)])


# ---------------------------------------------------------------------------
# intrinsic balls
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("seed,r", [(0, 0), (0, 3), (1, 5), (2, 9)])
def test_ball_ids_matches_bfs_oracle(seed, r):
    tree = random_lattice_tree(150, seed)
    adj = _adjacency(tree)
    center = tree.point_of(tree.n // 3)
    ids, cnt = tree.ball_ids(center, r)
    dist, _ = _bfs_oracle(adj, tree.id_of(center))
    expected = {v for v, d in dist.items() if d <= r}
    assert set(ids.tolist()) == expected
    assert len(ids) == cnt[-1]
    for d in range(r + 1):
        assert cnt[d] == sum(1 for v in expected if dist[v] <= d)
    with pytest.raises(ValueError):
        tree.ball_ids(center, -1)


def test_intrinsic_ball_volume_and_window_clipping():
    tree = sample_window_ust(UstWindowConfig(R=2), RngConfig(3, 0))
    small = tree.intrinsic_ball((0, 0, 0), 0)
    assert small.volume == 1 and not small.clipped
    assert small.points.shape == (1, 3)
    big = tree.intrinsic_ball((0, 0, 0), 4 * tree.n)
    assert big.volume == tree.n  # whole tree
    assert big.clipped  # reaches the window boundary, so it is biased
    meta_free = random_lattice_tree(40, 1)
    assert meta_free.meta is None
    assert not meta_free.intrinsic_ball(meta_free.root, 40).clipped


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_save_load_roundtrip_is_exact(tmp_path):
    tree = sample_window_ust(UstWindowConfig(R=2, K=3), RngConfig(11, 4))
    fp = tmp_path / "tree.txt"
    tree.save(fp)
    back = SpanningTree.load(fp)
    assert np.array_equal(back.points, tree.points)
    assert np.array_equal(back.parent, tree.parent)
    assert back.root_id == tree.root_id
    assert back.meta == tree.meta
    fp2 = tmp_path / "again.txt"
    back.save(fp2)
    assert fp.read_bytes() == fp2.read_bytes()


def test_save_load_without_meta(tmp_path):
    tree = random_lattice_tree(30, 9)
    fp = tmp_path / "tree.txt"
    tree.save(fp)
    back = SpanningTree.load(fp)
    assert back.meta is None
    assert np.array_equal(back.points, tree.points)


def test_save_rejects_single_vertex(tmp_path):
    lone = SpanningTree.from_parent_map({(0, 0, 0): None})
    with pytest.raises(ValueError):
        lone.save(tmp_path / "nope.txt")


def test_load_rejects_malformed_files(tmp_path):
    fp = tmp_path / "bad.txt"
    fp.write_text("something else\n")
    with pytest.raises(ValueError):
        SpanningTree.load(fp)
    tree = random_lattice_tree(10, 2)
    good = tmp_path / "good.txt"
    tree.save(good)
    lines = good.read_text().splitlines()
    short = tmp_path / "short.txt"
    short.write_text("\n".join([lines[0], "1 2 3 4 5"]) + "\n")
    with pytest.raises(ValueError):
        SpanningTree.load(short)
    # header count disagrees with the body
    stale = tmp_path / "stale.txt"
    stale.write_text("\n".join([lines[0]] + lines[1:-1]) + "\n")
    with pytest.raises(ValueError):
        SpanningTree.load(stale)
    # two separate components means two root candidates
    forest = tmp_path / "forest.txt"
    forest.write_text("\n".join([lines[0], "0 0 0 1 0 0", "5 5 5 5 5 6"]) + "\n")
    with pytest.raises(ValueError):
        SpanningTree.load(forest)


def test_meta_fields_and_window_radius():
    meta = TreeMeta(seed=5, R=7, K=4)
    tree = SpanningTree.from_parent_map(
        {(0, 0, 0): None, (1, 0, 0): (0, 0, 0)}, meta=meta)
    assert tree.window_radius == 7
    assert "SpanningTree" in repr(tree)

"""Wilson's algorithm on finite graphs and on windows of the cubic lattice.

Two samplers live here: a uniform spanning tree sampler for arbitrary finite
connected graphs (with an exact matrix-tree counting oracle), and the window
sampler that grows a tree over ``B_inf(0, R)`` rooted at the loop erasure of a
long walk from the origin, truncated at the exit of ``B_inf(0, K*R)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .geometry import PACK_LIMIT, as_point, pack_point
from .srw import RngConfig, derived_seed, mix64
from .ust import SpanningTree, TreeMeta


# ---------------------------------------------------------------------------
# Finite graphs
# ---------------------------------------------------------------------------

class FiniteGraph:
    """Connected simple graph on vertices ``0..n-1`` with a sorted edge list."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]) -> None:
        norm = []
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            norm.append((min(u, v), max(u, v)))
        norm.sort()
        for a, b in zip(norm, norm[1:]):
            if a == b:
                raise ValueError(f"parallel edge {a}")
        self.n = int(n)
        self.edges: tuple[tuple[int, int], ...] = tuple(norm)
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        indices = np.empty(indptr[-1], dtype=np.int32)
        fill = indptr[:-1].copy()
        for u, v in self.edges:
            indices[fill[u]] = v
            fill[u] += 1
            indices[fill[v]] = u
            fill[v] += 1
        self.indptr = indptr
        self.indices = indices
        if not self._connected():
            raise ValueError("graph is not connected")

    def _connected(self) -> bool:
        if self.n == 0:
            return False
        seen = np.zeros(self.n, dtype=bool)
        seen[0] = True
        stack = [0]
        while stack:
            u = stack.pop()
            for v in self.indices[self.indptr[u]:self.indptr[u + 1]]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        return bool(seen.all())

    def degree(self, u: int) -> int:
        return int(self.indptr[u + 1] - self.indptr[u])

    def __repr__(self) -> str:
        return f"FiniteGraph(n={self.n}, edges={len(self.edges)})"


def complete_graph(n: int) -> FiniteGraph:
    return FiniteGraph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def cycle_graph(n: int) -> FiniteGraph:
    if n < 3:
        raise ValueError("cycle needs at least 3 vertices")
    return FiniteGraph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> FiniteGraph:
    if n < 2:
        raise ValueError("path needs at least 2 vertices")
    return FiniteGraph(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(leaves: int) -> FiniteGraph:
    if leaves < 1:
        raise ValueError("star needs at least 1 leaf")
    return FiniteGraph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def grid_graph(rows: int, cols: int) -> FiniteGraph:
    """rows x cols grid; vertex (i, j) has index i*cols + j."""
    if rows < 1 or cols < 1:
        raise ValueError("grid needs positive dimensions")
    edges = []
    for i in range(rows):
        for j in range(cols):
            u = i * cols + j
            if j + 1 < cols:
                edges.append((u, u + 1))
            if i + 1 < rows:
                edges.append((u, u + cols))
    return FiniteGraph(rows * cols, edges)


# ---------------------------------------------------------------------------
# Spanning trees of finite graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteTree:
    """A spanning tree of a FiniteGraph as a parent array (root has -1)."""

    n: int
    root: int
    parent: tuple[int, ...]

    def edge_key(self) -> tuple[tuple[int, int], ...]:
        """Canonical identity of the tree: the sorted undirected edge set."""
        edges = []
        for u, p in enumerate(self.parent):
            if p >= 0:
                edges.append((min(u, p), max(u, p)))
        return tuple(sorted(edges))


def wilson_finite(
    g: FiniteGraph,
    root: int,
    rng: RngConfig,
    order: Sequence[int] | None = None,
) -> FiniteTree:
    """Sample a uniform spanning tree of ``g`` rooted at ``root``.

    Unvisited vertices are processed in ``order`` (default 0..n-1); from each,
    a walk runs until it hits the current tree and its loop erasure is added.
    The output law does not depend on ``order``.
    """
    return wilson_finite_many(g, root, 1, rng, order=order)[0]


def wilson_finite_many(
    g: FiniteGraph,
    root: int,
    samples: int,
    rng: RngConfig,
    order: Sequence[int] | None = None,
) -> list[FiniteTree]:
    """Independent uniform spanning trees; sample ``t`` uses stream+t."""
    if not (0 <= root < g.n):
        raise ValueError(f"root {root} out of range")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if order is None:
        order_arr = np.arange(g.n, dtype=np.int64)
    else:
        order_arr = np.asarray(list(order), dtype=np.int64)
        if sorted(order_arr.tolist()) != list(range(g.n)):
            raise ValueError("order must be a permutation of all vertices")
    parents = _kernels.wilson_finite_batch(
        g.indptr, g.indices, np.int64(root), order_arr,
        np.int64(samples), np.uint64(rng.seed), np.uint64(rng.stream))
    out = []
    for t in range(samples):
        out.append(FiniteTree(g.n, root, tuple(int(p) for p in parents[t])))
    return out


def matrix_tree_count(g: FiniteGraph) -> int:
    """Number of spanning trees of ``g``: a Laplacian cofactor, exactly.

    Uses fraction-free (Bareiss) elimination over Python integers, so the
    result is exact at any size; no overflow is possible.
    """
    n = g.n
    if n == 1:
        return 1
    lap = [[0] * n for _ in range(n)]
    for u, v in g.edges:
        lap[u][u] += 1
        lap[v][v] += 1
        lap[u][v] -= 1
        lap[v][u] -= 1
    minor = [row[1:] for row in lap[1:]]
    det = _bareiss_determinant(minor)
    if det <= 0:
        raise ArithmeticError(f"nonpositive tree count {det} on a connected graph")
    return det


def _bareiss_determinant(a: list[list[int]]) -> int:
    """Exact integer determinant by fraction-free elimination (in place)."""
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = a[k][k]
        for i in range(k + 1, n):
            row_i = a[i]
            row_k = a[k]
            lead = row_i[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * pivot - lead * row_k[j]) // prev
            row_i[k] = 0
        prev = pivot
    return sign * a[n - 1][n - 1]


# ---------------------------------------------------------------------------
# Window sampler on the lattice
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UstWindowConfig:
    """Parameters of the window sampler.

    The first branch is the loop erasure of a walk from the origin run to the
    exit of ``B_inf(0, max(1, K*R))``; then every vertex of ``B_inf(0, R)`` is
    attached in the configured order. Branch walks that reach the truncation
    radius are rejected and retried with fresh randomness.
    """

    R: int
    K: int = 4
    ordering: str = "lexicographic"
    supplied_order: tuple[tuple[int, int, int], ...] | None = None
    pad: int = 32
    branch_cap: int = 10 ** 9
    retry_cap: int = 10_000

    def __post_init__(self) -> None:
        if self.R < 0:
            raise ValueError("R must be >= 0")
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if self.ordering not in ("lexicographic", "spiral", "supplied"):
            raise ValueError(f"unknown ordering {self.ordering!r}")
        if (self.ordering == "supplied") != (self.supplied_order is not None):
            raise ValueError("supplied_order must be given exactly when ordering='supplied'")
        if self.pad < 1:
            raise ValueError("pad must be >= 1")
        if self.branch_cap < 1:
            raise ValueError("branch_cap must be >= 1")
        if self.retry_cap < 1:
            raise ValueError("retry_cap must be >= 1")
        if self.K * self.R + self.pad > PACK_LIMIT:
            raise ValueError("window too large for packed coordinates")

    @property
    def truncation_radius(self) -> int:
        return max(1, self.K * self.R)


@dataclass(frozen=True)
class WindowSampleStats:
    """Diagnostics of one window sample."""

    walk_steps: int
    escapes: int
    branches: int
    attached: int
    spill_count: int
    max_branch_steps: int
    failed_candidates: int
    root_steps: int


class WindowTree:
    """A sampled window tree in its raw dense form.

    Vertices inside the padded cube are stored as parent-direction codes in a
    flat uint8 array; the few vertices beyond it live in a hash map. Ball
    queries run directly on this form, so large windows never need the
    dictionary-backed :class:`~ust3d.ust.SpanningTree`.
    """

    def __init__(self, cfg: UstWindowConfig, rng: RngConfig, state: np.ndarray,
                 spill_keys: np.ndarray, spill_vals: np.ndarray,
                 stats: WindowSampleStats) -> None:
        self.cfg = cfg
        self.rng = rng
        self._state = state
        self._spill_keys = spill_keys
        self._spill_vals = spill_vals
        self.stats = stats
        self._Rd = cfg.R + cfg.pad
        self._D = 2 * self._Rd + 1

    @property
    def vertex_count(self) -> int:
        return self.stats.attached

    @property
    def window_radius(self) -> int:
        return self.cfg.R

    def has_vertex(self, point) -> bool:
        x, y, z = (int(c) for c in as_point(point))
        Rd, D = self._Rd, self._D
        if abs(x) <= Rd and abs(y) <= Rd and abs(z) <= Rd:
            lin = ((x + Rd) * D + (y + Rd)) * D + (z + Rd)
            return bool(self._state[lin] != 0)
        code = pack_point((x, y, z))
        keys = self._spill_keys
        mask = keys.shape[0] - 1
        slot = mix64(code) & mask
        while keys[slot] != -1:
            if keys[slot] == code:
                return True
            slot = (slot + 1) & mask
        return False

    def ball_volumes(self, radii: Sequence[int], center=(0, 0, 0)):
        """Volumes ``|B_U(center, r)|`` for sorted radii.

        Returns ``(volumes, max_linf, boundary_contact)``: the max l-inf
        distance from the lattice origin over the largest ball, and whether
        the breadth-first search touched the dense-storage boundary.
        """
        r_arr = np.asarray(list(radii), dtype=np.int64)
        if r_arr.size == 0 or (r_arr < 0).any():
            raise ValueError("radii must be nonnegative and nonempty")
        if (np.diff(r_arr) < 0).any():
            raise ValueError("radii must be sorted")
        cx, cy, cz = (int(c) for c in as_point(center))
        vols, max_linf, boundary = _kernels.ball_volumes_map(
            self._state, np.int64(self._D), np.int64(self._Rd),
            np.int64(cx), np.int64(cy), np.int64(cz), r_arr)
        return vols, int(max_linf), bool(boundary)

    def ball_csr(self, rmax: int, center=(0, 0, 0)):
        """Intrinsic ball ``B_U(center, rmax)`` in BFS order with adjacency.

        Returns ``(indptr, indices, mu, cnt_by_dist, max_linf, boundary)``
        where ``mu`` holds full tree degrees and ``cnt_by_dist[d]`` counts
        ball vertices at tree distance <= d.
        """
        if rmax < 0:
            raise ValueError("rmax must be >= 0")
        cx, cy, cz = (int(c) for c in as_point(center))
        indptr, indices, mu, cnt, max_linf, boundary = _kernels.ball_extract_csr(
            self._state, np.int64(self._D), np.int64(self._Rd),
            np.int64(cx), np.int64(cy), np.int64(cz), np.int64(rmax))
        return indptr, indices, mu, cnt, int(max_linf), bool(boundary)

    def degrees_final_radius(self) -> int:
        """Max l-inf radius within which tree degrees can no longer change."""
        return self.cfg.R - 1

    def to_spanning_tree(self) -> SpanningTree:
        """Materialize as a SpanningTree (index maps over all vertices)."""
        pts, par = _kernels.export_attached(
            self._state, np.int64(self._D), np.int64(self._Rd),
            self._spill_keys, self._spill_vals)
        meta = TreeMeta(seed=self.rng.seed, R=self.cfg.R, K=self.cfg.K)
        return SpanningTree.from_arrays(pts, par, meta=meta)


def sample_window_raw(cfg: UstWindowConfig, rng: RngConfig) -> WindowTree:
    """Sample a window tree, keeping the raw dense form."""
    if cfg.ordering == "lexicographic":
        mode = 0
        supplied = np.empty(0, dtype=np.int64)
    elif cfg.ordering == "spiral":
        mode = 1
        supplied = np.empty(0, dtype=np.int64)
    else:
        pts = cfg.supplied_order or ()
        codes = [pack_point(p) for p in pts]
        if len(set(codes)) != len(codes):
            raise ValueError("supplied order has duplicate vertices")
        if len(codes) != (2 * cfg.R + 1) ** 3:
            raise ValueError("supplied order must cover the whole window")
        for p in pts:
            if max(abs(int(c)) for c in p) > cfg.R:
                raise ValueError(f"supplied vertex {p} outside the window")
        mode = 2
        supplied = np.asarray(codes, dtype=np.int64)
    seed = derived_seed(rng)
    state, sp_keys, sp_vals, stats = _kernels.wilson_window(
        np.int64(cfg.R), np.int64(cfg.truncation_radius), np.int64(cfg.pad),
        np.int64(mode), supplied, np.uint64(seed), np.int64(cfg.branch_cap),
        np.int64(cfg.retry_cap))
    st = WindowSampleStats(*(int(v) for v in stats))
    if st.failed_candidates:
        raise RuntimeError(
            f"{st.failed_candidates} window vertices failed to attach: walks "
            f"escaped the truncation ball {cfg.retry_cap} times in a row; "
            "raise retry_cap or K")
    return WindowTree(cfg, rng, state, sp_keys, sp_vals, st)


def sample_window_ust(cfg: UstWindowConfig, rng: RngConfig) -> SpanningTree:
    """Sample a window tree and materialize it as a SpanningTree."""
    return sample_window_raw(cfg, rng).to_spanning_tree()

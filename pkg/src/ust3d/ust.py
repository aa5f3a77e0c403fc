"""The tree structure: unique paths, intrinsic metric, balls, degree measure.

A :class:`SpanningTree` is an immutable lattice tree: points in Z^3 with a
parent array whose edges are lattice edges. Window samples carry their
(seed, R, K) metadata so ball queries can tell when a result may be biased by
the finite window; synthetic trees (``meta is None``) are taken as complete
graphs in their own right and are never clipped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import as_point, pack_point

HEADER_PREFIX = "ust3d-tree v1"


@dataclass(frozen=True)
class TreeMeta:
    """Provenance of a window sample: seed and window parameters."""

    seed: int
    R: int
    K: int


@dataclass(frozen=True)
class IntrinsicBall:
    """Vertices of ``B_U(center, r)`` with volume and a window-bias flag."""

    center: tuple[int, int, int]
    radius: int
    points: np.ndarray
    volume: int
    clipped: bool


class SpanningTree:
    """Immutable lattice tree; vertices indexed by sorted packed coordinate."""

    def __init__(self, points: np.ndarray, parent: np.ndarray, root_id: int,
                 meta: TreeMeta | None = None, _validate: bool = True) -> None:
        self.points = points
        self.parent = parent
        self.root_id = int(root_id)
        self.meta = meta
        self._codes = _pack_codes(points)
        self._depth = None
        self._deg = None
        self._children = None
        if (np.diff(self._codes) <= 0).any():
            raise ValueError("points must be sorted by packed code (use from_arrays)")
        if _validate:
            self._check_invariants()

    # -- construction -------------------------------------------------------

    @classmethod
    def from_arrays(cls, points: np.ndarray, parent_codes: np.ndarray,
                    meta: TreeMeta | None = None) -> "SpanningTree":
        """Build from points and packed parent codes (root's code is -2)."""
        pts = np.ascontiguousarray(np.asarray(points, dtype=np.int64))
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError("points must have shape (n, 3)")
        par_codes = np.asarray(parent_codes, dtype=np.int64)
        if par_codes.shape != (pts.shape[0],):
            raise ValueError("parent_codes must match points")
        codes = _pack_codes(pts)
        order = np.argsort(codes, kind="stable")
        pts = pts[order]
        par_codes = par_codes[order]
        codes = codes[order]
        roots = np.flatnonzero(par_codes == -2)
        if roots.size != 1:
            raise ValueError(f"expected exactly one root, found {roots.size}")
        root_id = int(roots[0])
        parent = np.searchsorted(codes, par_codes).astype(np.int64)
        parent[root_id] = -1
        ok = np.ones(pts.shape[0], dtype=bool)
        ok[root_id] = False
        inside = parent[ok] < codes.shape[0]
        if not inside.all() or (codes[parent[ok]] != par_codes[ok]).any():
            raise ValueError("parent code not present among points")
        return cls(pts, parent, root_id, meta=meta)

    @classmethod
    def from_parent_map(cls, mapping, meta: TreeMeta | None = None) -> "SpanningTree":
        """Build from {point: parent point or None}; exactly one None (root)."""
        pts = []
        par_codes = []
        for point, parent_point in mapping.items():
            pts.append(tuple(int(c) for c in as_point(point)))
            if parent_point is None:
                par_codes.append(-2)
            else:
                par_codes.append(pack_point(parent_point))
        return cls.from_arrays(np.asarray(pts, dtype=np.int64),
                               np.asarray(par_codes, dtype=np.int64), meta=meta)

    def _check_invariants(self) -> None:
        n = self.points.shape[0]
        if not (0 <= self.root_id < n):
            raise ValueError("root id out of range")
        if np.unique(self._codes).shape[0] != n:
            raise ValueError("duplicate vertices")
        if self.parent[self.root_id] != -1:
            raise ValueError("root must have parent -1")
        nonroot = np.arange(n) != self.root_id
        par = self.parent[nonroot]
        if par.size and ((par < 0) | (par >= n)).any():
            raise ValueError("parent id out of range")
        diff = np.abs(self.points[nonroot] - self.points[par]).sum(axis=1)
        if (diff != 1).any():
            raise ValueError("a parent is not a lattice neighbor")
        depth, ok = _kernels.tree_depths(self.parent, np.int64(self.root_id))
        if not ok or (depth < 0).any():
            raise ValueError("parent array is not a tree rooted at root")
        self._depth = depth

    # -- basic queries -------------------------------------------------------

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def root(self) -> tuple[int, int, int]:
        return self.point_of(self.root_id)

    @property
    def window_radius(self) -> int | None:
        return self.meta.R if self.meta is not None else None

    def point_of(self, vid: int) -> tuple[int, int, int]:
        x, y, z = self.points[vid]
        return (int(x), int(y), int(z))

    def id_of(self, point) -> int:
        code = pack_point(point)
        i = int(np.searchsorted(self._codes, code))
        if i >= self.n or self._codes[i] != code:
            raise KeyError(f"vertex {tuple(as_point(point))} not in tree")
        return i

    def contains(self, point) -> bool:
        code = pack_point(point)
        i = int(np.searchsorted(self._codes, code))
        return i < self.n and self._codes[i] == code

    def depths(self) -> np.ndarray:
        if self._depth is None:
            depth, ok = _kernels.tree_depths(self.parent, np.int64(self.root_id))
            if not ok:
                raise ValueError("parent array is not a tree")
            self._depth = depth
        return self._depth

    def children_csr(self) -> tuple[np.ndarray, np.ndarray]:
        if self._children is None:
            n = self.n
            valid = self.parent >= 0
            counts = np.bincount(self.parent[valid], minlength=n)
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            order = np.argsort(self.parent, kind="stable")
            indices = order[np.count_nonzero(~valid):].astype(np.int64)
            self._children = (indptr, indices)
        return self._children

    def degree_measure(self, x) -> int:
        """Tree degree of x (the number of tree edges containing it)."""
        if self._deg is None:
            valid = self.parent >= 0
            deg = np.bincount(self.parent[valid], minlength=self.n)
            deg = deg + valid.astype(np.int64)
            self._deg = deg
        return int(self._deg[self.id_of(x)])

    def degrees(self) -> np.ndarray:
        self.degree_measure(self.root)
        return self._deg

    # -- paths and metric ----------------------------------------------------

    def path_ids(self, x, y) -> list[int]:
        """Vertex ids along the unique tree path from x to y."""
        ix, iy = self.id_of(x), self.id_of(y)
        depth = self.depths()
        up_x: list[int] = []
        up_y: list[int] = []
        a, b = ix, iy
        while depth[a] > depth[b]:
            up_x.append(a)
            a = int(self.parent[a])
        while depth[b] > depth[a]:
            up_y.append(b)
            b = int(self.parent[b])
        while a != b:
            up_x.append(a)
            up_y.append(b)
            a = int(self.parent[a])
            b = int(self.parent[b])
        return up_x + [a] + up_y[::-1]

    def path_in_tree(self, x, y) -> np.ndarray:
        """The unique self-avoiding path between x and y, as points."""
        return self.points[np.asarray(self.path_ids(x, y), dtype=np.int64)]

    def distance(self, x, y) -> int:
        """Intrinsic metric d_U(x, y): tree path length in edges."""
        return len(self.path_ids(x, y)) - 1

    def path_toward_root(self, x) -> np.ndarray:
        """The stand-in for the path to infinity: x up to the tree's root."""
        return self.path_in_tree(x, self.root)

    # -- balls ----------------------------------------------------------------

    def ball_ids(self, x, r: int) -> tuple[np.ndarray, np.ndarray]:
        """Ids of B_U(x, r) and the per-level cumulative counts.

        Returns (ids in breadth-first order, cnt) with cnt[d] = number of
        ball vertices at distance <= d, for d in 0..r.
        """
        if r < 0:
            raise ValueError("radius must be >= 0")
        start = self.id_of(x)
        indptr, indices = self.children_csr()
        seen = np.zeros(self.n, dtype=bool)
        seen[start] = True
        frontier = np.asarray([start], dtype=np.int64)
        levels = [frontier]
        cnt = np.empty(r + 1, dtype=np.int64)
        cnt[0] = 1
        for d in range(1, r + 1):
            if frontier.size:
                cand = [_ragged_gather(indptr, indices, frontier)]
                pars = self.parent[frontier]
                cand.append(pars[pars >= 0])
                cand_arr = np.unique(np.concatenate(cand))
                frontier = cand_arr[~seen[cand_arr]]
                seen[frontier] = True
            if frontier.size:
                levels.append(frontier)
            cnt[d] = cnt[d - 1] + frontier.size
        return np.concatenate(levels), cnt

    def intrinsic_ball(self, x, r: int) -> IntrinsicBall:
        """``B_U(x, r)`` with its volume and window-bias (clipped) flag."""
        ids, cnt = self.ball_ids(x, r)
        pts = self.points[ids]
        clipped = False
        if self.meta is not None:
            clipped = bool(np.abs(pts).max() >= self.meta.R)
        cx, cy, cz = as_point(x)
        return IntrinsicBall(center=(int(cx), int(cy), int(cz)), radius=r,
                             points=pts, volume=int(cnt[-1]), clipped=clipped)

    # -- serialization ---------------------------------------------------------

    def save(self, path) -> None:
        """Write the text form; one line per non-root vertex, (x,y,z)-sorted."""
        if self.n < 2:
            raise ValueError("single-vertex trees have no serializable edges")
        meta = self.meta or TreeMeta(seed=0, R=-1, K=-1)
        order = np.lexsort((self.points[:, 2], self.points[:, 1], self.points[:, 0]))
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"{HEADER_PREFIX} {self.n} {meta.seed} {meta.R} {meta.K}\n")
            for vid in order:
                p = self.parent[vid]
                if p < 0:
                    continue
                x, y, z = self.points[vid]
                px, py, pz = self.points[p]
                fh.write(f"{x} {y} {z} {px} {py} {pz}\n")

    @classmethod
    def load(cls, path) -> "SpanningTree":
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().split()
            if header[:2] != HEADER_PREFIX.split() or len(header) != 6:
                raise ValueError("not a ust3d-tree v1 file")
            count, seed, R, K = (int(v) for v in header[2:])
            pts = []
            par_codes = []
            child_codes = set()
            parent_seen = {}
            for line in fh:
                vals = [int(v) for v in line.split()]
                if len(vals) != 6:
                    raise ValueError(f"bad vertex line: {line.rstrip()}")
                child = (vals[0], vals[1], vals[2])
                parent_point = (vals[3], vals[4], vals[5])
                pts.append(child)
                par_codes.append(pack_point(parent_point))
                child_codes.add(pack_point(child))
                parent_seen[pack_point(parent_point)] = parent_point
        root_candidates = [c for c in parent_seen if c not in child_codes]
        if len(root_candidates) != 1:
            raise ValueError(f"expected one root, found {len(root_candidates)}")
        pts.append(parent_seen[root_candidates[0]])
        par_codes.append(-2)
        if len(pts) != count:
            raise ValueError(f"header says {count} vertices, file has {len(pts)}")
        meta = None if R < 0 else TreeMeta(seed=seed, R=R, K=K)
        return cls.from_arrays(np.asarray(pts, dtype=np.int64),
                               np.asarray(par_codes, dtype=np.int64), meta=meta)

    def __repr__(self) -> str:
        return f"SpanningTree(n={self.n}, root={self.root})"


def _pack_codes(points: np.ndarray) -> np.ndarray:
    """Packed codes for an (n, 3) array, matching the kernel packing."""
    pts = np.asarray(points, dtype=np.int64)
    off = np.int64(1 << 20)
    return (pts[:, 0] + off) | ((pts[:, 1] + off) << 21) | ((pts[:, 2] + off) << 42)


def _ragged_gather(indptr: np.ndarray, indices: np.ndarray,
                   rows: np.ndarray) -> np.ndarray:
    """Concatenate indices[indptr[r]:indptr[r+1]] over rows, vectorized."""
    starts = indptr[rows]
    counts = indptr[rows + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offsets = np.repeat(starts - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
    return indices[offsets + np.arange(total)]

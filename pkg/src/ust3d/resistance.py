"""Effective resistance on unit-resistance networks.

The Dirichlet route solves the grounded Laplacian system and returns
``1/E(f, f)``; the exact route repeats it in rational arithmetic for small
graphs. On trees the unique-path series law makes resistance equal intrinsic
distance, and point-to-set values reduce exactly by series/parallel folding.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu

from . import _kernels
from .ust import SpanningTree
from .wilson import FiniteGraph


# ---------------------------------------------------------------------------
# Finite graphs: Dirichlet solves
# ---------------------------------------------------------------------------

def _check_terminals(n: int, A, B) -> tuple[list[int], list[int]]:
    sa = sorted({int(v) for v in A})
    sb = sorted({int(v) for v in B})
    if not sa or not sb:
        raise ValueError("terminal sets must be nonempty")
    if set(sa) & set(sb):
        raise ValueError("terminal sets must be disjoint")
    for v in sa + sb:
        if not (0 <= v < n):
            raise ValueError(f"terminal vertex {v} out of range")
    return sa, sb


def effective_resistance(g: FiniteGraph, A, B) -> float:
    """R_eff(A, B): 1 over the Dirichlet energy of the harmonic potential.

    Solves f = 1 on A, f = 0 on B, harmonic elsewhere, and returns
    ``1 / sum((f_u - f_v)^2 over edges)``; symmetric in (A, B).
    """
    sa, sb = _check_terminals(g.n, A, B)
    f = np.zeros(g.n, dtype=np.float64)
    f[sa] = 1.0
    fixed = np.zeros(g.n, dtype=bool)
    fixed[sa] = True
    fixed[sb] = True
    interior = np.flatnonzero(~fixed)
    if interior.size:
        pos = np.full(g.n, -1, dtype=np.int64)
        pos[interior] = np.arange(interior.size)
        rows, cols, vals = [], [], []
        rhs = np.zeros(interior.size, dtype=np.float64)
        for u, v in g.edges:
            iu, iv = pos[u], pos[v]
            if iu >= 0:
                rows.append(iu)
                cols.append(iu)
                vals.append(1.0)
                if iv >= 0:
                    rows.append(iu)
                    cols.append(iv)
                    vals.append(-1.0)
                else:
                    rhs[iu] += f[v]
            if iv >= 0:
                rows.append(iv)
                cols.append(iv)
                vals.append(1.0)
                if iu >= 0:
                    rows.append(iv)
                    cols.append(iu)
                    vals.append(-1.0)
                else:
                    rhs[iv] += f[u]
        lap = csc_matrix((vals, (rows, cols)), shape=(interior.size, interior.size))
        lu = splu(lap)
        w = lu.solve(rhs)
        w += lu.solve(rhs - lap @ w)
        f[interior] = w
    edge_arr = np.asarray(g.edges, dtype=np.int64)
    energy = float(np.sum((f[edge_arr[:, 0]] - f[edge_arr[:, 1]]) ** 2))
    if energy <= 0.0:
        raise ArithmeticError("zero Dirichlet energy on a connected graph")
    return 1.0 / energy


def effective_resistance_exact(g: FiniteGraph, A, B) -> Fraction:
    """R_eff(A, B) in exact rational arithmetic (small graphs)."""
    sa, sb = _check_terminals(g.n, A, B)
    f: list[Fraction] = [Fraction(0)] * g.n
    for v in sa:
        f[v] = Fraction(1)
    fixed = set(sa) | set(sb)
    interior = [v for v in range(g.n) if v not in fixed]
    if interior:
        pos = {v: i for i, v in enumerate(interior)}
        k = len(interior)
        mat = [[Fraction(0)] * (k + 1) for _ in range(k)]
        for u, v in g.edges:
            iu = pos.get(u)
            iv = pos.get(v)
            if iu is not None:
                mat[iu][iu] += 1
                if iv is not None:
                    mat[iu][iv] -= 1
                else:
                    mat[iu][k] += f[v]
            if iv is not None:
                mat[iv][iv] += 1
                if iu is not None:
                    mat[iv][iu] -= 1
                else:
                    mat[iv][k] += f[u]
        sol = _solve_exact(mat, k)
        for v, i in pos.items():
            f[v] = sol[i]
    energy = Fraction(0)
    for u, v in g.edges:
        d = f[u] - f[v]
        energy += d * d
    if energy <= 0:
        raise ArithmeticError("zero Dirichlet energy on a connected graph")
    return 1 / energy


def _solve_exact(mat: list[list[Fraction]], k: int) -> list[Fraction]:
    """Gaussian elimination on an augmented k x (k+1) rational system."""
    for col in range(k):
        piv = next(r for r in range(col, k) if mat[r][col] != 0)
        mat[col], mat[piv] = mat[piv], mat[col]
        inv = 1 / mat[col][col]
        mat[col] = [v * inv for v in mat[col]]
        for r in range(k):
            if r != col and mat[r][col] != 0:
                c = mat[r][col]
                mat[r] = [a - c * b for a, b in zip(mat[r], mat[col])]
    return [mat[r][k] for r in range(k)]


# ---------------------------------------------------------------------------
# Trees: series law and series/parallel folding
# ---------------------------------------------------------------------------

def tree_resistance(t: SpanningTree, x, y) -> float:
    """R_eff(x, y) on a tree: the series law gives d_U(x, y); x = y gives 0."""
    if t.id_of(x) == t.id_of(y):
        return 0.0
    return float(t.distance(x, y))


def point_to_set_resistance(t: SpanningTree, x, B) -> float:
    """R_eff(x, B) within the tree by exact series/parallel reduction.

    B is an iterable of points; vertices of B are grounded together.
    Returns 0 when x lies in B.
    """
    ix = t.id_of(x)
    grounded = {t.id_of(p) for p in B}
    if not grounded:
        raise ValueError("B must be nonempty")
    if ix in grounded:
        return 0.0

    indptr, indices = t.children_csr()
    order = [ix]
    par_x = {ix: -1}
    head = 0
    while head < len(order):
        u = order[head]
        head += 1
        nbrs = [int(v) for v in indices[indptr[u]:indptr[u + 1]]]
        p = int(t.parent[u])
        if p >= 0:
            nbrs.append(p)
        for v in nbrs:
            if v not in par_x:
                par_x[v] = u
                order.append(v)

    # conductance from each vertex down to B within its x-rooted subtree;
    # None encodes infinity (the vertex itself is grounded)
    cond: dict[int, Fraction | None] = {}
    for u in reversed(order):
        if u in grounded:
            cond[u] = None
            continue
        total = Fraction(0)
        for v in indices[indptr[u]:indptr[u + 1]].tolist() + [int(t.parent[u])]:
            if v < 0 or par_x.get(v) != u:
                continue
            c = cond[v]
            if c is None:
                total += 1
            elif c != 0:
                total += c / (1 + c)
        cond[u] = total
    out = cond[ix]
    if out is None or out == 0:
        raise ArithmeticError("x is not connected to B within the tree")
    return float(1 / out)


def pairwise_resistance(t: SpanningTree, pairs) -> np.ndarray:
    """Effective resistance on the tree's edge network by Laplacian solve.

    Grounds the tree root and solves ``L w = e_x - e_y`` per pair by exact
    Gaussian elimination in leaf-first order (sparse Cholesky; trees give
    zero fill). The diagonal pass is shared across pairs, and the two-entry
    right-hand side confines substitution to the pair's root paths.
    Independent of the series-law route.
    """
    pair_ids = np.asarray([(t.id_of(x), t.id_of(y)) for x, y in pairs],
                          dtype=np.int64).reshape(-1, 2)
    order = np.argsort(-t.depths(), kind="stable")
    return _kernels.lap_tree_pair_solve(t.parent, t.degrees(), order,
                                        pair_ids, np.int64(t.root_id))

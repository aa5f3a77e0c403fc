"""Random walk on a tree: quenched heat kernel, exact and Monte Carlo.

The exact route iterates the distribution vector over the intrinsic ball and
uses reversibility, ``p_{2m}(x,x) = sum_y v_m(y)^2 / mu(y)``, so ``n`` steps
only need the ball of radius ``n/2``. The Monte Carlo route runs independent
walks over a compressed adjacency array. Both express values in the quenched
normalization ``p_n(x,y) = P_x(X_n = y) / mu(y)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .ust import SpanningTree, _ragged_gather
from .wilson import WindowTree

# exact iterations monitor their own mass; drift beyond this is a failure,
# not a warning (expected drift is ~1e-13 even at 10^4 steps)
DRIFT_LIMIT = 1e-8

# trials per RNG stream in Monte Carlo chunking; fixed so results do not
# depend on the worker count
MC_CHUNK = 8192


@dataclass(frozen=True)
class HeatKernelEstimate:
    """A heat kernel value; stderr and trials are 0 for exact computation."""

    value: float
    stderr: float
    n: int
    trials: int


@dataclass(frozen=True)
class Bk06Result:
    """Outcome of the universal return-probability bound check."""

    lhs: float
    rhs: float
    holds: bool
    r: int
    requested_r: int
    ball_size: int
    n: int


# ---------------------------------------------------------------------------
# Ball extraction (uniform across tree representations)
# ---------------------------------------------------------------------------

def _ball_csr(t: SpanningTree | WindowTree, x, rmax: int):
    """Intrinsic-ball adjacency for either tree form.

    Returns (indptr, indices, mu, cnt_by_dist, clipped): BFS-ordered in-ball
    CSR, full tree degrees, cumulative per-distance counts (length rmax + 2),
    and whether the ball may be biased by the finite window.
    """
    if isinstance(t, WindowTree):
        indptr, indices, mu, cnt, max_linf, boundary = t.ball_csr(rmax, center=x)
        if mu.shape[0] == 0:
            raise KeyError(f"vertex {x} not in tree")
        clipped = boundary or max_linf >= t.window_radius
        return indptr, indices, mu, cnt, clipped

    ids, cnt = t.ball_ids(x, rmax)
    nb = ids.shape[0]
    pos = np.full(t.n, -1, dtype=np.int64)
    pos[ids] = np.arange(nb)
    ch_indptr, ch_indices = t.children_csr()

    ch = _ragged_gather(ch_indptr, ch_indices, ids)
    ch_src = np.repeat(ids, (ch_indptr[ids + 1] - ch_indptr[ids]))
    has_par = t.parent[ids] >= 0
    src = np.concatenate([ch_src, ids[has_par]])
    dst = np.concatenate([ch, t.parent[ids[has_par]]])
    keep = pos[dst] >= 0
    src_b = pos[src[keep]]
    dst_b = pos[dst[keep]]

    counts = np.bincount(src_b, minlength=nb)
    indptr = np.zeros(nb + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    order = np.argsort(src_b, kind="stable")
    indices = dst_b[order].astype(np.int32)
    mu = t.degrees()[ids].astype(np.float64)
    cnt_by_dist = np.concatenate([cnt, cnt[-1:]])

    clipped = False
    if t.meta is not None:
        clipped = bool(np.abs(t.points[ids]).max() >= t.meta.R)
    return indptr, indices, mu, cnt_by_dist, clipped


def _reject_clipped(clipped: bool, n: int) -> None:
    if clipped:
        raise ValueError(
            f"intrinsic ball for n={n} touches the window boundary; "
            "increase window radius R")


# ---------------------------------------------------------------------------
# Exact heat kernel
# ---------------------------------------------------------------------------

def heat_kernel_exact(t: SpanningTree | WindowTree, x, n: int) -> HeatKernelEstimate:
    """p_n(x, x) exactly: zero for odd n, vector iteration for even n.

    Requires the intrinsic ball of radius n/2 to be windows-bias free; a
    clipped ball is rejected (the walk could notice the missing region).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n % 2 == 1:
        _ball_csr(t, x, 0)  # still insist the start vertex exists
        return HeatKernelEstimate(value=0.0, stderr=0.0, n=n, trials=0)
    estimates, _ = heat_kernel_profile(t, x, [n])
    return estimates[0]


def heat_kernel_profile(
    t: SpanningTree | WindowTree, x, steps: Sequence[int],
) -> tuple[list[HeatKernelEstimate], float]:
    """p_n(x, x) for several even n in one ball extraction and iteration.

    Returns the estimates plus the largest mass drift observed at any
    checkpoint (exactness monitor).
    """
    ns = [int(v) for v in steps]
    if not ns or any(v < 0 or v % 2 for v in ns):
        raise ValueError("steps must be nonnegative even integers")
    if sorted(set(ns)) != ns:
        raise ValueError("steps must be strictly increasing")
    ms = [v // 2 for v in ns]
    rmax = ms[-1]
    indptr, indices, mu, cnt, clipped = _ball_csr(t, x, rmax)
    _reject_clipped(clipped, ns[-1])
    out: list[HeatKernelEstimate] = []
    grid = np.asarray([m for m in ms if m > 0], dtype=np.int64)
    drift = 0.0
    if grid.size:
        p2k, drift = _kernels.hk_iterate(indptr, indices, mu, cnt, grid)
        if drift > DRIFT_LIMIT:
            raise ArithmeticError(f"mass drift {drift:.3e} exceeds {DRIFT_LIMIT}")
        vals = iter(p2k)
    for m, n in zip(ms, ns):
        value = 1.0 / float(mu[0]) if m == 0 else float(next(vals))
        out.append(HeatKernelEstimate(value=value, stderr=0.0, n=n, trials=0))
    return out, float(drift)


# ---------------------------------------------------------------------------
# Monte Carlo heat kernel
# ---------------------------------------------------------------------------

def _full_csr(t: SpanningTree) -> tuple[np.ndarray, np.ndarray]:
    """Adjacency of the whole tree as a compressed array."""
    src = np.flatnonzero(t.parent >= 0)
    dst = t.parent[src]
    ends_a = np.concatenate([src, dst])
    ends_b = np.concatenate([dst, src])
    counts = np.bincount(ends_a, minlength=t.n)
    indptr = np.zeros(t.n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    order = np.argsort(ends_a, kind="stable")
    return indptr, ends_b[order].astype(np.int32)


def heat_kernel_mc(t: SpanningTree, x, n: int, trials: int, rng) -> HeatKernelEstimate:
    """p_n(x, x) by Monte Carlo: return frequency over the degree measure.

    Trials are split into fixed-size chunks, one RNG stream per chunk, so the
    result depends only on (seed, stream, trials).
    """
    if n < 0 or trials < 1:
        raise ValueError("need n >= 0 and trials >= 1")
    x_id = t.id_of(x)
    indptr, indices = _full_csr(t)
    hits = 0
    done = 0
    chunk_index = 0
    while done < trials:
        c = min(MC_CHUNK, trials - done)
        hits += int(_kernels.csr_walk_hits(
            indptr, indices, np.int64(x_id), np.int64(n), np.int64(c),
            np.uint64(rng.seed), np.uint64((rng.stream + chunk_index) & ((1 << 64) - 1))))
        done += c
        chunk_index += 1
    mu = float(t.degree_measure(x))
    freq = hits / trials
    value = freq / mu
    stderr = float(np.sqrt(freq * (1.0 - freq) / trials)) / mu
    return HeatKernelEstimate(value=value, stderr=stderr, n=n, trials=trials)


# ---------------------------------------------------------------------------
# The universal return-probability bound
# ---------------------------------------------------------------------------

def ball_volume(t: SpanningTree | WindowTree, x, r: int) -> tuple[int, bool]:
    """|B_U(x, r)| and whether that ball is window-biased."""
    if isinstance(t, WindowTree):
        vols, max_linf, boundary = t.ball_volumes([r], center=x)
        if max_linf < 0:
            raise KeyError(f"vertex {x} not in tree")
        return int(vols[0]), bool(boundary or max_linf >= t.window_radius)
    ball = t.intrinsic_ball(x, r)
    return ball.volume, ball.clipped


def bk06_bound_check(t: SpanningTree | WindowTree, x, r: int) -> Bk06Result:
    """Check p_{2r|B|}(x, x) <= 2/|B| with |B| = |B_U(x, r)|, exactly.

    The bound holds on every realisation, so a failure is a defect. If the
    window cannot certify exactness at the requested radius, the check runs
    at the largest radius it can certify (reported in the result).
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    requested = r
    while r >= 1:
        size, clipped = ball_volume(t, x, r)
        if clipped:
            r -= 1
            continue
        n = 2 * r * size
        try:
            est = heat_kernel_exact(t, x, n)
        except ValueError:
            r -= 1
            continue
        rhs = 2.0 / size
        return Bk06Result(lhs=est.value, rhs=rhs, holds=bool(est.value <= rhs),
                          r=r, requested_r=requested, ball_size=size, n=n)
    raise ValueError("window too small to certify the bound at any radius >= 1")

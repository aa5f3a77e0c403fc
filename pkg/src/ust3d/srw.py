"""Simple random walk on Z^3: stopping rules, cut times, nice cut times.

Walks are deterministic functions of an (seed, stream) pair; per-vertex walk
families derive their stream from the point's injective packing.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from . import _kernels as K
from .geometry import ORIGIN, PACK_LIMIT, as_path, as_point, pack_point

MASK64 = (1 << 64) - 1

# default step budget for hit-set rules (SRW on Z^3 is transient; a finite
# target may never be hit, so the cap is an outcome, not an error)
HIT_SET_DEFAULT_CAP = 10**8


def mix64(x: int) -> int:
    """splitmix64 finalizer over Python ints; bit-identical to the kernels."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derived_seed(rng: "RngConfig") -> int:
    """A fresh 64-bit seed from (seed, stream), for nested samplers.

    Samplers that spend many streams internally (one per vertex) run under a
    derived seed so their stream space cannot collide with caller streams.
    """
    return mix64((rng.seed + rng.stream * 0x9E6C63D0876A9A63) & MASK64)


@dataclass(frozen=True)
class RngConfig:
    """Seed and stream id; identical pairs reproduce identical walks."""

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.seed <= MASK64):
            raise ValueError("seed must fit in 64 bits")
        if not (0 <= self.stream <= MASK64):
            raise ValueError("stream must fit in 64 bits")

    def shifted(self, offset: int) -> "RngConfig":
        """Same seed, stream advanced by offset (mod 2^64)."""
        return RngConfig(self.seed, (self.stream + offset) & MASK64)


@dataclass(frozen=True)
class StopRule:
    """Stopping rule variant for run_walk; build via the factory functions."""

    kind: str  # "exit_ball" | "hit_set" | "step_cap"
    radius: Fraction | None = None
    center: tuple[int, int, int] = (0, 0, 0)
    metric: str = "euclid"  # "euclid" | "linf"
    targets: tuple[int, ...] = ()  # packed points for hit_set
    cap: int = HIT_SET_DEFAULT_CAP


def exit_ball(radius, center=ORIGIN, metric: str = "euclid") -> StopRule:
    """Stop at the first vertex with distance from center >= radius.

    All vertices before the stop lie strictly inside the ball. Rational radii
    (e.g. Fraction(2*m, 5)) are honored exactly.
    """
    radius = Fraction(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    if metric not in ("euclid", "linf"):
        raise ValueError(f"unknown metric {metric!r}")
    if metric == "linf" and radius.denominator != 1:
        raise ValueError("linf radius must be an integer")
    c = as_point(center)
    return StopRule(kind="exit_ball", radius=radius,
                    center=(int(c[0]), int(c[1]), int(c[2])), metric=metric)


def hit_set(targets, cap: int = HIT_SET_DEFAULT_CAP) -> StopRule:
    """Stop on the first vertex inside the target set (cap guards transience)."""
    arr = np.asarray(targets if isinstance(targets, np.ndarray) else list(targets),
                     dtype=np.int64)
    pts = as_path(np.atleast_2d(arr))
    if pts.shape[0] == 0:
        raise ValueError("target set is empty")
    if np.abs(pts).max() > PACK_LIMIT:
        raise ValueError("target coordinates out of packable range")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    codes = tuple(int(pack_point(p)) for p in pts)
    return StopRule(kind="hit_set", targets=codes, cap=cap)


def step_cap(n: int) -> StopRule:
    """Run exactly n steps."""
    if n < 0:
        raise ValueError("step count must be >= 0")
    return StopRule(kind="step_cap", cap=n)


@dataclass(frozen=True)
class WalkResult:
    """A finished walk: the full path and how it ended."""

    path: np.ndarray  # (n, 3) int64, start included
    outcome: str  # "stopped" (rule satisfied) | "cap" (step budget exhausted)

    @property
    def steps(self) -> int:
        return self.path.shape[0] - 1

    @property
    def end(self) -> np.ndarray:
        return self.path[-1]


def run_walk(start, stop: StopRule, rng: RngConfig) -> WalkResult:
    """Run one SRW from start under the stopping rule.

    The path ends at the first index satisfying the rule; with `hit_set` a
    start already inside the targets gives a zero-step path. Hitting the step
    cap is reported as outcome "cap" with the partial path.
    """
    s = as_point(start)
    x0, y0, z0 = int(s[0]), int(s[1]), int(s[2])
    empty_keys = np.full(2, -1, dtype=np.int64)
    empty_vals = np.zeros(2, dtype=np.int64)
    seed = np.uint64(rng.seed)
    stream = np.uint64(rng.stream)
    if stop.kind == "exit_ball":
        cx, cy, cz = stop.center
        if stop.metric == "linf":
            mode, r_int, r_sq = K.MODE_EXIT_LINF, int(stop.radius), 0
            d0 = max(abs(x0 - cx), abs(y0 - cy), abs(z0 - cz))
            if d0 >= r_int:
                raise ValueError("start must lie strictly inside the ball")
        else:
            # stop when squared distance >= radius^2; exact for rational radii
            mode, r_int = K.MODE_EXIT_EUCLID, 0
            r_sq = int(math.ceil(stop.radius * stop.radius))
            d0 = (x0 - cx) ** 2 + (y0 - cy) ** 2 + (z0 - cz) ** 2
            if d0 >= r_sq:
                raise ValueError("start must lie strictly inside the ball")
        path, out = K.walk_collect(x0, y0, z0, mode, r_int, r_sq, cx, cy, cz,
                                   empty_keys, empty_vals, np.int64(2**62),
                                   seed, stream, np.uint64(0))
    elif stop.kind == "hit_set":
        codes = np.asarray(stop.targets, dtype=np.int64)
        keys, vals = K.build_set(codes)
        if max(abs(x0), abs(y0), abs(z0)) > PACK_LIMIT:
            raise ValueError("start out of packable range")
        path, out = K.walk_collect(x0, y0, z0, K.MODE_HIT_SET, 0, 0, 0, 0, 0,
                                   keys, vals, np.int64(stop.cap),
                                   seed, stream, np.uint64(0))
    elif stop.kind == "step_cap":
        path, out = K.walk_collect(x0, y0, z0, K.MODE_FIXED_STEPS, 0, 0, 0, 0, 0,
                                   empty_keys, empty_vals, np.int64(stop.cap),
                                   seed, stream, np.uint64(0))
    else:  # pragma: no cover - StopRule factories prevent this
        raise ValueError(f"unknown stop rule {stop.kind!r}")
    return WalkResult(path=path, outcome="stopped" if out == K.OUT_RULE else "cap")


# ---------------------------------------------------------------------------
# Cut times
# ---------------------------------------------------------------------------

def cut_times(path) -> list[int]:
    """All k < len-1 with vertices(path[0..k]) disjoint from vertices(path[k+1..]).

    k is a cut time exactly when no vertex seen up to k reappears later; the
    final vertex index is excluded (nothing follows it to cut from).
    """
    p = as_path(path)
    n = p.shape[0]
    if n == 1:
        return []
    codes = ((p[:, 0] + (1 << 20))
             | ((p[:, 1] + (1 << 20)) << 21)
             | ((p[:, 2] + (1 << 20)) << 42))
    last: dict[int, int] = {}
    for i, c in enumerate(codes.tolist()):
        last[c] = i
    out = []
    run = -1
    for k, c in enumerate(codes.tolist()[:-1]):
        run = max(run, last[c])
        if run == k:
            out.append(k)
    return out


def slab_hit_time(path, a: int, m: int) -> int | None:
    """First index with first coordinate a and |x^2|, |x^3| <= m; None if never."""
    p = as_path(path)
    hit = np.flatnonzero((p[:, 0] == a)
                         & (np.abs(p[:, 1]) <= m) & (np.abs(p[:, 2]) <= m))
    return int(hit[0]) if hit.size else None


def nice_cut_points(path, j: int, m: int, q: int) -> list[int]:
    """Indices k that are nice cut times for box j of the tube of half-width m.

    With a_j = (j - 1/2) m, k qualifies when (i) it lies in the time window
    [t(a_j + q/2), t(a_j + q)] of first slab visits, (ii) path[t(a_j)..k] and
    path[k+1..t(a_{j+1})] are vertex-disjoint, (iii) the path never touches the
    slab at a_j from k onward (up to t(a_{j+1})), and (iv) path[k] lies in the
    tube with first coordinate in [a_j + q/2, a_j + q]. Non-integer slab
    abscissae round up (a +1/2 walk cannot sit on a half-integer plane).
    Returns [] when any required slab is never reached.
    """
    if j < 1:
        raise ValueError("box index must be >= 1")
    if m < 2 or m % 2:
        raise ValueError("m must be a positive even integer")
    if q < 1:
        raise ValueError("q must be >= 1")
    p = as_path(path)
    a_j = (2 * j - 1) * m // 2
    a_j1 = (2 * j + 1) * m // 2
    tj = slab_hit_time(p, a_j, m)
    tj1 = slab_hit_time(p, a_j1, m)
    tq2 = slab_hit_time(p, a_j + (q + 1) // 2, m)
    tq = slab_hit_time(p, a_j + q, m)
    if tj is None or tj1 is None or tq2 is None or tq is None:
        return []
    if not (tj <= tq2 <= tq <= tj1):
        return []
    # (iii): last visit to the slab at a_j within [0, tj1]
    seg = p[: tj1 + 1]
    in_slab = np.flatnonzero((seg[:, 0] == a_j)
                             & (np.abs(seg[:, 1]) <= m) & (np.abs(seg[:, 2]) <= m))
    last_slab = int(in_slab[-1]) if in_slab.size else -1
    # (ii): cut times of the subpath path[tj..tj1], as absolute indices
    sub_cuts = {tj + k for k in cut_times(p[tj: tj1 + 1])}
    out = []
    for k in range(tq2, tq + 1):
        if k not in sub_cuts:
            continue
        if k <= last_slab:
            continue
        x, y, z = int(p[k, 0]), int(p[k, 1]), int(p[k, 2])
        if not (2 * (x - a_j) >= q and x <= a_j + q and abs(y) <= m and abs(z) <= m):
            continue
        out.append(k)
    return out

"""Lattice primitives for Z^3.

Points are integer triples; paths are (n, 3) int64 arrays whose consecutive
rows differ by exactly one unit step. The length of a path is its number of
steps (edges), so a single-vertex path has length 0.
"""
from __future__ import annotations

from typing import Iterable, Sequence, Union

import numpy as np

Point = tuple[int, int, int]
PathLike = Union[np.ndarray, Sequence[Sequence[int]]]

# The six unit steps of Z^3, in a fixed order shared with the jit kernels.
DIRECTIONS = np.array(
    [
        [1, 0, 0],
        [-1, 0, 0],
        [0, 1, 0],
        [0, -1, 0],
        [0, 0, 1],
        [0, 0, -1],
    ],
    dtype=np.int64,
)

ORIGIN: Point = (0, 0, 0)


def as_point(x: Iterable[int]) -> Point:
    """Coerce to a canonical integer 3-tuple."""
    p = tuple(int(v) for v in x)
    if len(p) != 3:
        raise ValueError(f"a lattice point needs 3 coordinates, got {len(p)}")
    return p  # type: ignore[return-value]


def as_path(path: PathLike) -> np.ndarray:
    """Coerce to an (n, 3) int64 array without validating steps."""
    arr = np.asarray(path, dtype=np.int64)
    if arr.ndim == 1 and arr.size == 3:
        arr = arr.reshape(1, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"a path must have shape (n, 3), got {arr.shape}")
    return arr


def neighbors(x: Iterable[int]) -> list[Point]:
    """The 6 lattice neighbors of x, in DIRECTIONS order."""
    p = as_point(x)
    return [(p[0] + int(d[0]), p[1] + int(d[1]), p[2] + int(d[2])) for d in DIRECTIONS]


# ---------------------------------------------------------------------------
# Metrics and balls
# ---------------------------------------------------------------------------

def d_euclid(x: Iterable[int], y: Iterable[int]) -> float:
    """Euclidean distance."""
    a, b = as_point(x), as_point(y)
    return float(np.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2))


def d_linf(x: Iterable[int], y: Iterable[int]) -> int:
    """l-infinity distance."""
    a, b = as_point(x), as_point(y)
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]), abs(a[2] - b[2]))


def d_l1(x: Iterable[int], y: Iterable[int]) -> int:
    """l-1 distance (graph distance of the full lattice)."""
    a, b = as_point(x), as_point(y)
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) + abs(a[2] - b[2])


def in_ball_euclid(x: Iterable[int], center: Iterable[int], r: float) -> bool:
    """Membership in the closed Euclidean ball of radius r."""
    a, c = as_point(x), as_point(center)
    return (a[0] - c[0]) ** 2 + (a[1] - c[1]) ** 2 + (a[2] - c[2]) ** 2 <= r * r


def in_ball_linf(x: Iterable[int], center: Iterable[int], r: int) -> bool:
    """Membership in the closed l-infinity ball (cube of side 2r+1)."""
    return d_linf(x, center) <= r


# ---------------------------------------------------------------------------
# Path predicates
# ---------------------------------------------------------------------------

def path_length(path: PathLike) -> int:
    """Number of steps of the path (vertices minus one)."""
    return len(as_path(path)) - 1


def is_lattice_path(path: PathLike) -> bool:
    """True when every consecutive pair of rows differs by one unit step."""
    arr = as_path(path)
    if len(arr) <= 1:
        return len(arr) == 1
    steps = np.abs(np.diff(arr, axis=0))
    return bool(np.all(steps.sum(axis=1) == 1))


def is_simple_path(path: PathLike) -> bool:
    """True for a lattice path that visits no vertex twice."""
    arr = as_path(path)
    if not is_lattice_path(arr):
        return False
    seen = set(map(tuple, arr.tolist()))
    return len(seen) == len(arr)


def validate_path(path: PathLike) -> np.ndarray:
    """as_path plus a unit-step check; raises on malformed input."""
    arr = as_path(path)
    if not is_lattice_path(arr):
        raise ValueError("not a lattice path: found a step that is not a unit step")
    return arr


# ---------------------------------------------------------------------------
# Text serialization: one vertex per line, "x y z" in decimal
# ---------------------------------------------------------------------------

def dump_path(path: PathLike, fname: str) -> None:
    """Write a path as one "x y z" line per vertex."""
    arr = as_path(path)
    with open(fname, "w") as fh:
        for x, y, z in arr.tolist():
            fh.write(f"{x} {y} {z}\n")


def load_path(fname: str) -> np.ndarray:
    """Read a path written by dump_path. Round-trips byte-exactly."""
    rows = []
    with open(fname) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"bad path line: {line!r}")
            rows.append([int(v) for v in parts])
    if not rows:
        raise ValueError(f"empty path file: {fname}")
    return np.array(rows, dtype=np.int64)


# ---------------------------------------------------------------------------
# Packed point codes (shared with the jit kernels)
# ---------------------------------------------------------------------------

# Coordinates are packed into one non-negative int64 with 21 bits per axis.
# This is the fixed injective hash used to derive per-vertex RNG streams.
PACK_OFFSET = 1 << 20
PACK_LIMIT = PACK_OFFSET - 2  # |coordinate| must stay below this


def pack_point(x: Iterable[int]) -> int:
    """Injective int64 code of a point with |coords| < 2^20 - 1."""
    a = as_point(x)
    for v in a:
        if abs(v) > PACK_LIMIT:
            raise OverflowError(f"coordinate {v} exceeds packing range +-{PACK_LIMIT}")
    return (
        (a[0] + PACK_OFFSET)
        | ((a[1] + PACK_OFFSET) << 21)
        | ((a[2] + PACK_OFFSET) << 42)
    )


def unpack_point(code: int) -> Point:
    """Inverse of pack_point."""
    mask = (1 << 21) - 1
    return (
        (int(code) & mask) - PACK_OFFSET,
        ((int(code) >> 21) & mask) - PACK_OFFSET,
        ((int(code) >> 42) & mask) - PACK_OFFSET,
    )

"""Lattice primitive tests: metrics, path predicates, packing, text format."""

from __future__ import annotations

import math

import numpy as np
import pytest

from ust3d.geometry import (
    DIRECTIONS,
    PACK_LIMIT,
    as_path,
    d_euclid,
    d_l1,
    d_linf,
    dump_path,
    in_ball_euclid,
    in_ball_linf,
    is_lattice_path,
    is_simple_path,
    load_path,
    neighbors,
    pack_point,
    path_length,
    unpack_point,
    validate_path,
)

RS = np.random.default_rng(20260814)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def test_directions_are_the_six_unit_steps():
    assert DIRECTIONS.shape == (6, 3)
    assert sorted(map(tuple, DIRECTIONS.tolist())) == sorted(
        [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)])


def test_neighbors_are_at_l1_distance_one():
    p = (3, -2, 7)
    nbrs = neighbors(p)
    assert len(nbrs) == 6
    assert len(set(nbrs)) == 6
    assert all(d_l1(p, q) == 1 for q in nbrs)


@pytest.mark.parametrize("_", range(50))
def test_metric_oracles(_):
    x = RS.integers(-100, 100, size=3).tolist()
    y = RS.integers(-100, 100, size=3).tolist()
    assert d_euclid(x, y) == pytest.approx(math.dist(x, y))
    assert d_linf(x, y) == max(abs(a - b) for a, b in zip(x, y))
    assert d_l1(x, y) == sum(abs(a - b) for a, b in zip(x, y))


def test_balls_are_closed():
    assert in_ball_euclid((3, 4, 0), (0, 0, 0), 5.0)
    assert not in_ball_euclid((3, 4, 1), (0, 0, 0), 5.0)
    assert in_ball_linf((5, -5, 5), (0, 0, 0), 5)
    assert not in_ball_linf((6, 0, 0), (0, 0, 0), 5)


# ---------------------------------------------------------------------------
# path predicates
# ---------------------------------------------------------------------------

def test_path_length_counts_steps():
    assert path_length([(0, 0, 0)]) == 0
    assert path_length([(0, 0, 0), (1, 0, 0), (1, 1, 0)]) == 2


def test_lattice_and_simple_path_predicates():
    good = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (1, 0, 0)]
    assert is_lattice_path(good)
    assert not is_simple_path(good)  # revisits (1, 0, 0)
    assert is_simple_path(good[:3])
    diagonal = [(0, 0, 0), (1, 1, 0)]
    assert not is_lattice_path(diagonal)
    assert not is_simple_path(diagonal)


def test_validate_path_rejects_non_unit_steps():
    with pytest.raises(ValueError):
        validate_path([(0, 0, 0), (2, 0, 0)])
    with pytest.raises(ValueError):
        as_path([(0, 0)])
    arr = validate_path([(0, 0, 0), (0, 1, 0)])
    assert arr.dtype == np.int64


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_path_text_roundtrip(tmp_path):
    path = np.array([(0, 0, 0), (1, 0, 0), (1, -1, 0), (1, -1, 1)],
                    dtype=np.int64)
    fname = tmp_path / "walk.txt"
    dump_path(path, str(fname))
    assert fname.read_text() == "0 0 0\n1 0 0\n1 -1 0\n1 -1 1\n"
    back = load_path(str(fname))
    assert np.array_equal(back, path)


def test_load_path_rejects_bad_lines(tmp_path):
    fname = tmp_path / "bad.txt"
    fname.write_text("1 2\n")
    with pytest.raises(ValueError):
        load_path(str(fname))
    fname.write_text("")
    with pytest.raises(ValueError):
        load_path(str(fname))


# ---------------------------------------------------------------------------
# packed codes
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("point", [
    (0, 0, 0),
    (1, -1, 1),
    (PACK_LIMIT, -PACK_LIMIT, PACK_LIMIT),
    (-PACK_LIMIT, PACK_LIMIT, 0),
])
def test_pack_roundtrip(point):
    assert unpack_point(pack_point(point)) == point


def test_pack_is_injective_on_random_points():
    pts = RS.integers(-1000, 1000, size=(500, 3))
    codes = {pack_point(p) for p in pts.tolist()}
    uniq = {tuple(p) for p in pts.tolist()}
    assert len(codes) == len(uniq)


def test_pack_rejects_out_of_range():
    with pytest.raises(OverflowError):
        pack_point((PACK_LIMIT + 1, 0, 0))

"""Walk engine tests: stop rules, determinism, cut times, slab hitting."""

from __future__ import annotations

import numpy as np
import pytest

from ust3d.geometry import d_euclid, d_linf, is_lattice_path, pack_point
from ust3d.srw import (
    RngConfig,
    cut_times,
    derived_seed,
    exit_ball,
    hit_set,
    mix64,
    nice_cut_points,
    run_walk,
    slab_hit_time,
    step_cap,
)


# ---------------------------------------------------------------------------
# seeding
# ---------------------------------------------------------------------------

def test_mix64_matches_published_splitmix64_outputs():
    # First two outputs of splitmix64 seeded with 0 (reference vectors).
    assert mix64(0) == 0xE220A8397B1DCDAF
    assert mix64(1) == 0x910A2DEC89025CC1


def test_rng_config_validation_and_shift():
    rng = RngConfig(7, 2)
    assert rng.shifted(3) == RngConfig(7, 5)
    assert rng.shifted((1 << 64) - 1) == RngConfig(7, 1)  # wraps mod 2^64
    with pytest.raises(ValueError):
        RngConfig(-1, 0)
    with pytest.raises(ValueError):
        RngConfig(0, 1 << 64)


def test_derived_seed_depends_on_seed_and_stream():
    base = derived_seed(RngConfig(123, 5))
    assert base != derived_seed(RngConfig(124, 5))
    assert base != derived_seed(RngConfig(123, 6))
    assert 0 <= base < (1 << 64)


# ---------------------------------------------------------------------------
# run_walk
# ---------------------------------------------------------------------------

def test_walk_is_deterministic_in_seed_and_stream():
    a = run_walk((0, 0, 0), step_cap(500), RngConfig(11, 3)).path
    b = run_walk((0, 0, 0), step_cap(500), RngConfig(11, 3)).path
    c = run_walk((0, 0, 0), step_cap(500), RngConfig(11, 4)).path
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert is_lattice_path(a)


def test_step_cap_runs_exactly_n_steps():
    res = run_walk((2, -1, 5), step_cap(17), RngConfig(1, 0))
    assert res.path.shape == (18, 3)
    assert tuple(res.path[0]) == (2, -1, 5)
    assert res.steps == 17
    assert res.outcome == "stopped"  # completing the budget satisfies the rule


@pytest.mark.parametrize("seed", range(5))
def test_exit_euclid_stops_at_first_distance_at_least_r(seed):
    res = run_walk((0, 0, 0), exit_ball(6), RngConfig(seed, 0))
    assert res.outcome == "stopped"
    dists = np.sqrt((res.path.astype(float) ** 2).sum(axis=1))
    assert (dists[:-1] < 6).all()
    assert dists[-1] >= 6
    assert d_euclid(res.path[-1], (0, 0, 0)) == dists[-1]


@pytest.mark.parametrize("seed", range(5))
def test_exit_linf_stops_at_first_distance_at_least_r(seed):
    res = run_walk((1, 0, 0), exit_ball(4, metric="linf"), RngConfig(seed, 9))
    along = np.abs(res.path).max(axis=1)
    assert (along[:-1] < 4).all()
    assert along[-1] == 4  # one unit step cannot overshoot an integer radius
    assert d_linf(res.path[-1], (0, 0, 0)) == 4


def test_exit_ball_rejects_start_outside():
    with pytest.raises(ValueError):
        run_walk((6, 0, 0), exit_ball(6), RngConfig(0, 0))
    with pytest.raises(ValueError):
        run_walk((4, 4, 4), exit_ball(4, metric="linf"), RngConfig(0, 0))


def test_exit_ball_honors_rational_radius():
    from fractions import Fraction

    # radius 7/2: stop at squared distance >= 12.25, i.e. at >= 13
    res = run_walk((0, 0, 0), exit_ball(Fraction(7, 2)), RngConfig(3, 1))
    sq = (res.path.astype(np.int64) ** 2).sum(axis=1)
    assert (sq[:-1] < 13).all()
    assert sq[-1] >= 13


def test_hit_set_stops_on_first_member():
    targets = [(2, 0, 0), (0, 2, 0), (0, 0, 2), (-2, 0, 0), (0, -2, 0),
               (0, 0, -2)]
    res = run_walk((0, 0, 0), hit_set(targets), RngConfig(5, 0))
    assert res.outcome == "stopped"
    codes = {pack_point(t) for t in targets}
    path_codes = [pack_point(p) for p in res.path.tolist()]
    assert path_codes[-1] in codes
    assert all(c not in codes for c in path_codes[:-1])


def test_hit_set_start_inside_gives_zero_steps():
    res = run_walk((1, 0, 0), hit_set([(1, 0, 0)]), RngConfig(5, 0))
    assert res.steps == 0
    assert res.outcome == "stopped"


def test_hit_set_cap_reports_cap_outcome():
    res = run_walk((0, 0, 0), hit_set([(10**5, 0, 0)], cap=100), RngConfig(5, 0))
    assert res.outcome == "cap"
    assert res.steps == 100


# ---------------------------------------------------------------------------
# cut times
# ---------------------------------------------------------------------------

def _cut_times_oracle(path: np.ndarray) -> list[int]:
    pts = [tuple(p) for p in path.tolist()]
    out = []
    for k in range(len(pts) - 1):
        if not set(pts[: k + 1]) & set(pts[k + 1:]):
            out.append(k)
    return out


@pytest.mark.parametrize("seed", range(20))
def test_cut_times_match_disjointness_oracle(seed):
    path = run_walk((0, 0, 0), step_cap(300), RngConfig(seed, 1)).path
    assert cut_times(path) == _cut_times_oracle(path)


def test_cut_times_on_known_paths():
    straight = [(0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0)]
    assert cut_times(straight) == [0, 1, 2]
    # returns to the origin: nothing before the revisit can be a cut time
    loop = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), (0, 0, 0), (0, 0, 1)]
    assert cut_times(loop) == [4]
    assert cut_times([(0, 0, 0)]) == []


# ---------------------------------------------------------------------------
# slab hitting and nice cut points
# ---------------------------------------------------------------------------

def test_slab_hit_time_oracle():
    path = np.array([(0, 0, 0), (1, 0, 0), (2, 0, 0), (2, 1, 0), (3, 1, 0)],
                    dtype=np.int64)
    assert slab_hit_time(path, 2, 5) == 2
    assert slab_hit_time(path, 3, 5) == 4
    assert slab_hit_time(path, 4, 5) is None
    # wall bound: a visit outside |y|,|z| <= m does not count
    wide = np.array([(5, 9, 0), (5, 0, 0)], dtype=np.int64)
    assert slab_hit_time(wide, 5, 3) == 1


def _straight_path(n: int, offset=(0, 0)) -> np.ndarray:
    path = np.zeros((n + 1, 3), dtype=np.int64)
    path[:, 0] = np.arange(n + 1)
    path[:, 1] = offset[0]
    path[:, 2] = offset[1]
    return path


def test_nice_cut_points_on_straight_path():
    m, q, j = 8, 2, 1
    path = _straight_path(30)
    cuts = nice_cut_points(path, j, m, q)
    # a_1 = 4; window abscissae [a_1 + 1, a_1 + 2] = {5, 6} on a straight line
    assert cuts == [5, 6]
    for k in cuts:
        assert 4 + 1 <= path[k, 0] <= 4 + q


def test_nice_cut_points_require_all_slabs():
    assert nice_cut_points(_straight_path(3), 1, 8, 2) == []  # never reaches a_1


def test_nice_cut_points_reject_backtracking_over_the_slab():
    m, q, j = 8, 2, 1
    # reach x=7, dip back to the a_1 = 4 slab, then continue to a_2 = 12;
    # the candidate window [t(5), t(6)] = [5, 6] precedes the slab revisit
    # at index 10, so condition (iii) empties the result
    xs = list(range(8)) + [6, 5, 4] + list(range(5, 13))
    path = np.zeros((len(xs), 3), dtype=np.int64)
    path[:, 0] = xs
    assert nice_cut_points(path, j, m, q) == []


def test_nice_cut_points_are_cut_times_of_the_excursion():
    rng = RngConfig(20260814, 7)
    path = run_walk((0, 0, 0), step_cap(5000), rng).path
    m, q = 4, 1
    cuts = nice_cut_points(path, 1, m, q)
    t1 = slab_hit_time(path, 2, m)      # a_1 = 2
    t2 = slab_hit_time(path, 6, m)      # a_2 = 6
    if t1 is None or t2 is None:
        assert cuts == []
        return
    whole = {t1 + k for k in cut_times(path[t1: t2 + 1])}
    for k in cuts:
        assert k in whole
        assert 2 * (path[k, 0] - 2) >= q
        assert path[k, 0] <= 2 + q


def test_nice_cut_points_validation():
    path = _straight_path(10)
    with pytest.raises(ValueError):
        nice_cut_points(path, 0, 8, 2)
    with pytest.raises(ValueError):
        nice_cut_points(path, 1, 7, 2)
    with pytest.raises(ValueError):
        nice_cut_points(path, 1, 8, 0)

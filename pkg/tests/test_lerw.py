"""Loop-erasure tests: forward vs recursion oracle, M_n sampling, fits."""

from __future__ import annotations

import numpy as np
import pytest

from ust3d.geometry import d_euclid, is_simple_path
from ust3d.lerw import (
    BETA_POINT_ESTIMATE,
    estimate_beta,
    fit_loglog,
    loop_erase,
    loop_erase_by_recursion,
    sample_M_n,
    sample_M_n_batch,
    tail_profile,
)
from ust3d.srw import RngConfig, exit_ball, run_walk, step_cap


# ---------------------------------------------------------------------------
# loop erasure
# ---------------------------------------------------------------------------

def test_loop_erase_known_cases():
    simple = [(0, 0, 0), (1, 0, 0), (1, 1, 0)]
    assert np.array_equal(loop_erase(simple), np.asarray(simple))
    backtrack = [(0, 0, 0), (1, 0, 0), (0, 0, 0), (0, 1, 0)]
    assert np.array_equal(loop_erase(backtrack), [[0, 0, 0], [0, 1, 0]])
    square = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), (0, 0, 0),
              (0, 0, 1)]
    assert np.array_equal(loop_erase(square), [[0, 0, 0], [0, 0, 1]])
    single = [(3, 3, 3)]
    assert np.array_equal(loop_erase(single), np.asarray(single))


@pytest.mark.parametrize("seed", range(30))
def test_loop_erase_output_is_a_simple_path_with_same_endpoints(seed):
    path = run_walk((0, 0, 0), step_cap(400), RngConfig(seed, 0)).path
    erased = loop_erase(path)
    assert is_simple_path(erased)
    assert tuple(erased[0]) == tuple(path[0])
    assert tuple(erased[-1]) == tuple(path[-1])
    # idempotent
    assert np.array_equal(loop_erase(erased), erased)


@pytest.mark.parametrize("seed", range(50))
def test_forward_erasure_matches_recursion_oracle(seed):
    length = int(np.random.default_rng(seed).integers(1, 300))
    path = run_walk((0, 0, 0), step_cap(length), RngConfig(seed, 5)).path
    assert np.array_equal(loop_erase(path), loop_erase_by_recursion(path))


# ---------------------------------------------------------------------------
# M_n sampling
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(10))
def test_sample_M_n_equals_walk_plus_erasure(seed):
    # dual route: the fused sampler against the composed walk + erasure
    rng = RngConfig(seed, 3)
    n = 12
    direct = sample_M_n(n, rng)
    path = run_walk((0, 0, 0), exit_ball(n), rng).path
    assert direct == len(loop_erase(path)) - 1
    assert d_euclid(path[-1], (0, 0, 0)) >= n


def test_sample_M_n_batch_matches_singles_and_is_jobs_invariant():
    rng = RngConfig(4, 9)
    batch1 = sample_M_n_batch(8, 128, rng, jobs=1)
    batch3 = sample_M_n_batch(8, 128, rng, jobs=3)
    assert np.array_equal(batch1, batch3)
    for t in range(8):
        assert int(batch1[t]) == sample_M_n(8, rng.shifted(t))


def test_sample_M_n_validation():
    with pytest.raises(ValueError):
        sample_M_n(0, RngConfig(1, 0))
    with pytest.raises(ValueError):
        sample_M_n_batch(4, 0, RngConfig(1, 0))


# ---------------------------------------------------------------------------
# fits
# ---------------------------------------------------------------------------

def test_fit_loglog_recovers_exact_power_law():
    xs = np.array([2.0, 4.0, 8.0, 16.0])
    ys = 3.0 * xs ** 1.7
    fit = fit_loglog(xs, ys)
    assert fit.slope == pytest.approx(1.7, abs=1e-12)
    assert fit.intercept == pytest.approx(np.log(3.0), abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(fit.residuals, 0.0, atol=1e-12)


def test_fit_loglog_rejects_degenerate_input():
    with pytest.raises(ValueError):
        fit_loglog([2.0], [3.0])
    with pytest.raises(ValueError):
        fit_loglog([2.0, 2.0], [3.0, 4.0])
    with pytest.raises(ValueError):
        fit_loglog([1.0, 2.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        fit_loglog([-1.0, 2.0], [1.0, 1.0])


def test_estimate_beta_smoke_and_reproducibility():
    rng = RngConfig(20260814, 0)
    fit = estimate_beta([8, 16, 32], 40, rng, jobs=1)
    again = estimate_beta([8, 16, 32], 40, rng, jobs=2)
    assert fit.slope == again.slope  # jobs-invariant reduction
    assert np.array_equal(fit.means, again.means)
    assert fit.trials == 40
    assert 1.0 < fit.slope < 2.0
    assert (fit.stderrs > 0).all()
    with pytest.raises(ValueError):
        estimate_beta([8], 10, rng)
    with pytest.raises(ValueError):
        estimate_beta([8, 8], 10, rng)


def test_beta_point_estimate_constant():
    assert BETA_POINT_ESTIMATE == 1.624


# ---------------------------------------------------------------------------
# tails
# ---------------------------------------------------------------------------

def test_tail_profile_frequencies_are_monotone_in_kappa():
    prof = tail_profile(16, 400, [1.0, 1.5, 2.0, 3.0], RngConfig(3, 0), jobs=1)
    assert prof.mean > 0
    assert prof.upper.shape == (4,)
    assert ((prof.upper >= 0) & (prof.upper <= 1)).all()
    assert ((prof.lower >= 0) & (prof.lower <= 1)).all()
    assert (np.diff(prof.upper) <= 0).all()  # raising kappa shrinks the event
    assert (np.diff(prof.lower) <= 0).all()
    assert prof.upper[0] + prof.lower[0] >= 1.0  # kappa = 1 covers everything


def test_tail_profile_rejects_kappa_below_one():
    with pytest.raises(ValueError):
        tail_profile(16, 10, [0.5, 2.0], RngConfig(3, 0))

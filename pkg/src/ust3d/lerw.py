"""Chronological loop erasure, the exit-length statistic M_n, growth-exponent
fits and tail profiles.

M_n is the length (number of steps) of the loop erasure of an SRW from the
origin run until its Euclidean norm first reaches n. Its mean grows like
n^beta with beta in (1, 5/3], numerically close to 1.624.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .geometry import as_path
from .srw import RngConfig

# point estimate of the growth exponent; downstream derived exponents move
# with it (3/beta for volume, -3/(3+beta) for the return probability)
BETA_POINT_ESTIMATE = 1.624


def _pack_codes(p: np.ndarray) -> np.ndarray:
    return ((p[:, 0] + (1 << 20))
            | ((p[:, 1] + (1 << 20)) << 21)
            | ((p[:, 2] + (1 << 20)) << 42))


def loop_erase(path) -> np.ndarray:
    """Chronological loop erasure of a lattice path.

    Forward construction: replay the path, and on revisiting a vertex still in
    the partial output truncate back to it. Output is a simple path with the
    input's endpoints; erasing twice changes nothing.
    """
    p = as_path(path)
    codes = _pack_codes(p).tolist()
    pos: dict[int, int] = {}
    stack_codes: list[int] = []
    stack_idx: list[int] = []
    for i, c in enumerate(codes):
        j = pos.get(c, -1)
        if 0 <= j < len(stack_codes) and stack_codes[j] == c:
            del stack_codes[j + 1:]
            del stack_idx[j + 1:]
        else:
            pos[c] = len(stack_codes)
            stack_codes.append(c)
            stack_idx.append(i)
    return p[np.asarray(stack_idx, dtype=np.int64)]


def loop_erase_by_recursion(path) -> np.ndarray:
    """Loop erasure by the defining supremum recursion (cross-check oracle).

    T(0) = sup{j : gamma_j = gamma_0}, T(i) = sup{j : gamma_j = gamma_{T(i-1)+1}},
    stopping at the first i with T(i) = len(gamma); the output is gamma at the
    times T(0), T(1), .... The supremum over j is precomputed per vertex (the
    last occurrence), which evaluates the same global sup in linear time.
    """
    p = as_path(path)
    codes = _pack_codes(p).tolist()
    last: dict[int, int] = {}
    for j, c in enumerate(codes):
        last[c] = j
    k = len(codes) - 1
    out = []
    t = -1
    while True:
        t = last[codes[t + 1]]
        out.append(t)
        if t == k:
            break
    return p[np.asarray(out, dtype=np.int64)]


# ---------------------------------------------------------------------------
# M_n sampling and exponent fits
# ---------------------------------------------------------------------------

def sample_M_n(n: int, rng: RngConfig) -> int:
    """Length of the loop erasure of one SRW from 0 run to Euclidean radius n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return int(K.lerw_exit_length(np.int64(n) * np.int64(n),
                                  np.uint64(rng.seed), np.uint64(rng.stream)))


def sample_M_n_batch(n: int, trials: int, rng: RngConfig, jobs: int = 1) -> np.ndarray:
    """M_n over `trials` independent streams rng.stream + t; jobs-invariant."""
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be >= 1")
    r_sq = np.int64(n) * np.int64(n)
    seed = np.uint64(rng.seed)
    if jobs <= 1 or trials < 64:
        return K.lerw_exit_length_batch(r_sq, np.int64(trials),
                                        seed, np.uint64(rng.stream))
    chunk = (trials + jobs - 1) // jobs
    spans = [(t0, min(chunk, trials - t0)) for t0 in range(0, trials, chunk)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(
            lambda s: K.lerw_exit_length_batch(
                r_sq, np.int64(s[1]), seed,
                np.uint64((rng.stream + s[0]) & ((1 << 64) - 1))),
            spans))
    return np.concatenate(parts)


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares line through (log x, log y) points."""

    slope: float
    intercept: float
    residuals: np.ndarray  # per-point, in log space
    radii: np.ndarray
    means: np.ndarray | None = None
    stderrs: np.ndarray | None = None
    trials: int = 0

    @property
    def r_squared(self) -> float:
        y = self.residuals + self.fitted
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        ss_res = float(np.sum(self.residuals ** 2))
        return 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot

    @property
    def fitted(self) -> np.ndarray:
        return self.slope * np.log(self.radii.astype(np.float64)) + self.intercept


def fit_loglog(xs, ys) -> ExponentFit:
    """Fit log(y) = slope * log(x) + intercept."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.size < 2 or np.unique(xs).size < 2:
        raise ValueError("need at least two distinct x values")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit needs positive data")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    residuals = ly - (slope * lx + intercept)
    return ExponentFit(slope=float(slope), intercept=float(intercept),
                       residuals=residuals, radii=xs)


def estimate_beta(radii, trials: int, rng: RngConfig, jobs: int = 1) -> ExponentFit:
    """Fit log E[M_n] against log n over the given radii.

    Streams: radius index i, trial t uses rng.stream + i * trials + t, so the
    result is independent of jobs and reproducible per (seed, stream).
    """
    radii = [int(r) for r in radii]
    if len(radii) < 2 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing with >= 2 entries")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    means = np.empty(len(radii), dtype=np.float64)
    stderrs = np.empty(len(radii), dtype=np.float64)
    for i, r in enumerate(radii):
        samples = sample_M_n_batch(r, trials, rng.shifted(i * trials), jobs=jobs)
        means[i] = samples.mean()
        stderrs[i] = samples.std(ddof=1) / np.sqrt(trials) if trials > 1 else 0.0
    base = fit_loglog(radii, means)
    return ExponentFit(slope=base.slope, intercept=base.intercept,
                       residuals=base.residuals, radii=base.radii,
                       means=means, stderrs=stderrs, trials=trials)


@dataclass(frozen=True)
class TailProfile:
    """Upper/lower tail frequencies of M_n against multiples of its mean."""

    n: int
    trials: int
    mean: float
    kappas: np.ndarray
    upper: np.ndarray  # P(M_n >= kappa * mean), empirical
    lower: np.ndarray  # P(M_n <= mean / kappa), empirical


def tail_profile(n: int, trials: int, kappas, rng: RngConfig,
                 jobs: int = 1) -> TailProfile:
    """Empirical tail frequencies of M_n at multiples kappa of the sample mean."""
    kappas = np.asarray(sorted(float(k) for k in kappas), dtype=np.float64)
    if kappas.size == 0 or kappas[0] < 1.0:
        raise ValueError("kappa grid must be nonempty with kappa >= 1")
    samples = sample_M_n_batch(n, trials, rng, jobs=jobs).astype(np.float64)
    mean = float(samples.mean())
    upper = np.array([(samples >= k * mean).mean() for k in kappas])
    lower = np.array([(samples <= mean / k).mean() for k in kappas])
    return TailProfile(n=n, trials=trials, mean=mean,
                       kappas=kappas, upper=upper, lower=lower)

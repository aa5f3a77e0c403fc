"""Tube crossing detectors, spiral box sequences, and scaling experiments.

The tube detectors evaluate, on a concrete walk trajectory, the crossing,
cut-point, length, and hittability events used to control loop-erased walks
confined to long axis-aligned tubes. The spiral generator emits the
deterministic sequence of boxes that sweeps space outward from the origin.
The experiments measure how intrinsic ball volume and the return probability
scale on sampled window trees.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .geometry import as_path
from .lerw import BETA_POINT_ESTIMATE, ExponentFit, fit_loglog, loop_erase
from .srw import RngConfig, nice_cut_points, slab_hit_time
from .wilson import UstWindowConfig, sample_window_raw

MASK64 = (1 << 64) - 1


def _pack_codes(path: np.ndarray) -> np.ndarray:
    """Packed integer codes of lattice points, one per row."""
    off = np.int64(1 << 20)
    p = path.astype(np.int64)
    return (p[:, 0] + off) | ((p[:, 1] + off) << 21) | ((p[:, 2] + off) << 42)


# ---------------------------------------------------------------------------
# Tube geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TubeGeometry:
    """Axis-aligned tube of half-width m, divided into boxes of length m.

    Slab level j sits at a_j = (2j - 1) m / 2, and q is the backtracking
    scale m / N**2, rounded to the nearest integer (halves up, floor 1).
    Membership helpers expect coordinates already oriented so the tube axis
    is the first column; `oriented` produces that layout.
    """

    m: int
    N: int
    q: int = 0
    axis: int = 0

    def __post_init__(self) -> None:
        if self.m < 2 or self.m % 2:
            raise ValueError("m must be a positive even integer")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.axis not in (0, 1, 2):
            raise ValueError("axis must be 0, 1, or 2")
        if self.q == 0:
            n2 = self.N * self.N
            object.__setattr__(self, "q", max(1, (2 * self.m + n2) // (2 * n2)))
        if self.q < 1:
            raise ValueError("q must be >= 1")

    def a(self, j: int) -> int:
        """Slab level a_j = (2j - 1) m / 2."""
        return ((2 * j - 1) * self.m) // 2

    def oriented(self, path) -> np.ndarray:
        """Copy of the path with the tube axis moved to the first column."""
        p = as_path(path)
        return p[:, [self.axis, (self.axis + 1) % 3, (self.axis + 2) % 3]]

    def in_box(self, points, lo: int, hi: int) -> np.ndarray:
        """Mask: first coordinate in [lo, hi] and both walls within m."""
        p = as_path(points)
        return ((p[:, 0] >= lo) & (p[:, 0] <= hi)
                & (np.abs(p[:, 1]) <= self.m) & (np.abs(p[:, 2]) <= self.m))

    def in_slab(self, points, a: int) -> np.ndarray:
        """Mask: first coordinate exactly a, walls within m."""
        p = as_path(points)
        return ((p[:, 0] == a)
                & (np.abs(p[:, 1]) <= self.m) & (np.abs(p[:, 2]) <= self.m))

    def in_narrow_slab(self, points, a: int) -> np.ndarray:
        """Mask: first coordinate exactly a, walls within m/2."""
        h = self.m // 2
        p = as_path(points)
        return (p[:, 0] == a) & (np.abs(p[:, 1]) <= h) & (np.abs(p[:, 2]) <= h)

    def in_forbidden_ring(self, points, j: int) -> np.ndarray:
        """Mask: on the plane x^1 = j m but outside the safe annulus.

        The safe annulus keeps the squared wall distance rho^2 = (x^2)^2 +
        (x^3)^2 between m^2/100 and m^2/64 (inclusive, exact integer
        comparisons).
        """
        p = as_path(points)
        rho2 = p[:, 1] * p[:, 1] + p[:, 2] * p[:, 2]
        m2 = np.int64(self.m) * np.int64(self.m)
        safe = (100 * rho2 >= m2) & (64 * rho2 <= m2)
        return (p[:, 0] == np.int64(j) * self.m) & ~safe


# ---------------------------------------------------------------------------
# Per-box event detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EventFlags:
    """Per-box outcomes of the tube crossing events.

    Entry j of each tuple refers to box j (crossing events indexed from the
    starting box 0). None marks a flag whose prerequisites are undefined on
    the given finite path: missing slab times for any flag, box index 0 for
    the cut-point and hittability flags, and a false crossing flag for the
    cut-point flag. `f_prob` and `f_stderr` carry the Monte Carlo estimate
    behind each hittability flag.
    """

    m: int
    N: int
    q: int
    length_constant: float
    eta: float
    crossing: tuple[bool | None, ...]
    cut_point: tuple[bool | None, ...]
    length_ok: tuple[bool | None, ...]
    hittable: tuple[bool | None, ...]
    f_prob: tuple[float | None, ...]
    f_stderr: tuple[float | None, ...]

    @property
    def boxes(self) -> int:
        return len(self.crossing)


def tube_event_check(path, geom: TubeGeometry, length_constant: float,
                     eta: float, hit_trials: int = 10**3,
                     rng: RngConfig | None = None, *, boxes: int | None = None,
                     beta: float = BETA_POINT_ESTIMATE) -> EventFlags:
    """Evaluate the per-box tube events on one walk trajectory.

    Box j's crossing flag checks, literally: the walk arrives on the narrow
    slab at a_{j+1}, stays inside the box (walls m, floor a_j - q) between
    consecutive slab times, avoids the forbidden ring on the mid-plane
    x^1 = j m, and after first touching level a_{j+1} - q never returns to
    level a_{j+1} - 2 q. Box 0 uses the start segment with floor -m/2 and an
    empty-intersection form of the backtrack condition. The cut-point flag
    asks for a nice cut time (see srw.nice_cut_points); the length flag
    bounds the loop erasure of the excursion by length_constant * m**beta;
    the hittability flag estimates, over hit_trials fresh walks from the box
    center x_j = (j m, 0, 0), the probability of touching that loop erasure
    before leaving the Euclidean ball of radius 2m/5 around x_j, and
    compares it to eta.

    Walk trial t for box j uses stream rng.stream + j * hit_trials + t.
    """
    if rng is None:
        raise ValueError("rng is required for the hittability estimates")
    if hit_trials < 1:
        raise ValueError("hit_trials must be >= 1")
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    if length_constant <= 0:
        raise ValueError("length_constant must be positive")
    n_boxes = geom.N if boxes is None else boxes
    if n_boxes < 1:
        raise ValueError("need at least one box")

    p = geom.oriented(path)
    m, q = geom.m, geom.q
    t_slab = {j: slab_hit_time(p, geom.a(j), m) for j in range(1, n_boxes + 1)}
    r_sq = (4 * m * m + 24) // 25  # ceil((2m/5)^2)

    crossing: list[bool | None] = []
    cut_point: list[bool | None] = []
    length_ok: list[bool | None] = []
    hittable: list[bool | None] = []
    f_prob: list[float | None] = []
    f_stderr: list[float | None] = []

    for j in range(n_boxes):
        tj = t_slab[j] if j >= 1 else 0
        tj1 = t_slab[j + 1]
        defined = tj is not None and tj1 is not None and tj < tj1
        if j == 0:
            defined = tj1 is not None

        # -- crossing (A) -------------------------------------------------
        if not defined:
            a_flag = None
        elif j == 0:
            seg = p[: tj1 + 1]
            ok = bool(geom.in_narrow_slab(p[tj1: tj1 + 1], geom.a(1))[0])
            ok = ok and bool(geom.in_box(seg, -(m // 2), geom.a(1)).all())
            if ok:
                tq = slab_hit_time(p, geom.a(1) - q, m)
                if tq is not None and tq <= tj1:
                    ok = not bool(
                        geom.in_slab(p[tq: tj1 + 1], geom.a(1) - 2 * q).any())
            a_flag = ok
        else:
            seg = p[tj: tj1 + 1]
            ok = bool(geom.in_narrow_slab(p[tj1: tj1 + 1], geom.a(j + 1))[0])
            ok = ok and bool(geom.in_box(seg, geom.a(j) - q, geom.a(j + 1)).all())
            ok = ok and not bool(geom.in_forbidden_ring(seg, j).any())
            if ok:
                tq = slab_hit_time(p, geom.a(j + 1) - q, m)
                if tq is not None and tq <= tj1:
                    window = p[tq: tj1 + 1]
                    ok = bool(geom.in_box(
                        window, geom.a(j + 1) - 2 * q, geom.a(j + 1)).all())
            a_flag = ok
        crossing.append(a_flag)

        # -- excursion loop erasure (shared by E and F) --------------------
        erased = None
        if defined:
            erased = loop_erase(p[tj: tj1 + 1])

        # -- length bound (E) ----------------------------------------------
        if erased is None:
            length_ok.append(None)
        else:
            bound = length_constant * float(m) ** beta
            length_ok.append(bool(erased.shape[0] - 1 <= bound))

        # -- nice cut point (B) ---------------------------------------------
        if j == 0 or a_flag is not True:
            cut_point.append(None)
        else:
            cut_point.append(bool(nice_cut_points(p, j, m, q)))

        # -- hittability (F) -------------------------------------------------
        if j == 0 or erased is None:
            hittable.append(None)
            f_prob.append(None)
            f_stderr.append(None)
        else:
            keys, vals = K.build_set(_pack_codes(erased))
            stream0 = (rng.stream + j * hit_trials) & MASK64
            hits = int(K.hit_before_exit(
                keys, vals, np.int64(j * m), np.int64(0), np.int64(0),
                np.int64(r_sq), np.int64(hit_trials),
                np.uint64(rng.seed), np.uint64(stream0)))
            prob = hits / hit_trials
            hittable.append(bool(prob >= eta))
            f_prob.append(prob)
            f_stderr.append(math.sqrt(prob * (1.0 - prob) / hit_trials))

    return EventFlags(m=m, N=geom.N, q=q, length_constant=float(length_constant),
                      eta=float(eta), crossing=tuple(crossing),
                      cut_point=tuple(cut_point), length_ok=tuple(length_ok),
                      hittable=tuple(hittable), f_prob=tuple(f_prob),
                      f_stderr=tuple(f_stderr))


def tube_a1_probability(m: int, N: int, trials: int, rng: RngConfig,
                        jobs: int = 1, q: int | None = None
                        ) -> tuple[float, float]:
    """Estimate the box-1 crossing probability for walks started at (m/2,0,0).

    Returns (estimate, standard error). Trial t uses stream rng.stream + t,
    so the result does not depend on jobs.
    """
    geom = TubeGeometry(m=m, N=N, q=0 if q is None else q)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seed = np.uint64(rng.seed)
    spans = [(0, trials)]
    if jobs > 1 and trials >= 64:
        chunk = (trials + jobs - 1) // jobs
        spans = [(t0, min(chunk, trials - t0)) for t0 in range(0, trials, chunk)]

    def run(span: tuple[int, int]) -> int:
        t0, cnt = span
        return int(K.tube_a1_hits(
            np.int64(geom.m), np.int64(geom.q), np.int64(cnt), seed,
            np.uint64((rng.stream + t0) & MASK64)))

    if len(spans) == 1:
        hits = run(spans[0])
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            hits = sum(pool.map(run, spans))
    p_hat = hits / trials
    return p_hat, math.sqrt(p_hat * (1.0 - p_hat) / trials)


# ---------------------------------------------------------------------------
# Spiral box sequence
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoxSequence:
    """Ordered centers of side-m boxes; consecutive centers are m apart."""

    centers: np.ndarray
    m: int
    N: int

    def __len__(self) -> int:
        return self.centers.shape[0]


def _face_spiral(s: int) -> list[tuple[int, int]]:
    """Center-out cover of the square [-s, s]^2, ending at the corner (s, -s).

    Runs of length 1, 1, 2, 2, 3, 3, ... heading east, north, west, south;
    the final run stops once the square is covered.
    """
    cells = [(0, 0)]
    if s == 0:
        return cells
    total = (2 * s + 1) ** 2
    x = y = 0
    run = 1
    d = 0
    steps = ((1, 0), (0, 1), (-1, 0), (0, -1))
    while len(cells) < total:
        dx, dy = steps[d % 4]
        for _ in range(run):
            x += dx
            y += dy
            cells.append((x, y))
            if len(cells) == total:
                break
        if d % 2 == 1:
            run += 1
        d += 1
    return cells


def _ring(s: int) -> list[tuple[int, int]]:
    """Boundary of [-s, s]^2 walked counterclockwise from (s, -s); 8s cells."""
    cells = [(s, j) for j in range(-s, s + 1)]
    cells += [(i, s) for i in range(s - 1, -s - 1, -1)]
    cells += [(-s, j) for j in range(s - 1, -s - 1, -1)]
    cells += [(i, -s) for i in range(-s + 1, s)]
    return cells


def _stage_cells(n: int) -> list[tuple[int, int, int]]:
    """Cells added by stage n >= 2 in its upward orientation.

    Up to the new top layer and across it center-out, down the side rings
    (each ring entered one position past where the previous layer ended, so
    successive cells stay adjacent), then inward across the new bottom layer
    back to its center.
    """
    s = n - 1
    cells = [(i, j, n) for (i, j) in _face_spiral(s)]
    ring = _ring(s)
    length = 8 * s
    for k, level in enumerate(range(n - 1, -(n - 2) - 1, -1)):
        start = (-k) % length
        cells.extend((ring[(start + t) % length][0],
                      ring[(start + t) % length][1], level)
                     for t in range(length))
    inward = [(-i, j) for (i, j) in _face_spiral(s)][::-1]
    cells.extend((i, j, -(n - 1)) for (i, j) in inward)
    return cells


def spiral_box_sequence(N: int, m: int) -> BoxSequence:
    """The outward spiral of 2N(2N-1)^2 box centers starting at the origin.

    Stage 1 is the origin box and the one above it. Stage n grows the prism
    by one layer of boxes on every side plus one extra layer along the long
    axis: upward for even n (top face outward, side rings downward, bottom
    face inward), downward for odd n (mirrored). Consecutive centers always
    differ by m in exactly one coordinate, and stage n never comes closer
    than (n - 1) m to the origin.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if m < 1:
        raise ValueError("m must be >= 1")
    cells: list[tuple[int, int, int]] = [(0, 0, 0), (0, 0, 1)]
    for n in range(2, N + 1):
        stage = _stage_cells(n)
        if n % 2:
            stage = [(i, j, 1 - level) for (i, j, level) in stage]
        cells.extend(stage)
    centers = np.asarray(cells, dtype=np.int64) * np.int64(m)
    return BoxSequence(centers=centers, m=m, N=N)


# ---------------------------------------------------------------------------
# Per-sample checkpointing (long experiments are resumable)
# ---------------------------------------------------------------------------


def _checkpoint_rows(path: str, signature: str) -> dict[int, list[str]]:
    """Completed sample rows from a checkpoint file, keyed by sample index.

    A file whose first line is not exactly ``# signature`` is discarded (the
    configuration changed). Unparseable trailing lines, e.g. from a crash
    mid-write, are skipped.
    """
    rows: dict[int, list[str]] = {}
    if not os.path.exists(path):
        return rows
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != f"# {signature}":
        return rows
    for line in lines[1:]:
        parts = line.split(",")
        try:
            rows[int(parts[0])] = parts[1:]
        except (ValueError, IndexError):
            continue
    return rows


class _CheckpointWriter:
    """Appends one line per completed sample, re-creating stale files."""

    def __init__(self, path: str | None, signature: str, resume: bool):
        self._fh = None
        if path is None:
            return
        mode = "a" if resume and os.path.exists(path) else "w"
        self._fh = open(path, mode, encoding="utf-8")
        if mode == "w":
            self._fh.write(f"# {signature}\n")
            self._fh.flush()

    def write(self, t: int, fields: list[str]) -> None:
        if self._fh is not None:
            self._fh.write(",".join([str(t)] + fields) + "\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()


# ---------------------------------------------------------------------------
# Volume scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VolumeScalingResult:
    """Per-radius ball volume statistics across window tree samples."""

    radii: np.ndarray            # (R,) int64
    volumes: np.ndarray          # (samples, R) int64; -1 marks a clipped entry
    valid: np.ndarray            # (samples, R) bool
    medians: np.ndarray          # (R,) float64 over valid entries
    means: np.ndarray
    q25: np.ndarray
    q75: np.ndarray
    clipped: np.ndarray          # (R,) int64 count of excluded entries
    fit: ExponentFit             # log median vs log r
    window_R: int
    samples: int


def volume_scaling_experiment(R: int, radii, samples: int, rng: RngConfig,
                              *, K_factor: int = 4, jobs: int = 1,
                              checkpoint: str | None = None
                              ) -> VolumeScalingResult:
    """Measure |B_U(0, r)| across independent window trees and fit the slope.

    Sample t is drawn with stream rng.stream + t; rows are reduced in sample
    order, so results are reproducible and independent of jobs. A volume
    entry is excluded as clipped only when its exactness cannot be
    certified: radii at most R are always exact, larger ones need the ball
    to stay strictly inside the window. Radii where every sample is clipped
    are dropped from the fit with a warning.

    `checkpoint` names a file that records each finished sample; rerunning
    with the same configuration resumes after the recorded ones (samples are
    independent streams, so the combined result is identical). Checkpointed
    runs proceed sequentially.
    """
    r_arr = np.asarray(sorted(int(r) for r in radii), dtype=np.int64)
    if r_arr.size < 2 or r_arr[0] < 1:
        raise ValueError("need at least two positive radii")
    if np.unique(r_arr).size != r_arr.size:
        raise ValueError("radii must be distinct")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    cfg = UstWindowConfig(R=R, K=K_factor)

    def one(t: int) -> tuple[np.ndarray, int, bool]:
        tree = sample_window_raw(cfg, rng.shifted(t))
        vols, max_linf, boundary = tree.ball_volumes(r_arr.tolist())
        return np.asarray(vols, dtype=np.int64), max_linf, boundary

    if checkpoint is not None:
        sig = (f"vol-scaling v1 R={R} K={K_factor} "
               f"radii={','.join(str(r) for r in r_arr.tolist())} "
               f"seed={rng.seed} stream={rng.stream}")
        done = _checkpoint_rows(checkpoint, sig)
        writer = _CheckpointWriter(checkpoint, sig, resume=bool(done))
        rows = []
        try:
            for t in range(samples):
                if t in done and len(done[t]) == 2 + r_arr.size:
                    f = done[t]
                    rows.append((np.asarray([int(v) for v in f[2:]],
                                            dtype=np.int64),
                                 int(f[0]), bool(int(f[1]))))
                    continue
                vols, max_linf, bnd = one(t)
                writer.write(t, [str(max_linf), str(int(bnd))]
                             + [str(v) for v in vols.tolist()])
                rows.append((vols, max_linf, bnd))
        finally:
            writer.close()
    elif jobs <= 1 or samples == 1:
        rows = [one(t) for t in range(samples)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, range(samples)))

    volumes = np.empty((samples, r_arr.size), dtype=np.int64)
    valid = np.empty((samples, r_arr.size), dtype=bool)
    for t, (vols, max_linf, boundary) in enumerate(rows):
        volumes[t] = vols
        certified = not boundary and max_linf <= R - 1
        valid[t] = (r_arr <= R) | certified
    volumes = np.where(valid, volumes, -1)

    n_valid = valid.sum(axis=0)
    keep = n_valid > 0
    if not keep.all():
        dropped = ", ".join(str(r) for r in r_arr[~keep])
        warnings.warn(f"all samples clipped at r = {dropped}; dropped",
                      stacklevel=2)
    medians = np.full(r_arr.size, np.nan)
    means = np.full(r_arr.size, np.nan)
    q25 = np.full(r_arr.size, np.nan)
    q75 = np.full(r_arr.size, np.nan)
    for i in range(r_arr.size):
        col = volumes[valid[:, i], i].astype(np.float64)
        if col.size:
            medians[i] = float(np.median(col))
            means[i] = float(col.mean())
            q25[i] = float(np.quantile(col, 0.25))
            q75[i] = float(np.quantile(col, 0.75))
    fit = fit_loglog(r_arr[keep], medians[keep])
    return VolumeScalingResult(
        radii=r_arr, volumes=volumes, valid=valid, medians=medians,
        means=means, q25=q25, q75=q75,
        clipped=(samples - n_valid).astype(np.int64), fit=fit,
        window_R=R, samples=samples)


# ---------------------------------------------------------------------------
# Heat kernel scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HeatKernelScalingResult:
    """Per-n return probability statistics across window tree samples.

    `values[t, i]` is p_{2 n_i}(0, 0) on sample t, exact per tree. The
    normalized columns rescale by n^{3/(3+beta)}; their cross-sample spread
    is the fluctuation diagnostic.
    """

    ns: np.ndarray               # (N,) int64 half step counts
    values: np.ndarray           # (kept samples, N) float64
    medians: np.ndarray
    means: np.ndarray
    q25: np.ndarray
    q75: np.ndarray
    normalized_median: np.ndarray
    normalized_variance: np.ndarray   # ddof=1 across samples
    fit: ExponentFit             # log median p_{2n} vs log n
    beta: float
    rejected: int                # samples without an exactness certificate
    max_drift: float
    window_R: int


def heat_kernel_scaling_experiment(R: int, ns, samples: int, rng: RngConfig,
                                   *, K_factor: int = 4, jobs: int = 1,
                                   beta: float = BETA_POINT_ESTIMATE,
                                   checkpoint: str | None = None
                                   ) -> HeatKernelScalingResult:
    """Measure p_{2n}(0, 0) across independent window trees and fit the slope.

    Each sample extracts the intrinsic ball of radius max(ns) around the
    origin and iterates the walk measure exactly; the value at n only
    involves vertices within tree distance n, so one extraction serves the
    whole grid. A sample is kept only when the ball certifiably equals the
    infinite-tree ball with final degrees (l-inf reach at most R - 1 and no
    storage-boundary contact); rejected samples are counted. Requires at
    least two kept samples so the fluctuation diagnostic is defined.

    `checkpoint` behaves as in volume_scaling_experiment.
    """
    n_arr = np.asarray(sorted(int(n) for n in ns), dtype=np.int64)
    if n_arr.size < 2 or n_arr[0] < 1:
        raise ValueError("need at least two positive step counts")
    if np.unique(n_arr).size != n_arr.size:
        raise ValueError("step counts must be distinct")
    if samples < 2:
        raise ValueError("samples must be >= 2")
    cfg = UstWindowConfig(R=R, K=K_factor)
    rmax = int(n_arr[-1])

    def one(t: int) -> tuple[np.ndarray, float] | None:
        tree = sample_window_raw(cfg, rng.shifted(t))
        indptr, indices, mu, cnt, max_linf, boundary = tree.ball_csr(rmax)
        if boundary or max_linf > R - 1:
            return None
        p2k, drift = K.hk_iterate(indptr, indices, mu, cnt, n_arr)
        return np.asarray(p2k, dtype=np.float64), float(drift)

    if checkpoint is not None:
        sig = (f"hk-scaling v1 R={R} K={K_factor} "
               f"ns={','.join(str(n) for n in n_arr.tolist())} "
               f"seed={rng.seed} stream={rng.stream}")
        done = _checkpoint_rows(checkpoint, sig)
        writer = _CheckpointWriter(checkpoint, sig, resume=bool(done))
        rows = []
        try:
            for t in range(samples):
                if t in done and len(done[t]) >= 1:
                    f = done[t]
                    if f[0] == "rejected":
                        rows.append(None)
                        continue
                    if len(f) == 1 + n_arr.size:
                        rows.append((np.asarray([float(v) for v in f[1:]]),
                                     float(f[0])))
                        continue
                row = one(t)
                if row is None:
                    writer.write(t, ["rejected"])
                else:
                    writer.write(t, [repr(row[1])]
                                 + [repr(v) for v in row[0].tolist()])
                rows.append(row)
        finally:
            writer.close()
    elif jobs <= 1 or samples == 1:
        rows = [one(t) for t in range(samples)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, range(samples)))

    kept = [row for row in rows if row is not None]
    rejected = samples - len(kept)
    if len(kept) < 2:
        raise ArithmeticError(
            f"only {len(kept)} of {samples} samples certified exact; "
            "increase window radius R")
    values = np.vstack([row[0] for row in kept])
    max_drift = max(row[1] for row in kept)
    if max_drift > 1e-8:
        raise ArithmeticError(f"mass conservation drift {max_drift:.3e}")

    medians = np.median(values, axis=0)
    means = values.mean(axis=0)
    q25 = np.quantile(values, 0.25, axis=0)
    q75 = np.quantile(values, 0.75, axis=0)
    scale = n_arr.astype(np.float64) ** (3.0 / (3.0 + beta))
    normalized = values * scale
    fit = fit_loglog(n_arr, medians)
    return HeatKernelScalingResult(
        ns=n_arr, values=values, medians=medians, means=means, q25=q25,
        q75=q75, normalized_median=np.median(normalized, axis=0),
        normalized_variance=normalized.var(axis=0, ddof=1), fit=fit,
        beta=float(beta), rejected=rejected, max_drift=max_drift, window_R=R)

"""Uniform spanning tree on Z^3: sampling, intrinsic geometry, walk kernels."""

from __future__ import annotations

__version__ = "0.1.0"

from .geometry import (
    d_euclid,
    d_l1,
    d_linf,
    dump_path,
    load_path,
    neighbors,
    pack_point,
    unpack_point,
)
from .srw import (
    RngConfig,
    StopRule,
    WalkResult,
    cut_times,
    derived_seed,
    exit_ball,
    hit_set,
    nice_cut_points,
    run_walk,
    slab_hit_time,
    step_cap,
)
from .lerw import (
    BETA_POINT_ESTIMATE,
    ExponentFit,
    TailProfile,
    estimate_beta,
    fit_loglog,
    loop_erase,
    loop_erase_by_recursion,
    sample_M_n,
    sample_M_n_batch,
    tail_profile,
)
from .wilson import (
    FiniteGraph,
    FiniteTree,
    UstWindowConfig,
    WindowTree,
    complete_graph,
    cycle_graph,
    grid_graph,
    matrix_tree_count,
    path_graph,
    sample_window_raw,
    sample_window_ust,
    star_graph,
    wilson_finite,
    wilson_finite_many,
)
from .ust import IntrinsicBall, SpanningTree, TreeMeta
from .resistance import (
    effective_resistance,
    effective_resistance_exact,
    pairwise_resistance,
    point_to_set_resistance,
    tree_resistance,
)
from .treewalk import (
    Bk06Result,
    HeatKernelEstimate,
    ball_volume,
    bk06_bound_check,
    heat_kernel_exact,
    heat_kernel_mc,
    heat_kernel_profile,
)
from .probes import (
    BoxSequence,
    EventFlags,
    HeatKernelScalingResult,
    TubeGeometry,
    VolumeScalingResult,
    heat_kernel_scaling_experiment,
    spiral_box_sequence,
    tube_a1_probability,
    tube_event_check,
    volume_scaling_experiment,
)

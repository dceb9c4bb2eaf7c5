"""Trace-driven simulation of paging with one-bit predictions."""

from .kernels import BACKEND
from .model import BoundParams, CacheSnapshot, RunReport, Setup, Trace, TraceError, harmonic, validate_trace
from .oracle import (
    GroundTruth,
    LfdSchedule,
    PhasePartition,
    brute_force_opt,
    ground_truth,
    ground_truth_discard,
    ground_truth_phase,
    k_phase_partition,
    lfd_run,
    new_page_counts,
    opt_cost,
)
from .policies import POLICY_NAMES, make_policy, run_policy
from .predictions import ErrorReport, NoiseSpec, apply_noise, count_errors

__version__ = "0.1.0"

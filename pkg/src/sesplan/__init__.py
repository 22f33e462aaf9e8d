"""Optimal passing-order replanning for delayed multi-agent path execution."""

from ._kernels import BACKEND
from .errors import (
    CyclicGraphError,
    DeadlockError,
    InvalidStateError,
    NoSolutionError,
    NotSwitchableError,
    SearchTimeout,
    SesError,
    TooManySwitchableError,
    UnsolvableError,
)
from .mapf import AgentTask, GridMap, MapfSolution, generate_instance, plan_prioritized, solution_cost, validate_solution
from .search import Eses, Gses, brute_force_optimal, cycle_detection, naive_fix_all, ses_search, solve
from .sim import DelayModel, replan_root, run_experiment, run_trial
from .stpg import DelayEvent, Stpg, construct_stpg, fix_edge, reduce, reverse_edge
from .tpg import ExecutionState, Layout, Tpg, build_tpg, exec_tpg, has_cycle, longest_paths, step_exec

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AgentTask",
    "CyclicGraphError",
    "DeadlockError",
    "DelayEvent",
    "DelayModel",
    "Eses",
    "ExecutionState",
    "Gses",
    "GridMap",
    "InvalidStateError",
    "Layout",
    "MapfSolution",
    "NoSolutionError",
    "NotSwitchableError",
    "SearchTimeout",
    "SesError",
    "Stpg",
    "TooManySwitchableError",
    "Tpg",
    "UnsolvableError",
    "brute_force_optimal",
    "build_tpg",
    "construct_stpg",
    "cycle_detection",
    "exec_tpg",
    "fix_edge",
    "generate_instance",
    "has_cycle",
    "longest_paths",
    "naive_fix_all",
    "plan_prioritized",
    "reduce",
    "replan_root",
    "reverse_edge",
    "run_experiment",
    "run_trial",
    "solution_cost",
    "ses_search",
    "solve",
    "step_exec",
    "validate_solution",
]

"""Exact scheduling of unrelated parallel machines with sequence-dependent
setups and a limited setup resource, by Branch-and-Check with local-branching
cuts."""

__version__ = "0.1.0"

from .encoding import Assignment, SlotSolution, assignment_to_slots, slots_to_assignment
from .instance import GenParams, Instance, generate_instance, read_instance, write_instance
from .lbbd import RunConfig, RunResult, compute_gap, solve_algorithm1, solve_algorithm2
from .oracle import brute_force_optimum
from .subproblem import solve_subproblem, verify_timed_schedule

__all__ = [
    "Assignment", "SlotSolution", "assignment_to_slots", "slots_to_assignment",
    "GenParams", "Instance", "generate_instance", "read_instance", "write_instance",
    "RunConfig", "RunResult", "compute_gap", "solve_algorithm1", "solve_algorithm2",
    "brute_force_optimum", "solve_subproblem", "verify_timed_schedule",
]

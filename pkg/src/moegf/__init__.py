"""Sequential LP solvers for multiperiod optimal electricity and gas flow."""
from .diagnostics import (Feasibility, SolveReport, compute_gaps, evaluate_feasibility,
                          linepack_trajectory, make_report)
from .envelopes import (Envelope, EnvelopeError, envelope_avg_pressure, envelope_signed_square,
                        envelope_square, pwl_cost_epigraph)
from .formulation import ProblemModel, ResidualDomainError, build_moegf, cold_start
from .instance import Instance, InstanceError, bundled_instances, load_instance, parse_instance
from .relaxation import (RelaxationInfeasible, micp_lower_bound, solve_polyhedral_relaxation)
from .slp import (CONVERGED, NON_CONVERGENCE, SlpError, SolverParams, flip_targets,
                  run_algorithm1, run_algorithm2, run_phase1, steering_gate, warm_start)

__version__ = "0.1.0"

__all__ = [
    "Feasibility", "SolveReport", "compute_gaps", "evaluate_feasibility", "linepack_trajectory",
    "make_report", "Envelope", "EnvelopeError", "envelope_avg_pressure", "envelope_signed_square",
    "envelope_square", "pwl_cost_epigraph", "ProblemModel", "ResidualDomainError", "build_moegf",
    "cold_start", "Instance", "InstanceError", "bundled_instances", "load_instance",
    "parse_instance", "RelaxationInfeasible", "micp_lower_bound", "solve_polyhedral_relaxation",
    "CONVERGED", "NON_CONVERGENCE", "SlpError", "SolverParams", "flip_targets", "run_algorithm1",
    "run_algorithm2", "run_phase1", "steering_gate", "warm_start",
]

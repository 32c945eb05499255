"""Derivative-free global optimization on adaptively refined grids.

The optimizer anneals a Boltzmann distribution over a uniformly discretized
box, updating one coordinate at a time through a windowed slice-sampling
kernel; a stagnation-driven controller refines the mesh as the search
converges.  Benchmarks, a Metropolis baseline, reporting helpers, and a CLI
round out the toolkit.
"""

from .anneal import (AnnealConfig, AnnealState, RefineState, RunTrace,
                     acceptance_probability, adapt_refine, gibbs_sweep,
                     run_baseline_mh, run_swiftnav, temperature_at)
from .grid import DomainSpec, Window, in_bounds, neighbor_window, sample_initial
from .objectives import (Ackley, ChebyshevCenter, Levy, Objective,
                         PenalizedObjective, PenaltySpec, ProcessSynthesisMinlp,
                         QuarticProgram, SdpPenalty, ackley, cheb_member,
                         get_objective, levy, penalize)
from .report import aggregate, log_regret, write_aggregate_csv, write_trace_csv
from .sdpa import (SdpProblem, SdpaParseError, assemble, jacobi_eigensystem,
                   min_eigenvalue, parse_sdpa_sparse, serialize_sdpa_sparse)
from .walker import (NumericError, WeightTable, sample_window,
                     stationary_weight, transition_prob, window_distribution)

__version__ = "0.1.0"

__all__ = [
    "AnnealConfig", "AnnealState", "RefineState", "RunTrace",
    "acceptance_probability", "adapt_refine", "gibbs_sweep",
    "run_baseline_mh", "run_swiftnav", "temperature_at",
    "DomainSpec", "Window", "in_bounds", "neighbor_window", "sample_initial",
    "Ackley", "ChebyshevCenter", "Levy", "Objective", "PenalizedObjective",
    "PenaltySpec", "ProcessSynthesisMinlp", "QuarticProgram", "SdpPenalty",
    "ackley", "cheb_member", "get_objective", "levy", "penalize",
    "aggregate", "log_regret", "write_aggregate_csv", "write_trace_csv",
    "SdpProblem", "SdpaParseError", "assemble", "jacobi_eigensystem",
    "min_eigenvalue", "parse_sdpa_sparse", "serialize_sdpa_sparse",
    "NumericError", "WeightTable", "sample_window", "stationary_weight",
    "transition_prob", "window_distribution",
    "__version__",
]

"""Capacity of input-constrained finite-state channels by stochastic
approximation, with a blocked Monte Carlo gradient simulator and exact
small-instance oracles."""

from .constraints import ForbiddenPairSet, named_constraint, rll_forbidden_pairs
from .markov import (MarkovParams, TransitionMatrix, build_transition,
                     feasible, markov_entropy_gradient, markov_entropy_rate,
                     stationary_distribution)
from .channel import (ChannelSpec, SamplePath, bec_family, bsc_family,
                      lift_memoryless, sample_path, stream_rng)
from .hmm import HmmView, ForwardState, forward_step, sample_entropy, windowed_conditional
from .simulator import (BlockSchedule, GradientEstimate, compute_S, compute_W,
                        estimate_gradient, make_schedule, variance_diagnostics)
from .optimizer import (Problem, RateFit, SAConfig, SATrace, exact_gradient_problem,
                        fit_rates, mc_problem, run, sa_step, validate_config)
from .oracle import (ExactResult, asymptotic_coefficient_experiment, birch_bounds,
                     birch_profile, exact_In, fd_gradient, parry_optimum,
                     perturbation_experiment)

__version__ = "0.1.0"

"""Bayesian inference for DSA models: priors, sampler, summaries, studies."""

from .diagnostics import PosteriorSummary, ParamSummary, effective_sample_size, summarize
from .fitting import FitResult, FitSpec, fit, find_mode, log_likelihood, log_posterior, make_target
from .priors import Gamma, PriorSpec, Uniform, log_prior
from .sampler import Chain, SamplerConfig, run_chain
from .study import CoverageReport, ReplicateResult, Scenario, replicate_study, simulate_scenario

__all__ = [
    "Chain",
    "CoverageReport",
    "FitResult",
    "FitSpec",
    "Gamma",
    "ParamSummary",
    "PosteriorSummary",
    "PriorSpec",
    "ReplicateResult",
    "SamplerConfig",
    "Scenario",
    "Uniform",
    "effective_sample_size",
    "find_mode",
    "fit",
    "log_likelihood",
    "log_posterior",
    "log_prior",
    "make_target",
    "replicate_study",
    "run_chain",
    "simulate_scenario",
    "summarize",
]

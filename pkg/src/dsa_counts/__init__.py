"""Dynamical survival analysis for stochastic epidemic models fitted to counts."""

from .dynamics import GridSpec, ModelParams, Trajectory, Variant, eval_survival, invert_survival, solve
from .errors import DSAError
from .likelihood import (
    density_infection,
    density_recovery,
    estimate_population,
    loglik_complete,
    loglik_counts,
    loglik_infection_times,
    solve_tau,
)
from .simulate import (
    CountData,
    EventRecord,
    aggregate_counts,
    sample_infection_time,
    sellke_simulate,
    sellke_simulate_frailty,
    simulate_dsa_counts,
)

__version__ = "0.1.0"

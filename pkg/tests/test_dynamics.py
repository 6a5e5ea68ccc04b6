import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dsa_counts.dynamics import (
    GridSpec,
    ModelParams,
    Variant,
    eval_survival,
    infection_flux,
    invert_survival,
    solve,
    survival_at,
)
from dsa_counts.errors import DomainError, IntegrationError


def test_initial_conditions(std_params):
    traj = solve(std_params, GridSpec(10.0))
    assert (traj.s[0], traj.iota[0], traj.r[0]) == (1.0, 0.05, 0.0)


@pytest.mark.parametrize("variant,nu", [("standard", 0.0), ("frailty", 0.7), ("network", 0.0)])
def test_conservation(variant, nu):
    p = ModelParams(1.5, 1.0, 0.05, nu=nu, variant=variant)
    traj = solve(p, GridSpec.default(15.0))
    assert np.max(np.abs(traj.s + traj.iota + traj.r - 1.05)) < 1e-8


def test_frailty_zero_matches_standard():
    g = GridSpec(10.0)
    a = solve(ModelParams(2.0, 1.0, 0.05), g)
    b = solve(ModelParams(2.0, 1.0, 0.05, nu=0.0, variant=Variant.GAMMA_FRAILTY), g)
    assert np.max(np.abs(a.s - b.s)) <= 1e-10
    assert np.max(np.abs(a.iota - b.iota)) <= 1e-10


def test_richardson_convergence():
    p = ModelParams(2.0, 0.5, 0.05)
    s = [solve(p, GridSpec(10.0, n)).s_end for n in (200, 400, 800)]
    ratio = (s[0] - s[1]) / (s[1] - s[2])
    assert 12 < ratio < 20  # fourth order: ratio near 16
    assert abs(solve(p, GridSpec.default(10.0)).s_end - solve(p, GridSpec(10.0, 4000)).s_end) < 1e-7


def test_network_equation_matches_drift():
    p = ModelParams(1.5, 1.0, 0.05, variant="network")
    traj = solve(p, GridSpec(15.0, 3000))
    S = traj.s
    drift = -1.5 * S * (1.05 - S + (1.0 / 1.5) * np.log(S))
    numeric = np.gradient(S, traj.times)
    assert np.max(np.abs(numeric[1:-1] - drift[1:-1])) < 1e-4


def test_eval_survival_endpoints_and_grid(std_params):
    traj = solve(std_params, GridSpec(10.0))
    assert eval_survival(traj, 0.0) == 1.0
    k = 137
    assert eval_survival(traj, traj.times[k]) == traj.s[k]
    with pytest.raises(DomainError):
        eval_survival(traj, 10.5)
    with pytest.raises(DomainError):
        eval_survival(traj, -0.1)


def test_midpoint_interpolation_against_fine_grid(std_params):
    coarse = solve(std_params, GridSpec(10.0, 200))
    fine = solve(std_params, GridSpec(10.0, 2000))
    mids = 0.5 * (coarse.times[:-1] + coarse.times[1:])
    vals = eval_survival(coarse, mids)
    assert np.all(vals <= coarse.s[:-1]) and np.all(vals >= coarse.s[1:])
    assert np.max(np.abs(vals - eval_survival(fine, mids))) < 1e-6


def test_invert_endpoints(std_params):
    traj = solve(std_params, GridSpec(10.0))
    assert invert_survival(traj, 1.0) == 0.0
    assert invert_survival(traj, traj.s_end) == pytest.approx(10.0, abs=1e-9)
    with pytest.raises(DomainError):
        invert_survival(traj, traj.s_end / 2)


_TRAJ = solve(ModelParams(2.0, 1.0, 0.05), GridSpec(10.0))


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 10.0))
def test_invert_round_trip(t):
    s = eval_survival(_TRAJ, t)
    assert invert_survival(_TRAJ, s) == pytest.approx(t, abs=1e-6)


def test_knots_are_grid_points():
    knots = np.array([0.0, 0.7, 1.3, 5.0, 10.0])
    p = ModelParams(2.0, 1.0, 0.05)
    traj = solve(p, GridSpec(10.0), knots=knots)
    assert set(knots).issubset(set(traj.times))
    np.testing.assert_allclose(survival_at(p, knots), eval_survival(traj, knots), atol=1e-14)


def test_flux_is_nonnegative(std_params):
    traj = solve(std_params, GridSpec(10.0))
    assert np.all(infection_flux(traj, traj.times) >= 0)


@pytest.mark.parametrize("kwargs", [dict(beta=-1, gamma=1, rho=0.1), dict(beta=1, gamma=0, rho=0.1),
                                    dict(beta=1, gamma=1, rho=1.0), dict(beta=1, gamma=1, rho=0.1, nu=0.3)])
def test_invalid_params(kwargs):
    with pytest.raises(DomainError):
        ModelParams(**kwargs)


def test_blow_up_reports_time():
    p = ModelParams(1e6, 1.0, 0.5, nu=30.0, variant="frailty")
    try:
        traj = solve(p, GridSpec(10.0, 100))
    except IntegrationError as exc:
        assert exc.time is not None and 0 <= exc.time <= 10.0
    else:
        assert np.all(np.isfinite(traj.s))


def test_beta_zero_keeps_everyone_susceptible():
    traj = solve(ModelParams(0.0, 1.0, 0.05), GridSpec(10.0))
    assert np.all(traj.s == 1.0)
    assert traj.iota[-1] == pytest.approx(0.05 * math.exp(-10.0), rel=1e-9)

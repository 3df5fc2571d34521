import math

import numpy as np
import pytest

from mfgjump.errors import DegenerateCouplingError, DomainError
from mfgjump.expectation import corollary_closed_form
from mfgjump.investor import (
    InvestorScenario, OpinionRegime, consensus_point, growth_rate, hara_risk_coefficient, opinion_dynamics,
    optimal_fraction, solvability, to_mfg_problem,
)
from mfgjump.jump_models import Degenerate


def _scenario(**overrides):
    params = dict(r=0.02, sigma=0.2, q=0.0, beta=0.2, gamma=10.0, mu_bar=0.05, horizon=1.0)
    params.update(overrides)
    return InvestorScenario(**params)


def test_merton_quantities():
    assert hara_risk_coefficient(0.0, 0.2) == pytest.approx(12.5)
    assert hara_risk_coefficient(0.5, 0.2) == 0.0
    assert optimal_fraction(0.1, 0.02, 0.2, 0.0) == pytest.approx(2.0)
    assert growth_rate(0.1, 0.02, 0.2, 0.0) == pytest.approx(0.1)


def test_mapping_to_mfg_problem():
    s = _scenario()
    sched, term = to_mfg_problem(s)
    assert s.R == pytest.approx(12.5)
    assert sched.a.value == pytest.approx(-7.5)
    assert sched.b.value == pytest.approx(0.9)
    assert sched.c.value == pytest.approx(-0.02)
    assert (term.A_T, term.B_T, term.C_T) == pytest.approx((12.5, -0.5, 0.025))


def test_consensus_point_is_the_equilibrium():
    s = _scenario()
    sched, _ = to_mfg_problem(s)
    assert consensus_point(s) == pytest.approx(0.06)
    assert consensus_point(s) == pytest.approx(-sched.b.value / (2 * sched.a.value), abs=1e-12)


def test_consensus_point_degenerate():
    with pytest.raises(DegenerateCouplingError):
        consensus_point(_scenario(beta=0.0, gamma=0.0))


@pytest.mark.parametrize("overrides", [
    {"q": 1.0}, {"sigma": 0.0}, {"beta": -1.0}, {"horizon": 0.0}, {"anchor": "median"},
])
def test_invalid_scenarios(overrides):
    with pytest.raises(DomainError):
        _scenario(**overrides)


def test_reference_anchor_reaches_consensus():
    """β = 0 pulls every opinion to μ̄; halfway through a long horizon the mean is within 1%."""
    s = _scenario(beta=0.0, gamma=1.0, horizon=10.0, mu0=0.0, m0_std=0.01)
    dynamics = opinion_dynamics(s)

    assert dynamics.regime == OpinionRegime.CONSENSUS
    assert dynamics.target == pytest.approx(0.05)
    # 1. R = 12.5 > √(1/2): A blows up, so the path comes from the closed form
    assert dynamics.route == "closed_form"
    assert dynamics.path.E[0] == 0.0
    assert abs(dynamics.path.at(5.0) - 0.05) < 0.01 * 0.05


def test_solvability_when_terminal_curvature_is_large():
    s = _scenario(beta=0.0, gamma=1.0, horizon=10.0)
    report = solvability(s)
    expected = math.atanh(math.sqrt(0.5) / 12.5) / math.sqrt(2.0)
    assert not report.full_horizon
    assert report.max_T == pytest.approx(expected)
    assert not report.exists_for_T
    assert not report.numeric_exists_for_T
    assert report.consistent
    assert report.blowup_time == pytest.approx(10.0 - expected, abs=1e-4)


def test_solvability_full_horizon():
    s = _scenario(q=0.5, beta=0.0, gamma=1.0, horizon=5.0)
    report = solvability(s)
    assert report.full_horizon
    assert report.max_T is None
    assert report.exists_for_T and report.numeric_exists_for_T
    assert report.consistent


def test_neutral_investors_drift_linearly():
    """R = 0 and γ = 0: no control, the mean moves only with the jumps, E = μ₀ + λM·t."""
    s = _scenario(q=0.5, beta=1.0, gamma=0.0, mu0=0.03, lam=1.0, jump=Degenerate(0.01), horizon=2.0)
    dynamics = opinion_dynamics(s)
    assert s.a == 0.0
    assert dynamics.regime == OpinionRegime.DISAGREEMENT
    assert dynamics.target is None
    assert dynamics.route == "quadrature"
    np.testing.assert_allclose(dynamics.path.E, 0.03 + 0.01 * dynamics.path.times, rtol=0, atol=1e-12)


def test_disagreement_when_a_is_positive():
    s = _scenario(q=-1.0, sigma=0.5, beta=1.0, gamma=0.1, mu_bar=0.04, horizon=0.5)
    assert s.a > 0
    dynamics = opinion_dynamics(s)
    assert dynamics.regime == OpinionRegime.DISAGREEMENT
    assert dynamics.target == pytest.approx(consensus_point(s))


def test_mean_anchor_is_self_consistent():
    """Anchoring on the population mean: the quadrature path solves the coupled two-point problem."""
    s = _scenario(q=0.6, beta=1.0, gamma=1.0, mu0=0.1, anchor="mean", steps=2048)
    assert s.R == pytest.approx(-15.625)
    dynamics = opinion_dynamics(s)

    assert dynamics.route == "coupled"
    assert dynamics.regime == OpinionRegime.CONSENSUS
    assert dynamics.target == pytest.approx(s.r)
    expected = corollary_closed_form(s.a, -2 * s.beta * s.R * s.r, 2 * s.gamma, 0.0, s.mu0,
                                     dynamics.path.terminal, s.horizon, steps=2048)
    np.testing.assert_allclose(dynamics.path.E, expected.E, rtol=0, atol=1e-6)


def test_mean_anchor_survives_riccati_blowup():
    """R above √(-a/2): A blows up, the coupled path still meets E'(T) = 2R·E(T) - 2Rr."""
    s = _scenario(beta=0.0, gamma=1.0, mu0=0.1, anchor="mean")
    assert s.a == pytest.approx(-1.0)
    assert s.R > math.sqrt(-s.a / 2)

    dynamics = opinion_dynamics(s)

    assert dynamics.route == "coupled_closed_form"
    assert dynamics.regime == OpinionRegime.DISAGREEMENT
    assert np.all(np.isfinite(dynamics.path.E))
    assert dynamics.path.E[0] == pytest.approx(0.1)
    # b₀ = 0 and 2a + b₁ = 0 leave E'' = 0: a straight line to E(T) = 0.4 / 24
    assert dynamics.path.terminal == pytest.approx(0.4 / 24, abs=1e-12)
    np.testing.assert_allclose(dynamics.path.E, 0.1 + (0.4 / 24 - 0.1) * dynamics.path.times, rtol=0, atol=1e-12)

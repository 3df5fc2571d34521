import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from mfgjump.errors import ResonanceError, UnsupportedHypothesisError
from mfgjump.expectation import (
    Method, RegimeKind, classify_regime, closed_form_path, corollary_closed_form, coupled_expectation,
    expectation_ivp, expectation_quadrature, jump_sensitivity, terminal_expectation_const,
)
from mfgjump.jump_models import Degenerate, OneSidedExponential, SymmetrizedOneSided
from mfgjump.riccati import CoefficientSchedule, Sampled, TerminalData, solve_numeric

JUMP = OneSidedExponential(2.0)
LAM = 2.0
X0 = 1.0


def _solve(a, b, term, T=2.0, delta=0.5, steps=4096):
    sched = CoefficientSchedule.constant(T, a, b, 0.0)
    return solve_numeric(sched, term, delta, LAM, JUMP, steps)


@pytest.mark.parametrize("a,b,A_T,B_T", [
    (-1.0, 0.5, 0.2, -0.1),
    (0.5, 0.3, -0.5, 0.2),
    (0.0, 0.4, -0.3, 0.1),
])
def test_three_routes_agree(a, b, A_T, B_T):
    """Quadrature, second-order ODE and closed form give the same mean path."""
    term = TerminalData(A_T, B_T, 0.0)
    sol = _solve(a, b, term)
    M = JUMP.mean()

    quad = expectation_quadrature(sol, LAM, M, X0)
    ivp = expectation_ivp(a, b, sol, LAM, M, X0)
    closed = closed_form_path(a, b, A_T, B_T, LAM, M, X0, 2.0, steps=sol.steps)

    assert quad.method == Method.QUADRATURE
    assert quad.E[0] == ivp.E[0] == closed.E[0] == X0
    np.testing.assert_allclose(ivp.E, quad.E, rtol=0, atol=1e-6)
    np.testing.assert_allclose(closed.E, quad.E, rtol=0, atol=1e-6)


def test_quadrature_derivative_follows_ode():
    term = TerminalData(0.2, -0.1, 0.0)
    sol = _solve(-1.0, 0.5, term)
    quad = expectation_quadrature(sol, LAM, JUMP.mean(), X0)
    central = (quad.E[2:] - quad.E[:-2]) / (sol.times[2:] - sol.times[:-2])
    np.testing.assert_allclose(quad.dE[1:-1], central, rtol=0, atol=1e-5)


def test_expectation_does_not_depend_on_diffusion():
    term = TerminalData(0.2, -0.1, 0.0)
    quiet = expectation_quadrature(_solve(-1.0, 0.5, term, delta=0.0), LAM, JUMP.mean(), X0)
    noisy = expectation_quadrature(_solve(-1.0, 0.5, term, delta=0.7), LAM, JUMP.mean(), X0)
    assert np.array_equal(quiet.E, noisy.E)


def test_unpropagated_variant_agrees_at_zero_start():
    sol = _solve(-1.0, 0.5, TerminalData(0.2, -0.1, 0.0))
    propagated = expectation_quadrature(sol, LAM, JUMP.mean(), 0.0)
    plain = expectation_quadrature(sol, LAM, JUMP.mean(), 0.0, propagate_initial=False)
    np.testing.assert_allclose(plain.E, propagated.E, rtol=0, atol=1e-15)


def test_ivp_rejects_varying_a():
    T = 1.0
    a = Sampled(np.array([0.0, T]), np.array([-1.0, -0.5]))
    sched = CoefficientSchedule(T, a, 0.0, 0.0)
    sol = solve_numeric(sched, TerminalData(), 0.0, 0.0, JUMP, 256)
    with pytest.raises(UnsupportedHypothesisError):
        expectation_ivp(a, 0.0, sol, 0.0, 0.0, X0)


@pytest.mark.parametrize("a,A_T,T", [(-1.0, 0.2, 2.0), (0.5, -0.5, 2.0), (0.0, -0.3, 1.5)])
def test_jump_sensitivity_matches_difference(a, A_T, T):
    """E(T) is affine in λM with slope jump_sensitivity."""
    b, B_T = 0.3, 0.1

    def terminal(lm):
        return closed_form_path(a, b, A_T, B_T, lm, 1.0, X0, T, steps=64).terminal

    assert jump_sensitivity(a, A_T, T) == pytest.approx(terminal(1.0) - terminal(0.0), rel=1e-9)


def test_jump_sensitivity_tan_identity():
    """For a > 0 the slope equals (√(a/2)·tan θ(0,T) - A_T)/(a + 2A_T²)."""
    a, A_T, T = 0.5, -0.5, 2.0
    kappa = math.sqrt(a / 2)
    theta0 = math.atan(A_T / kappa) + math.sqrt(2 * a) * T
    expected = (kappa * math.tan(theta0) - A_T) / (a + 2 * A_T ** 2)
    assert jump_sensitivity(a, A_T, T) == pytest.approx(expected, rel=1e-12)


def test_terminal_expectation_matches_path():
    args = (-1.0, 0.5, 0.2, -0.1, LAM, JUMP.mean())
    value = terminal_expectation_const(*args, 2.0, X0)
    assert value == pytest.approx(closed_form_path(*args, X0, 2.0).terminal, abs=1e-12)


def test_two_point_path_matches_quadrature():
    term = TerminalData(0.2, -0.1, 0.0)
    sol = _solve(-1.0, 0.5, term)
    quad = expectation_quadrature(sol, LAM, JUMP.mean(), X0)
    corollary = corollary_closed_form(-1.0, 0.5, 0.0, 0.0, X0, quad.terminal, 2.0, steps=sol.steps)
    np.testing.assert_allclose(corollary.E, quad.E, rtol=0, atol=1e-6)


def test_two_point_resonance():
    """sin(√(2a)·T) = 0 leaves the two-point problem without a unique solution."""
    with pytest.raises(ResonanceError):
        corollary_closed_form(0.5, 0.0, 0.0, 0.0, X0, 2.0, math.pi)


def test_closed_form_singular_horizon():
    with pytest.raises(ResonanceError, match="singular horizon"):
        closed_form_path(2.0, 0.0, 0.0, 0.0, 0.0, 0.0, X0, math.pi / 4)


def test_closed_form_is_finite_through_poles():
    """With a pole of A inside (0, T) the mean path still solves E'' + 2aE = -b."""
    a, b, T = 2.0, 0.0, 1.0
    path = closed_form_path(a, b, 0.0, 0.0, 1.0, 1.0, X0, T)
    assert np.all(np.isfinite(path.E))
    assert path.E[0] == X0
    dt = path.times[1] - path.times[0]
    second = (path.E[2:] - 2 * path.E[1:-1] + path.E[:-2]) / dt ** 2
    np.testing.assert_allclose(second + 2 * a * path.E[1:-1] + b, 0.0, atol=1e-4)


@pytest.mark.parametrize("a,b,kind", [
    (0.5, 0.2, RegimeKind.OSCILLATORY),
    (-1.0, 0.5, RegimeKind.RELAXING),
    (0.0, 0.5, RegimeKind.POLYNOMIAL),
])
def test_classify_regime(a, b, kind):
    regime = classify_regime(a, b)
    assert regime.kind == kind
    if a != 0:
        assert regime.equilibrium == pytest.approx(-b / (2 * a))
    if a > 0:
        assert regime.frequency == pytest.approx(1.0)


def test_deterministic_limit_matches_direct_integration():
    """δ = λ = 0: E is the trajectory of x' = 2A(t)x + B(t) from x₀."""
    T = 2.0
    sol = solve_numeric(CoefficientSchedule.constant(T, -1.0, 0.5, 0.0), TerminalData(0.2, -0.1, 0.0),
                        0.0, 0.0, Degenerate(), 4096)
    A, B = CubicSpline(sol.times, sol.A), CubicSpline(sol.times, sol.B)
    direct = solve_ivp(lambda t, x: 2.0 * A(t) * x + B(t), (0.0, T), [X0], method="DOP853",
                       t_eval=sol.times, rtol=1e-12, atol=1e-12).y[0]

    quad = expectation_quadrature(sol, 0.0, 0.0, X0)
    np.testing.assert_allclose(quad.E, direct, rtol=0, atol=1e-8)

    # 1. Adding x₀ without the e^{2R(t,0)} factor misses the trajectory
    plain = expectation_quadrature(sol, 0.0, 0.0, X0, propagate_initial=False)
    assert np.max(np.abs(plain.E - direct)) > 1e-2


def test_zero_mean_jumps_leave_mean_unchanged():
    jump = SymmetrizedOneSided(OneSidedExponential(2.0))
    sched = CoefficientSchedule.constant(2.0, -1.0, 0.5, 0.0)
    paths = [
        expectation_quadrature(solve_numeric(sched, TerminalData(0.2, -0.1, 0.0), 0.5, lam, jump, 1024),
                               lam, jump.mean(), X0)
        for lam in (0.0, 1.0, 5.0)
    ]
    assert all(np.array_equal(paths[0].E, p.E) for p in paths[1:])


def test_mean_grows_linearly_in_jump_drift():
    """A ≡ B ≡ 0: E(t) = x₀ + λM·t."""
    T = 1.0
    sched = CoefficientSchedule.constant(T, 0.0, 0.0, 0.0)
    terminal_values = []
    for lam in (0.0, 1.0, 5.0):
        sol = solve_numeric(sched, TerminalData(), 0.3, lam, JUMP, 1024)
        path = expectation_quadrature(sol, lam, JUMP.mean(), X0)
        assert (path.terminal - X0) / T == pytest.approx(lam * JUMP.mean(), abs=1e-10)
        terminal_values.append(path.terminal)
    assert terminal_values[0] < terminal_values[1] < terminal_values[2]


def test_oscillation_period():
    """a = 2, b = 4: E + 1 crosses zero every π/2."""
    T, steps = 5.0, 8192
    path = closed_form_path(2.0, 4.0, 0.0, 0.0, 0.0, 0.0, X0, T, steps=steps)
    shifted = path.E + 1.0
    idx = np.nonzero(np.sign(shifted[:-1]) * np.sign(shifted[1:]) < 0)[0]
    # linear interpolation inside the bracketing step
    t0, t1 = path.times[idx], path.times[idx + 1]
    crossings = t0 - shifted[idx] * (t1 - t0) / (shifted[idx + 1] - shifted[idx])
    assert len(crossings) >= 3
    np.testing.assert_allclose(np.diff(crossings), math.pi / 2, atol=2 * T / steps)


def test_relaxation_midpoint():
    """a = -2, T = 20: halfway through, E sits at -b/(2a)."""
    a, b, T = -2.0, 1.0, 20.0
    path = closed_form_path(a, b, 0.0, 0.0, 0.0, 0.0, X0, T)
    target = -b / (2 * a)
    assert abs(path.at(T / 2) - target) <= 0.01 * abs(target)


def test_coupled_route_through_riccati_blowup():
    """With no mean coupling the pole-surviving coupled route is the constant-b closed form."""
    a, b, T = -1.0, 0.5, 1.0
    term = TerminalData(1.5, -0.1, 0.0)
    sol = solve_numeric(CoefficientSchedule.constant(T, a, b, 0.0), term, 0.5, LAM, JUMP, 1024)
    assert not sol.is_complete

    path = coupled_expectation(a, b, 0.0, 0.0, term, 0.5, LAM, JUMP, X0, T, steps=1024)
    expected = closed_form_path(a, b, term.A_T, term.B_T, LAM, JUMP.mean(), X0, T, steps=1024)

    assert path.method == Method.CLOSED_FORM
    np.testing.assert_allclose(path.E, expected.E, rtol=0, atol=1e-8)
    assert path.dE[-1] == pytest.approx(2 * term.A_T * path.terminal + term.B_T + LAM * JUMP.mean(), abs=1e-10)

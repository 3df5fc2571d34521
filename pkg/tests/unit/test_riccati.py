import math

import numpy as np
import pytest

from mfgjump.errors import DomainError
from mfgjump.jump_models import Degenerate, OneSidedExponential
from mfgjump.riccati import (
    CoefficientSchedule, Constant, RiccatiBranch, Sampled, Status, TerminalData, blowup_distance,
    hjb_residual, max_horizon, optimal_control, residuals, solve_closed_form_const, solve_numeric,
    value_function,
)

JUMP = OneSidedExponential(2.0)


def test_blowup_time_for_positive_a():
    """a = 2, A(T) = 0: A = tan(2(T - t)) blows up at t = T - π/4."""
    sched = CoefficientSchedule.constant(1.0, a=2.0)
    sol = solve_numeric(sched, TerminalData(), 0.0, 0.0, Degenerate())

    assert sol.status == Status.BLOW_UP
    assert sol.blowup_time == pytest.approx(1.0 - math.pi / 4, abs=1e-6)
    # 1. Nodes before the blow-up are blank, nodes after it are finite
    before = sol.times < sol.blowup_time
    assert np.all(np.isnan(sol.A[before]))
    assert np.all(np.isfinite(sol.A[sol.times > sol.blowup_time + 1e-3]))
    assert sol.A[-1] == 0.0

    assert blowup_distance(2.0, 0.0) == pytest.approx(math.pi / 4)
    assert max_horizon(2.0, 0.0) == pytest.approx(math.pi / 4)


def test_closed_form_reports_same_blowup():
    sol = solve_closed_form_const(2.0, 0.0, TerminalData(), 0.0, 0.0, 0.0, 0.0, 1.0)
    assert sol.status == Status.BLOW_UP
    assert sol.blowup_time == pytest.approx(1.0 - math.pi / 4, abs=1e-12)
    assert not sol.is_complete
    with pytest.raises(DomainError, match="blows up"):
        sol.require_complete("test")


@pytest.mark.parametrize("a,A_T,distance", [
    (0.5, 0.0, math.pi / 2),
    (0.5, 1.0, math.pi / 2 - math.atan(2.0)),
    (2.0, 0.0, math.pi / 4),
    (2.0, 1.0, math.pi / 8),
])
def test_blowup_time_within_two_steps(a, A_T, distance):
    T, steps = 2.0, 4096
    sol = solve_numeric(CoefficientSchedule.constant(T, a=a), TerminalData(A_T, 0.0, 0.0), 0.0, 0.0,
                        Degenerate(), steps)
    assert blowup_distance(a, A_T) == pytest.approx(distance, rel=1e-12)
    assert sol.status == Status.BLOW_UP
    assert abs(sol.blowup_time - (T - distance)) <= 2 * T / steps


@pytest.mark.parametrize("a,A_T,kind", [
    (-1.0, 0.2, "tanh"),
    (-1.0, -1.5, "coth"),
    (-1.0, math.sqrt(0.5), "fixed"),
    (0.5, -0.5, "tan"),
    (0.0, -0.3, "rational"),
])
def test_closed_form_matches_numeric(a, A_T, kind):
    """Every branch of the closed form agrees with RK4 to 1e-6."""
    b, c, delta, lam, T = 0.5, 0.1, 0.5, 2.0, 2.0
    term = TerminalData(A_T, -0.1, 0.0)
    assert RiccatiBranch(a, A_T, T).kind == kind

    numeric = solve_numeric(CoefficientSchedule.constant(T, a, b, c), term, delta, lam, JUMP)
    closed = solve_closed_form_const(a, b, term, lam, JUMP.mean(), delta, c, T, m2=JUMP.second_moment())

    assert numeric.is_complete and closed.is_complete
    np.testing.assert_allclose(closed.A, numeric.A, rtol=0, atol=1e-6)
    np.testing.assert_allclose(closed.B, numeric.B, rtol=0, atol=1e-6)
    np.testing.assert_allclose(closed.C, numeric.C, rtol=0, atol=1e-6)
    np.testing.assert_allclose(closed.I, numeric.I, rtol=0, atol=1e-6)


def test_coth_branch_with_positive_terminal_blows_up():
    """A(T) above √(-a/2) makes A blow up after atanh(√(-a/2)/A_T)/√(-2a)."""
    a, A_T = -1.0, 1.5
    expected = math.atanh(math.sqrt(0.5) / A_T) / math.sqrt(2.0)
    assert blowup_distance(a, A_T) == pytest.approx(expected)
    sol = solve_numeric(CoefficientSchedule.constant(1.0, a), TerminalData(A_T), 0.0, 0.0, Degenerate())
    assert sol.blowup_time == pytest.approx(1.0 - expected, abs=1e-6)


def test_blowup_distance_is_infinite_when_stable():
    assert math.isinf(blowup_distance(-1.0, 0.2))
    assert math.isinf(blowup_distance(0.0, -0.3))
    with pytest.raises(DomainError):
        max_horizon(-1.0, 0.0)


def test_residuals_are_small():
    sched = CoefficientSchedule.constant(2.0, -1.0, 0.5, 0.1)
    sol = solve_numeric(sched, TerminalData(0.2, -0.1, 0.0), 0.5, 2.0, JUMP)
    worst = residuals(sol, sched, 0.5, 2.0, JUMP)
    assert set(worst) == {"A", "B", "C"}
    assert max(worst.values()) < 1e-6

    xs = np.linspace(-2.0, 2.0, 5)
    for t in (0.0, 0.7, 2.0):
        assert np.max(np.abs(hjb_residual(sol, sched, 0.5, 2.0, JUMP, t, xs))) < 1e-6


def test_sampled_constant_schedule_is_identical():
    """A sampled coefficient holding a constant value integrates exactly like the constant."""
    T = 1.5
    term = TerminalData(0.1, 0.2, 0.0)
    constant = solve_numeric(CoefficientSchedule.constant(T, -0.5, 0.3, 0.0), term, 0.2, 1.0, JUMP, steps=512)
    flat = Sampled(np.array([0.0, T]), np.array([-0.5, -0.5]))
    sampled = solve_numeric(CoefficientSchedule(T, flat, Constant(0.3), Constant(0.0)), term, 0.2, 1.0, JUMP,
                            steps=512)
    assert np.array_equal(constant.A, sampled.A)
    assert np.array_equal(constant.B, sampled.B)
    assert np.array_equal(constant.C, sampled.C)


def test_sampled_coefficient_must_span_horizon():
    short = Sampled(np.array([0.0, 0.5]), np.array([1.0, 1.0]))
    with pytest.raises(DomainError, match="must span"):
        CoefficientSchedule(1.0, short, Constant(0.0), Constant(0.0))


def test_value_function_and_control():
    sched = CoefficientSchedule.constant(1.0, -1.0, 0.5, 0.0)
    sol = solve_numeric(sched, TerminalData(0.2, -0.1, 0.3), 0.0, 0.0, Degenerate())
    A, B, C = sol.coefficients_at(1.0)
    assert (A, B, C) == pytest.approx((0.2, -0.1, 0.3))
    assert value_function(sol, 1.0, 2.0) == pytest.approx(0.2 * 4 - 0.2 + 0.3)
    assert optimal_control(sol, 1.0, 2.0) == pytest.approx(2 * 0.2 * 2 - 0.1)


def test_coefficients_outside_horizon():
    sol = solve_numeric(CoefficientSchedule.constant(1.0, -1.0), TerminalData(), 0.0, 0.0, Degenerate())
    with pytest.raises(DomainError, match="outside"):
        sol.coefficients_at(1.5)


def test_coefficients_in_blown_up_region():
    sol = solve_numeric(CoefficientSchedule.constant(1.0, a=2.0), TerminalData(), 0.0, 0.0, Degenerate())
    with pytest.raises(DomainError, match="blown-up"):
        sol.coefficients_at(0.0)
    assert np.isfinite(sol.coefficients_at(1.0)[0])


def test_too_few_steps():
    with pytest.raises(DomainError, match="steps"):
        solve_numeric(CoefficientSchedule.constant(1.0, -1.0), TerminalData(), 0.0, 0.0, Degenerate(), steps=4)


def test_tan_branch_matches_formula():
    """a = 1, A(T) = 0: A = √(1/2)·tan(√2(T - t))."""
    T = 0.5
    closed = solve_closed_form_const(1.0, 0.0, TerminalData(), 0.0, 0.0, 0.0, 0.0, T)
    numeric = solve_numeric(CoefficientSchedule.constant(T, 1.0), TerminalData(), 0.0, 0.0, Degenerate())
    expected = math.sqrt(0.5) * np.tan(math.sqrt(2.0) * (T - closed.times))
    np.testing.assert_allclose(closed.A, expected, rtol=0, atol=1e-8)
    np.testing.assert_allclose(numeric.A, expected, rtol=0, atol=1e-8)


def test_closed_form_with_unit_terminal_slope():
    T = 0.5
    term = TerminalData(0.0, 1.0, 0.0)
    closed = solve_closed_form_const(1.0, 0.0, term, 0.0, 0.0, 0.0, 0.0, T)
    numeric = solve_numeric(CoefficientSchedule.constant(T, 1.0), term, 0.0, 0.0, Degenerate())
    for field in ("A", "B", "C"):
        np.testing.assert_allclose(getattr(closed, field), getattr(numeric, field), rtol=0, atol=1e-8)


def test_closed_form_with_jump_drift():
    """a = -1, b = 2, A(T) = 0.3 and λM = 0.2 over T = 3."""
    jump = Degenerate(0.2)
    term = TerminalData(0.3, 0.0, 0.0)
    closed = solve_closed_form_const(-1.0, 2.0, term, 1.0, jump.mean(), 0.0, 0.0, 3.0, m2=jump.second_moment())
    numeric = solve_numeric(CoefficientSchedule.constant(3.0, -1.0, 2.0), term, 0.0, 1.0, jump)

    assert closed.is_complete
    kappa = math.sqrt(0.5)
    A = -kappa * np.tanh(math.sqrt(2.0) * (3.0 - closed.times) - math.atanh(0.3 / kappa))
    np.testing.assert_allclose(closed.A, A, rtol=0, atol=1e-10)
    for field in ("A", "B", "C"):
        np.testing.assert_allclose(getattr(closed, field), getattr(numeric, field), rtol=0, atol=1e-7)


@pytest.mark.parametrize("a", [-2.0, -1.0, 1.0, 2.0])
@pytest.mark.parametrize("b", [0.0, 1.0])
def test_closed_form_grid(a, b):
    """Closed form and RK4 within 1e-6 at 4096 steps; a > 0 runs to 0.8 of the blow-up horizon."""
    rng = np.random.default_rng(17)
    term = TerminalData(*rng.uniform(-0.5, 0.5, 3))
    if term.A_T > math.sqrt(abs(a) / 2):
        term = TerminalData(0.0, term.B_T, term.C_T)
    T = 0.8 * max_horizon(a, term.A_T) if a > 0 else 1.0

    closed = solve_closed_form_const(a, b, term, 0.0, 0.0, 0.0, 0.0, T, steps=4096)
    numeric = solve_numeric(CoefficientSchedule.constant(T, a, b), term, 0.0, 0.0, Degenerate(), steps=4096)

    assert closed.is_complete and numeric.is_complete
    for field in ("A", "B", "C"):
        np.testing.assert_allclose(getattr(closed, field), getattr(numeric, field), rtol=0, atol=1e-6)

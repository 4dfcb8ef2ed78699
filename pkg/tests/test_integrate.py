"""Integrators: order, tolerance behavior, semigroup property, aborts."""

import numpy as np
import pytest

from contactflows.errors import IntegrationAbort
from contactflows.geometry import CanonicalPoint
from contactflows.integrate import (
    IntegratorConfig,
    fit_decay_rate,
    integrate_lift,
    solve_adaptive,
    solve_fixed,
)
from contactflows.models import CircuitParams, rc_spec
from contactflows.potentials import embed_psi


def rc_unit():
    return rc_spec(CircuitParams(R=1.0, C=1.0))


class TestConfig:
    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            IntegratorConfig(method="euler")

    def test_nonpositive_step_rejected(self):
        with pytest.raises(ValueError):
            IntegratorConfig(step=0.0)


class TestRK4:
    def test_rc_endpoint(self):
        spec = rc_unit()
        pt = embed_psi(spec.potential, np.array([1.0]))
        traj = integrate_lift(spec, pt, 1.0,
                              IntegratorConfig(method="rk4", step=1e-3))
        assert abs(traj.final_state[0] - np.exp(-1.0)) < 1e-9

    def test_fourth_order_convergence(self):
        # halving the step cuts the endpoint error by ~2^4  [order check]
        def f(t, y):
            return -y

        errs = []
        for step in (0.1, 0.05):
            _, ys = solve_fixed(f, np.array([1.0]), 1.0, step)
            errs.append(abs(ys[-1][0] - np.exp(-1.0)))
        ratio = errs[0] / errs[1]
        assert 12.0 < ratio < 20.0

    def test_last_step_lands_on_t_end(self):
        def f(t, y):
            return -y

        ts, _ = solve_fixed(f, np.array([1.0]), 0.35, 0.1)
        assert ts[-1] == pytest.approx(0.35, abs=1e-12)


class TestRKF45:
    def test_respects_tolerance(self):
        # endpoint error <= 10x rel_tol on the closed-form RC model
        spec = rc_unit()
        pt = embed_psi(spec.potential, np.array([1.0]))
        for rel in (1e-6, 1e-9):
            traj = integrate_lift(spec, pt, 1.0,
                                  IntegratorConfig(rel_tol=rel, abs_tol=rel * 1e-2))
            assert abs(traj.final_state[0] - np.exp(-1.0)) <= 10 * rel

    def test_times_strictly_increasing(self):
        spec = rc_unit()
        traj = integrate_lift(spec, embed_psi(spec.potential, np.array([1.0])), 1.0)
        assert np.all(np.diff(traj.times) > 0)

    def test_semigroup_property(self):
        # integrate 0.3 then 0.7 equals integrate 1.0  [flow property]
        spec = rc_unit()
        pt = embed_psi(spec.potential, np.array([1.0]))
        mid = integrate_lift(spec, pt, 0.3).final_state
        mid_pt = CanonicalPoint(mid[:1], mid[1:2], mid[2])
        two_leg = integrate_lift(spec, mid_pt, 0.7).final_state
        one_leg = integrate_lift(spec, pt, 1.0).final_state
        assert np.allclose(two_leg, one_leg, atol=1e-8)


class TestAborts:
    def test_nan_rhs_aborts_with_partial_trajectory(self):
        from contactflows.lifts import DriftField, LiftSpec, linear_restoring
        from contactflows.potentials import quadratic_potential

        # finite-time blow-up: dx/dt = x^3 from x = 2 diverges before t=1
        blow = DriftField(n=1, eval=lambda x: x ** 3,
                          jacobian=lambda x: np.array([[3.0 * x[0] ** 2]]))
        spec = LiftSpec(side="psi", potential=quadratic_potential(np.eye(1)),
                        drift=blow, restoring=linear_restoring(1.0))
        pt = embed_psi(spec.potential, np.array([2.0]))
        traj = integrate_lift(spec, pt, 1.0)
        assert traj.truncated
        assert traj.abort_reason is not None
        assert np.all(np.isfinite(traj.states))  # last good state retained


class TestRateFitting:
    def test_fit_on_clean_exponential(self):
        t = np.linspace(0.0, 5.0, 200)
        v = 3.0 * np.exp(-1.7 * t)
        assert fit_decay_rate(t, v) == pytest.approx(-1.7, abs=1e-10)

    def test_uses_second_half(self):
        # pollute the first half; the fit must not see it
        t = np.linspace(0.0, 6.0, 300)
        v = np.exp(-2.0 * t)
        v[: len(t) // 2] += 0.5
        assert fit_decay_rate(t, v) == pytest.approx(-2.0, abs=1e-8)

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            fit_decay_rate(np.array([0.0, 1.0, 2.0, 3.0]), np.zeros(4))


class TestDeterminism:
    def test_bitwise_reproducible(self):
        spec = rc_unit()
        pt = embed_psi(spec.potential, np.array([1.0]))
        a = integrate_lift(spec, pt, 1.0)
        b = integrate_lift(spec, pt, 1.0)
        assert np.array_equal(a.states, b.states)
        assert np.array_equal(a.times, b.times)

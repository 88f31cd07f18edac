import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capguard.control import (AvoidanceController, ControllerParams,
                              IntegralState, ParamError, SingularityError,
                              SwitchRamp, attraction_velocity,
                              detachment_factor, dls_solve,
                              influence_distance, load_params,
                              params_from_dict, proximity_coefficient,
                              repulsion_from_distance, repulsion_from_velocity)
from capguard.geometry import ProximityResult
from capguard.kinematics import eef_position, robot_capsules


def dls_oracle(jac, v, lam):
    """Stacked-system least squares solved by an independent dense routine."""
    m, n = jac.shape
    aug = np.vstack([jac, lam * np.eye(n)])
    rhs = np.concatenate([v, np.zeros(n)])
    return np.linalg.lstsq(aug, rhs, rcond=None)[0]


def damped_objective(jac, v, lam, x):
    return float(np.sum((jac @ x - v) ** 2) + lam * lam * np.sum(x ** 2))


class TestParams:
    def test_defaults_resolve_from_model(self, iiwa):
        p = ControllerParams().with_model_defaults(iiwa)
        assert p.tau == pytest.approx(0.3 / (5 * 1.5))  # v_max / (5 a_max) = 0.04
        assert p.rep_cap == pytest.approx(0.3)

    def test_explicit_tau_kept(self, iiwa):
        p = ControllerParams(tau=0.2).with_model_defaults(iiwa)
        assert p.tau == 0.2

    def test_band_ordering_enforced(self):
        with pytest.raises(ParamError, match="l1"):
            params_from_dict({"l1": 0.8, "l2": 0.3})

    def test_unknown_key_rejected(self):
        with pytest.raises(ParamError, match="unknown"):
            params_from_dict({"k3": 1.0})

    def test_negative_gain_rejected(self):
        with pytest.raises(ParamError):
            params_from_dict({"k1": -0.1})

    def test_lambda_json_key(self):
        p = params_from_dict({"lambda": 0.123})
        assert p.lam == 0.123
        assert p.to_dict()["lambda"] == 0.123

    def test_load_from_file(self, tmp_path):
        f = tmp_path / "p.json"
        f.write_text('{"k1": 0.4, "d_1": 0.2}')
        p = load_params(f)
        assert p.k1 == 0.4 and p.d_1 == 0.2
        f.write_text("{broken")
        with pytest.raises(ParamError):
            load_params(f)


class TestInfluenceDistance:
    def test_receding_keeps_minimum(self, params):
        assert influence_distance(0.3, params) == params.d_1

    def test_approaching_grows_band(self):
        p = ControllerParams(c_v=0.2, d_1=0.3, tau=0.04, rep_cap=0.3)
        assert influence_distance(-1.0, p) == pytest.approx(0.5)

    def test_continuous_at_zero(self, params):
        assert influence_distance(0.0, params) == influence_distance(-0.0, params) == params.d_1


class TestRepulsionFromDistance:
    def test_zero_at_band_edge(self, params):
        d0 = 0.3
        assert repulsion_from_distance(params.d_cr + d0, d0, params) == 0.0

    def test_half_band(self):
        p = ControllerParams(k1=0.2, tau=0.04, rep_cap=10.0)
        d0 = 0.3
        assert repulsion_from_distance(p.d_cr + d0 / 2, d0, p) == pytest.approx(0.2)

    def test_clamped_at_critical(self, params):
        assert repulsion_from_distance(params.d_cr, 0.3, params) == params.rep_cap
        assert repulsion_from_distance(params.d_cr - 0.1, 0.3, params) == params.rep_cap
        just_above = repulsion_from_distance(params.d_cr + 1e-9, 0.3, params)
        assert just_above == params.rep_cap  # raw value astronomically clamped

    def test_monotone_non_increasing_inside_band(self, params):
        d0 = 0.3
        ds = np.linspace(params.d_cr + 1e-4, params.d_cr + d0, 200)
        vals = [repulsion_from_distance(d, d0, params) for d in ds]
        assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


class TestProximityCoefficient:
    def test_inside_inner_band(self, params):
        assert proximity_coefficient(params.l1 / 2, params) == 1.0

    def test_midpoint_is_half(self, params):
        assert proximity_coefficient((params.l1 + params.l2) / 2, params) == pytest.approx(0.5)

    def test_outside_outer_band(self, params):
        assert proximity_coefficient(2 * params.l2, params) == 0.0

    def test_continuous_at_edges(self, params):
        assert proximity_coefficient(params.l1, params) == pytest.approx(1.0)
        assert proximity_coefficient(params.l2, params) == pytest.approx(0.0)


class TestRepulsionFromVelocity:
    def test_receding_gives_zero(self, params):
        assert repulsion_from_velocity(0.2, 1.0, params) == 0.0

    def test_approaching(self):
        p = ControllerParams(k2=0.4, tau=0.04, rep_cap=0.3)
        assert repulsion_from_velocity(-0.5, 1.0, p) == pytest.approx(0.2)

    def test_far_coefficient_kills_damping(self, params):
        assert repulsion_from_velocity(-5.0, 0.0, params) == 0.0


class TestSwitchRamp:
    def test_zero_at_switch(self):
        ramp = SwitchRamp()
        assert ramp.gamma(12.34, switched=True, tau=0.04) == 0.0

    def test_one_time_constant(self):
        ramp = SwitchRamp()
        ramp.gamma(0.0, switched=True, tau=0.5)
        val = ramp.gamma(0.5, switched=False, tau=0.5)
        assert abs(val - (1.0 - math.exp(-1.0))) < 1e-12

    def test_saturates(self):
        ramp = SwitchRamp()
        ramp.gamma(0.0, switched=True, tau=0.1)
        assert ramp.gamma(1.0, switched=False, tau=0.1) > 0.9999

    @given(st.floats(0.01, 10.0), st.floats(0.001, 1.0))
    @settings(max_examples=50, deadline=None)
    def test_non_decreasing_between_switches(self, horizon, tau):
        ramp = SwitchRamp()
        ramp.gamma(0.0, switched=True, tau=tau)
        last = 0.0
        for k in range(1, 50):
            val = ramp.gamma(horizon * k / 50, switched=False, tau=tau)
            assert val >= last
            last = val


class TestDetachment:
    def test_zero_at_critical(self, params):
        assert detachment_factor(params.d_cr, 0.3, params) == 0.0

    def test_one_band_out(self, params):
        val = detachment_factor(params.d_cr + 0.3, 0.3, params)
        assert val == pytest.approx(math.tanh(0.5))  # 2/(1+e^-1) - 1
        assert val == pytest.approx(0.462117, abs=1e-6)

    def test_asymptote(self, params):
        assert detachment_factor(params.d_cr + 3.0, 0.3, params) > 1.0 - 1e-6

    def test_zero_inside_critical_zone(self, params):
        assert detachment_factor(params.d_cr / 2, 0.3, params) == 0.0

    @given(st.floats(0.0, 2.0), st.floats(0.05, 1.0))
    @settings(max_examples=100, deadline=None)
    def test_monotone_above_critical(self, gap, d0):
        p = ControllerParams(tau=0.04, rep_cap=0.3)
        lo = detachment_factor(p.d_cr + gap, d0, p)
        hi = detachment_factor(p.d_cr + gap + 0.01, d0, p)
        assert 0.0 <= lo <= hi <= 1.0


class TestIntegral:
    def test_frozen_inside_band(self, params):
        state = IntegralState()
        state.psi = np.array([0.1, -0.2, 0.3])
        before = state.psi
        state.step(np.array([1.0, 0, 0]), params.d_cr + 0.1, 0.3, params)
        assert state.psi is before  # untouched, not merely equal

    def test_accumulates_outside_band(self):
        p = ControllerParams(ki=0.5, dt=0.04, tau=0.04, rep_cap=0.3)
        state = IntegralState()
        state.step(np.array([1.0, 0, 0]), 10.0, 0.3, p)
        np.testing.assert_allclose(state.psi, [-0.02, 0, 0])

    def test_zero_error_no_change(self, params):
        state = IntegralState()
        state.step(np.zeros(3), 10.0, 0.3, params)
        np.testing.assert_array_equal(state.psi, np.zeros(3))

    @given(st.lists(st.floats(-0.3, 0.3), min_size=3, max_size=3),
           st.floats(0.0, 0.29))
    @settings(max_examples=100, deadline=None)
    def test_frozen_for_any_error_inside_band(self, e, gap):
        p = ControllerParams(tau=0.04, rep_cap=0.3)
        state = IntegralState()
        state.psi = np.array([1.0, 2.0, 3.0])
        state.step(np.array(e), p.d_cr + gap, 0.3, p)
        np.testing.assert_array_equal(state.psi, [1.0, 2.0, 3.0])


class TestAttractionVelocity:
    def test_zero_error_zero_integral(self, params):
        np.testing.assert_array_equal(
            attraction_velocity(np.zeros(3), np.zeros(3), 1.0, params), np.zeros(3))

    def test_full_detachment_kills_attraction(self, params):
        v = attraction_velocity(np.array([5.0, 5, 5]), np.array([1.0, 1, 1]), 0.0, params)
        np.testing.assert_array_equal(v, np.zeros(3))

    def test_proportional_term(self):
        p = ControllerParams(kp=2.0, tau=0.04, rep_cap=0.3)
        v = attraction_velocity(np.array([0.1, 0, 0]), np.zeros(3), 1.0, p)
        np.testing.assert_allclose(v, [-0.2, 0, 0])


class TestDLS:
    def test_orthonormal_rows_no_damping(self):
        jac = np.hstack([np.eye(3), np.zeros((3, 4))])
        qdot = dls_solve(jac, np.array([1.0, 2.0, 3.0]), 0.0)
        np.testing.assert_allclose(qdot, [1, 2, 3, 0, 0, 0, 0], atol=1e-12)

    def test_unit_damping_halves(self):
        jac = np.hstack([np.eye(3), np.zeros((3, 4))])
        qdot = dls_solve(jac, np.array([1.0, 2.0, 3.0]), 1.0)
        np.testing.assert_allclose(qdot, [0.5, 1.0, 1.5, 0, 0, 0, 0], atol=1e-12)

    def test_zero_jacobian(self):
        qdot = dls_solve(np.zeros((3, 7)), np.array([1.0, 1, 1]), 0.1)
        np.testing.assert_array_equal(qdot, np.zeros(7))

    def test_rank_deficient_without_damping_raises(self):
        jac = np.zeros((3, 7))
        jac[0, 0] = 1.0
        with pytest.raises(SingularityError):
            dls_solve(jac, np.ones(3), 0.0)

    def test_matches_independent_dense_solver(self):
        rng = np.random.default_rng(10)
        for _ in range(300):
            jac = rng.normal(size=(3, 7))
            v = rng.normal(size=3)
            lam = float(rng.uniform(1e-3, 1.0))
            mine = dls_solve(jac, v, lam)
            oracle = dls_oracle(jac, v, lam)
            assert np.linalg.norm(mine - oracle) / np.linalg.norm(oracle) < 1e-9
            assert damped_objective(jac, v, lam, mine) \
                <= damped_objective(jac, v, lam, oracle) * (1 + 1e-9)

    def test_small_damping_approaches_pseudoinverse(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            jac = rng.normal(size=(3, 7))
            v = rng.normal(size=3)
            mine = dls_solve(jac, v, 1e-6)
            pinv = np.linalg.pinv(jac) @ v
            assert np.linalg.norm(mine - pinv) < 1e-6


def far_prox():
    return ProximityResult(d_min=5.0, r1=np.array([1.0, 0, 1]), r2=np.array([6.0, 0, 1]),
                           s=np.array([-1.0, 0, 0]), robot_capsule="R3",
                           obstacle_capsule="H1", v_rel=0.1)


class TestControlStep:
    def _controller(self, iiwa):
        return AvoidanceController(iiwa, ControllerParams())

    def test_idle_no_obstacle_zero_error(self, iiwa):
        ctrl = self._controller(iiwa)
        q = np.zeros(7)
        p_g = eef_position(iiwa, q)
        out = ctrl.step(None, p_g, q, now=0.0, switched=True)
        np.testing.assert_array_equal(out.qdot_total, np.zeros(7))

    def test_no_obstacle_pure_attraction(self, iiwa):
        ctrl = self._controller(iiwa)
        q = np.zeros(7)
        p_g = eef_position(iiwa, q) + np.array([0.05, 0.02, -0.03])
        out = ctrl.step(None, p_g, q, now=0.0, switched=True)
        np.testing.assert_array_equal(out.qdot_total, out.qdot_att)
        assert out.v_rep_mod == 0.0

    def test_far_obstacle_bit_identical_to_attraction(self, iiwa):
        # obstacle beyond the influence band, receding, beyond l2: zero repulsion path
        ctrl = self._controller(iiwa)
        q = np.array([0.2, 0.5, -0.1, -1.0, 0.3, 0.6, 0.1])
        p_g = eef_position(iiwa, q) + np.array([0.04, -0.02, 0.01])
        out = ctrl.step(far_prox(), p_g, q, now=0.0, switched=True)
        np.testing.assert_array_equal(out.qdot_total, out.qdot_att)
        assert out.v_rep_mod == 0.0

    def test_repulsion_zero_distal_columns(self, iiwa):
        # obstacle grazing R2 (link 4): repulsion command leaves joints 5..7 at 0
        ctrl = self._controller(iiwa)
        q = np.array([0.0, 0.4, 0.0, -1.2, 0.0, 0.8, 0.0])
        caps = robot_capsules(iiwa, q)
        r2 = next(c for c in caps if c.name == "R2")
        mid = 0.5 * (r2.a + r2.b)
        prox = ProximityResult(
            d_min=0.08, r1=mid + np.array([0, r2.radius, 0]),
            r2=mid + np.array([0, r2.radius + 0.08, 0]),
            s=np.array([0.0, -1.0, 0.0]), robot_capsule="R2", obstacle_capsule="H1",
            v_rel=0.0)
        ctrl.step(None, eef_position(iiwa, q), q, now=0.0, switched=True)  # start ramp
        out = ctrl.step(prox, eef_position(iiwa, q), q, now=10.0, switched=False)
        assert out.v_rep_mod > 0.0
        np.testing.assert_array_equal(out.qdot_rep[4:], np.zeros(3))
        assert np.any(out.qdot_rep[:4] != 0.0)

    def test_saturation_preserves_direction(self, iiwa):
        p = ControllerParams(kp=50.0)  # force saturation
        ctrl = AvoidanceController(iiwa, p)
        q = np.zeros(7)
        p_g = eef_position(iiwa, q) + np.array([0.5, 0.3, -0.2])
        out = ctrl.step(None, p_g, q, now=0.0, switched=True)
        assert np.all(np.abs(out.qdot_total) <= iiwa.qdot_max + 1e-12)
        raw = out.qdot_att + out.qdot_rep
        cos = raw @ out.qdot_total / (np.linalg.norm(raw) * np.linalg.norm(out.qdot_total))
        assert cos == pytest.approx(1.0)

    def test_switch_ramp_limits_first_tick(self, iiwa):
        ctrl = self._controller(iiwa)
        q = np.array([0.0, 0.4, 0.0, -1.2, 0.0, 0.8, 0.0])
        caps = robot_capsules(iiwa, q)
        r3 = next(c for c in caps if c.name == "R3")
        prox = ProximityResult(
            d_min=0.02, r1=r3.a, r2=r3.a + np.array([0, 0.02, 0]),
            s=np.array([0.0, -1.0, 0.0]), robot_capsule="R3", obstacle_capsule="H1",
            v_rel=-0.5)
        p = ctrl.params
        out0 = ctrl.step(prox, eef_position(iiwa, q), q, now=1.0, switched=True)
        assert out0.v_rep_mod == 0.0
        out1 = ctrl.step(prox, eef_position(iiwa, q), q, now=1.0 + p.dt, switched=False)
        assert out1.v_rep_mod <= p.rep_cap * (1 - math.exp(-p.dt / p.tau)) + 1e-12
        assert out1.v_rep_mod > 0.0

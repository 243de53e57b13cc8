"""Scenario-level checks: embedding exactness over the declared operating
boxes, printed-matrix entries, dynamics transcription, and the lane-change
reference generator's internal consistency."""

import math

import numpy as np
import pytest

from lpvmpc.benchmarks import (BENCHMARK_NAMES, BICYCLE_PARAMS,
                               bicycle_scenario, get_scenario,
                               lane_change_reference, unicycle_scenario,
                               vanderpol_scenario)
from lpvmpc.lpv import embedding_exactness, integrate_plant


class TestEmbeddingExactness:
    def test_vanderpol_euler_exact_to_machine_precision(self):
        sc = vanderpol_scenario(embedding="euler_exact")
        err = embedding_exactness(sc.model, sc.plant, sc.x_low, sc.x_high,
                                  sc.u_low, sc.u_high, n_samples=10000)
        assert err <= 1e-12

    def test_vanderpol_rk4_polynomial_factorization(self):
        sc = vanderpol_scenario(embedding="rk4_exact")
        err = embedding_exactness(sc.model, sc.plant, sc.x_low, sc.x_high,
                                  sc.u_low, sc.u_high, n_samples=10000)
        assert err <= 1e-10

    def test_unicycle_exact_over_full_heading_range(self):
        sc = unicycle_scenario()
        err = embedding_exactness(sc.model, sc.plant, sc.x_low, sc.x_high,
                                  sc.u_low, sc.u_high, n_samples=10000)
        assert err <= 1e-12

    def test_bicycle_exact_over_declared_box(self):
        sc = bicycle_scenario()
        err = embedding_exactness(sc.model, sc.plant, sc.x_low, sc.x_high,
                                  sc.u_low, sc.u_high, n_samples=5000)
        assert err <= 1e-10

    def test_bicycle_exact_down_to_speed_floor(self):
        # the 1/v scheduling terms are largest at the v = 0.5 floor
        sc = bicycle_scenario()
        x_low = np.array([-10.0, -5.0, 0.5, -2.0, -math.pi, -1.0])
        x_high = np.array([210.0, 5.0, 30.0, 2.0, math.pi, 1.0])
        err = embedding_exactness(sc.model, sc.plant, x_low, x_high,
                                  sc.u_low, sc.u_high, n_samples=5000)
        assert err <= 1e-10


class TestVanderpolScenario:
    def test_euler_model_closed_form(self):
        sc = vanderpol_scenario(embedding="euler_exact")
        ts = sc.plant.t_s
        assert ts == 0.5
        p = np.array([0.7])
        A = sc.model.A(p)
        np.testing.assert_allclose(
            A, [[1.0, ts], [-ts, 1.0 + ts * (1.0 - 0.7)]], atol=1e-15)
        np.testing.assert_allclose(sc.model.B(p), [[0.0], [ts]], atol=0.0)

    def test_schedule_at_initial_state(self):
        sc = vanderpol_scenario()
        p = sc.model.schedule(np.array([1.0, 0.0]), np.zeros(1))
        np.testing.assert_allclose(p, [1.0], atol=0.0)

    def test_constraint_rows_encode_velocity_floor_and_input_box(self):
        sc = vanderpol_scenario()
        # -ydot <= 0.25 is exactly ydot >= -0.25
        np.testing.assert_allclose(sc.config.G_x, [[0.0, -1.0]])
        np.testing.assert_allclose(sc.config.h_x, [0.25])
        np.testing.assert_allclose(sc.config.G_u, [[1.0], [-1.0]])
        np.testing.assert_allclose(sc.config.h_u, [1.0, 1.0])
        np.testing.assert_allclose(sc.x0, [1.0, 0.0])
        assert sc.steps == 40

    def test_plant_rk4_step_close_to_fine_integration(self):
        import dataclasses
        sc = vanderpol_scenario()
        x, u = np.array([1.0, 0.0]), np.zeros(1)
        coarse = integrate_plant(sc.plant, x, u, method="rk4")
        fine_plant = dataclasses.replace(sc.plant, t_s=sc.plant.t_s / 1000.0)
        xf = x.copy()
        for _ in range(1000):
            xf = integrate_plant(fine_plant, xf, u, method="rk4")
        assert float(np.max(np.abs(coarse - xf))) <= 1e-3

    def test_unknown_embedding_rejected(self):
        with pytest.raises(ValueError, match="embedding"):
            vanderpol_scenario(embedding="exact_exact")


class TestUnicycleScenario:
    def test_system_matrix_entries_at_zero_heading(self):
        sc = unicycle_scenario()
        A = sc.model.A(np.array([1.0, 0.0]))  # p = (cos 0, sin 0)
        assert A[0, 2] == pytest.approx(0.1, abs=0.0)
        assert A[3, 4] == pytest.approx(0.1, abs=0.0)
        assert A[1, 2] == 0.0

    def test_input_matrix_constant(self):
        sc = unicycle_scenario()
        rng = np.random.default_rng(3)
        B_ref = sc.model.B(np.zeros(2))
        assert B_ref[2, 0] == 0.1
        assert B_ref[4, 1] == 0.1
        for _ in range(5):
            p = rng.uniform(-1.0, 1.0, size=2)
            assert np.array_equal(sc.model.B(p), B_ref)

    def test_weights_horizon_and_start(self):
        sc = unicycle_scenario()
        np.testing.assert_allclose(np.diag(sc.config.Q), [1.0, 1.0, 0.1, 1.0, 0.1])
        np.testing.assert_allclose(sc.config.R, np.eye(2))
        assert sc.config.N == 20
        assert sc.plant.t_s == 0.1
        np.testing.assert_allclose(sc.x0, [1.0, 2.0, 0.0, math.pi, 0.0])
        assert sc.steps == 100


def transcribed_bicycle_field(x, u):
    """Single-track dynamics written out once more, straight from the
    slip-angle and force definitions, as an independent cross-check."""
    P = BICYCLE_PARAMS
    X, Y, v, nu, psi, w = x
    a, delta = u
    alpha_f = delta - (nu + P["lf"] * w) / v
    alpha_r = (P["lr"] * w - nu) / v
    Fyf = P["Caf"] * alpha_f
    Fyr = P["Car"] * alpha_r
    return np.array([
        v * math.cos(psi) - nu * math.sin(psi),
        v * math.sin(psi) + nu * math.cos(psi),
        w * nu + a,
        -w * v + (2.0 / P["m"]) * (Fyf * math.cos(delta) + Fyr),
        w,
        (2.0 / P["Iz"]) * (P["lf"] * Fyf - P["lr"] * Fyr),
    ])


class TestBicycleScenario:
    def test_field_matches_direct_transcription(self):
        sc = bicycle_scenario()
        rng = np.random.default_rng(11)
        for _ in range(100):
            x = rng.uniform([-50.0, -5.0, 0.5, -2.0, -math.pi, -1.0],
                            [50.0, 5.0, 30.0, 2.0, math.pi, 1.0])
            u = rng.uniform([-8.0, -0.5], [8.0, 0.5])
            np.testing.assert_allclose(sc.plant.f(x, u),
                                       transcribed_bicycle_field(x, u),
                                       rtol=1e-12, atol=1e-9)

    def test_rear_slip_angle_zero_without_lateral_motion(self):
        P = BICYCLE_PARAMS
        nu, w = 0.0, 0.0
        assert (P["lr"] * w - nu) / 10.0 == 0.0
        # and the plant's yaw moment vanishes when both slip angles do
        sc = bicycle_scenario()
        x = np.array([0.0, 0.0, 10.0, 0.0, 0.0, 0.0])
        dx = sc.plant.f(x, np.zeros(2))
        assert dx[3] == 0.0
        assert dx[5] == 0.0

    def test_schedule_carries_speed_lateral_heading_and_steer(self):
        sc = bicycle_scenario()
        x = np.array([3.0, -1.0, 12.0, 0.4, 0.3, -0.2])
        u = np.array([1.0, 0.1])
        p = sc.model.schedule(x, u)
        assert p[0] == 12.0
        assert p[1] == 0.4
        assert p[2] == pytest.approx(math.cos(0.3), abs=1e-15)
        assert p[3] == pytest.approx(math.sin(0.3), abs=1e-15)
        assert p[4] == pytest.approx(1.0 / 12.0, abs=1e-15)
        assert p[5] == pytest.approx(math.cos(0.1), abs=1e-15)
        assert p[6] == pytest.approx(math.cos(0.1) / 12.0, abs=1e-15)

    def test_speed_floor_is_a_hard_constraint_row(self):
        sc = bicycle_scenario()
        # some row must read -v <= -v_min
        rows = [(tuple(g), h) for g, h in zip(sc.config.G_x, sc.config.h_x)]
        floor = (tuple(-1.0 if j == 2 else 0.0 for j in range(6)), -0.5)
        assert floor in rows

    def test_settings(self):
        sc = bicycle_scenario()
        assert sc.config.N == 15
        assert sc.plant.t_s == 0.05
        np.testing.assert_allclose(sc.config.Q, np.eye(6))
        np.testing.assert_allclose(sc.config.R, np.diag([0.1, 0.1]))
        assert sc.steps == 400
        assert np.array_equal(sc.x0, lane_change_reference(0.0))


class TestLaneChangeReference:
    def test_profile_endpoints_and_midpoint(self):
        assert lane_change_reference(8.0)[1] == pytest.approx(1.5, abs=1e-12)
        assert lane_change_reference(0.0)[1] == pytest.approx(0.0, abs=1e-3)
        assert lane_change_reference(30.0)[1] == pytest.approx(3.0, abs=1e-6)
        assert lane_change_reference(4.0)[0] == 40.0  # X = speed * t

    @pytest.mark.parametrize("t", [6.5, 8.0, 9.5])
    def test_heading_and_yaw_rate_consistent_with_path(self, t):
        h = 1e-5
        ref = lane_change_reference(t)
        y_dot = (lane_change_reference(t + h)[1]
                 - lane_change_reference(t - h)[1]) / (2.0 * h)
        assert ref[4] == pytest.approx(math.atan2(y_dot, 10.0), abs=1e-6)
        assert ref[2] == pytest.approx(math.hypot(10.0, y_dot), abs=1e-6)
        psi_dot = (lane_change_reference(t + h)[4]
                   - lane_change_reference(t - h)[4]) / (2.0 * h)
        assert ref[5] == pytest.approx(psi_dot, abs=1e-6)

    def test_lateral_velocity_referenced_at_zero(self):
        assert lane_change_reference(8.0)[3] == 0.0


class TestGetScenario:
    def test_unknown_name_lists_choices(self):
        with pytest.raises(ValueError, match="unknown benchmark"):
            get_scenario("pendulum")

    def test_overrides_apply(self):
        sc = get_scenario("vanderpol", horizon=7, steps=13)
        assert sc.config.N == 7
        assert sc.steps == 13

    @pytest.mark.parametrize("name", ["unicycle", "bicycle"])
    def test_single_embedding_benchmarks_reject_variants(self, name):
        with pytest.raises(ValueError, match="euler_exact"):
            get_scenario(name, embedding="rk4_exact")

    def test_names_and_dimensions(self):
        assert BENCHMARK_NAMES == ("vanderpol", "unicycle", "bicycle")
        dims = {"vanderpol": (2, 1), "unicycle": (5, 2), "bicycle": (6, 2)}
        for name, (n, m) in dims.items():
            sc = get_scenario(name)
            assert (sc.n, sc.m) == (n, m)

import numpy as np
import pytest

from roughflow.flow import (BlowUpError, FlowParams, PhaseBox, PhaseState,
                            energy, inflate_domain, integrate,
                            jacobian_determinant, min_safe_period,
                            semigroup_residual, verlet_step,
                            write_trajectory_csv)
from roughflow.spectral import RegularityTarget, synthesize


def free(x):
    return np.zeros_like(x)


def harmonic(x):
    return -x


def harmonic_potential(x):
    return 0.5 * float(np.dot(x, x))


class TestVerletStep:
    def test_free_motion_is_a_shear(self):
        out = verlet_step(free, PhaseState([2.0], [3.0]), 0.25)
        assert out.x[0] == pytest.approx(2.75, abs=0)
        assert out.v[0] == pytest.approx(3.0, abs=0)

    def test_harmonic_hand_computed(self):
        # v_half = -0.05; x' = 1 - 0.005 = 0.995; v' = -0.05 - 0.04975
        out = verlet_step(harmonic, PhaseState([1.0], [0.0]), 0.1)
        assert out.x[0] == pytest.approx(0.995, abs=1e-15)
        assert out.v[0] == pytest.approx(-0.09975, abs=1e-15)

    def test_single_step_reversibility(self):
        state = PhaseState([0.3], [1.1])
        fwd = verlet_step(harmonic, state, 0.05)
        back = verlet_step(harmonic, PhaseState(fwd.x, -fwd.v), 0.05)
        assert back.x[0] == pytest.approx(state.x[0], abs=1e-12)
        assert -back.v[0] == pytest.approx(state.v[0], abs=1e-12)

    def test_nonpositive_step_rejected(self):
        with pytest.raises(ValueError):
            verlet_step(free, PhaseState([0.0], [0.0]), 0.0)


class TestIntegrate:
    def test_free_motion(self):
        traj = integrate(free, PhaseState([0.0], [1.0]), FlowParams(h=0.01, T=1.0))
        assert traj.final_state.x[0] == pytest.approx(1.0, rel=1e-12)
        assert traj.final_state.v[0] == pytest.approx(1.0, abs=0)

    def test_harmonic_full_period(self):
        params = FlowParams(h=1e-3, T=2.0 * np.pi)
        traj = integrate(harmonic, PhaseState([1.0], [0.0]), params)
        assert traj.final_state.x[0] == pytest.approx(1.0, abs=1e-4)
        assert traj.final_state.v[0] == pytest.approx(0.0, abs=1e-4)

    def test_harmonic_against_closed_form_along_the_way(self):
        params = FlowParams(h=1e-3, T=1.0, record_stride=100)
        traj = integrate(harmonic, PhaseState([1.0], [0.0]), params)
        exact_x = np.cos(traj.times)
        exact_v = -np.sin(traj.times)
        assert np.max(np.abs(traj.xs[:, 0] - exact_x)) <= 1e-6
        assert np.max(np.abs(traj.vs[:, 0] - exact_v)) <= 1e-6

    def test_record_stride_sample_count(self):
        params = FlowParams(h=1e-2, T=1.0, record_stride=10)
        traj = integrate(free, PhaseState([0.0], [1.0]), params)
        assert len(traj) == 100 // 10 + 1
        assert np.allclose(np.diff(traj.times), 0.1)

    def test_blow_up_detected(self):
        # constant huge force drives |v| past the 1e6 guard quickly
        def rocket(x):
            return np.full_like(x, 1e9)
        with pytest.raises(BlowUpError):
            integrate(rocket, PhaseState([0.0], [0.0]), FlowParams(h=0.1, T=50.0))

    def test_second_order_global_convergence(self):
        def error_at(h):
            traj = integrate(harmonic, PhaseState([1.0], [0.0]),
                             FlowParams(h=h, T=1.0))
            dx = traj.final_state.x[0] - np.cos(1.0)
            dv = traj.final_state.v[0] + np.sin(1.0)
            return np.hypot(dx, dv)

        for h in (1e-2, 5e-3, 2.5e-3):
            ratio = error_at(h) / error_at(h / 2.0)
            assert 3.5 <= ratio <= 4.5


class TestFlowParams:
    def test_step_adjusted_downward(self):
        params = FlowParams(h=0.3, T=1.0)
        assert params.n_steps == 4
        assert params.h == pytest.approx(0.25)
        assert params.h <= 0.3

    def test_exact_divisor_kept(self):
        params = FlowParams(h=0.25, T=1.0)
        assert params.n_steps == 4
        assert params.h == 0.25

    def test_stride_must_divide(self):
        with pytest.raises(ValueError):
            FlowParams(h=0.25, T=1.0, record_stride=3)

    def test_step_larger_than_horizon(self):
        with pytest.raises(ValueError):
            FlowParams(h=2.0, T=1.0)


class TestEnergy:
    def test_free_particle(self):
        # phi == 0: energy is |v|^2 / 2
        assert energy(lambda x: 0.0, PhaseState([0.0], [2.0])) == pytest.approx(2.0)

    def test_linear_potential_normalization(self):
        # phi(x) = x and v^2 + 2x = 0 gives zero energy
        state = PhaseState([-0.5], [1.0])
        assert energy(lambda x: float(x[0]), state) == pytest.approx(0.0, abs=1e-15)

    def test_gradient_field_energy(self):
        target = RegularityTarget(s=0.95, cutoff=4, amplitude=1.0)
        field = synthesize(target, dim=1, period=2 * np.pi, seed=8, gradient=True)
        state = PhaseState([0.2], [0.7])
        expected = 0.5 * 0.49 + field.evaluate_potential([0.2])
        assert energy(field, state) == pytest.approx(expected, rel=1e-14)

    def test_non_gradient_rejected(self):
        target = RegularityTarget(s=0.95, cutoff=4, amplitude=1.0)
        field = synthesize(target, dim=1, period=2 * np.pi, seed=8)
        with pytest.raises(ValueError):
            energy(field, PhaseState([0.0], [1.0]))

    def test_harmonic_drift_bounded_and_second_order(self):
        def max_drift(h):
            params = FlowParams(h=h, T=10.0)
            traj = integrate(harmonic, PhaseState([1.0], [0.0]), params)
            e = 0.5 * (traj.vs[:, 0] ** 2 + traj.xs[:, 0] ** 2)
            return np.max(np.abs(e - e[0])) / e[0]

        drift = max_drift(1e-3)
        assert drift <= 1e-6
        ratio = max_drift(2e-3) / max_drift(1e-3)
        assert 3.0 <= ratio <= 5.0


class TestJacobian:
    def test_free_motion_shear(self):
        det = jacobian_determinant(free, PhaseState([0.4], [1.3]), h=0.05)
        assert det == pytest.approx(1.0, abs=1e-9)

    def test_harmonic(self):
        det = jacobian_determinant(harmonic, PhaseState([0.7], [-0.2]),
                                   h=0.01, fd_eps=1e-5)
        assert det == pytest.approx(1.0, abs=1e-6)

    def test_rough_field_volume_preservation(self):
        target = RegularityTarget(s=0.95, cutoff=64, amplitude=1.0)
        field = synthesize(target, dim=1, period=132.0, seed=42)
        rng = np.random.default_rng(5)
        for _ in range(100):
            state = PhaseState(rng.uniform(0, 1, 1), rng.uniform(0, 1, 1))
            det = jacobian_determinant(field.evaluate_batch, state, h=0.01)
            assert abs(det - 1.0) <= 1e-4

    def test_two_dimensional_field(self):
        target = RegularityTarget(s=0.95, cutoff=4, amplitude=1.0)
        field = synthesize(target, dim=2, period=20.0, seed=6)
        state = PhaseState([0.1, 0.2], [0.3, -0.1])
        det = jacobian_determinant(field.evaluate_batch, state, h=0.01)
        assert abs(det - 1.0) <= 1e-4


class TestSemigroup:
    def test_zero_lag_is_exact(self):
        params = FlowParams(h=0.01, T=1.0)
        r = semigroup_residual(harmonic, PhaseState([1.0], [0.0]), 0.5, 0.0, params)
        assert r == 0.0

    def test_free_motion_composes_exactly(self):
        params = FlowParams(h=0.01, T=1.0)
        r = semigroup_residual(free, PhaseState([0.0], [1.0]), 0.4, 0.6, params)
        assert r == 0.0

    def test_smooth_field_composition(self):
        target = RegularityTarget(s=0.95, cutoff=16, amplitude=1.0)
        field = synthesize(target, dim=1, period=10.0, seed=9)
        params = FlowParams(h=0.01, T=1.0)
        r = semigroup_residual(field.evaluate_batch, PhaseState([0.5], [0.5]),
                               0.25, 0.5, params)
        assert r <= 1e-10

    def test_off_grid_times_rejected(self):
        params = FlowParams(h=0.01, T=1.0)
        with pytest.raises(ValueError):
            semigroup_residual(free, PhaseState([0.0], [1.0]), 0.505e-1, 0.5, params)


class TestReversibility:
    def test_many_steps_forward_backward(self):
        target = RegularityTarget(s=0.95, cutoff=32, amplitude=1.0)
        field = synthesize(target, dim=1, period=10.0, seed=10)
        n = 500
        params = FlowParams(h=1e-3, T=n * 1e-3, record_stride=n)
        start = PhaseState([0.3], [0.8])
        fwd = integrate(field.evaluate_batch, start, params).final_state
        back = integrate(field.evaluate_batch, PhaseState(fwd.x, -fwd.v),
                         params).final_state
        err = np.hypot(back.x[0] - start.x[0], -back.v[0] - start.v[0])
        assert err <= 1e-9 * n


class TestDomains:
    def test_zero_inflation_is_unit_slack(self):
        omega = PhaseBox([0.0, 0.0], [1.0, 1.0])
        box = inflate_domain(omega, 0.0, 0.0)
        assert np.allclose(box.lower, [-1.0, -1.0])
        assert np.allclose(box.upper, [2.0, 2.0])

    def test_worked_example(self):
        # Omega = [0,1]^2, A = 1, T = 1, |v|_max = 1:
        # positions +- (1 + 1/2 + 1) = 2.5, velocities +- (1 + 1) = 2
        omega = PhaseBox([0.0, 0.0], [1.0, 1.0])
        box = inflate_domain(omega, 1.0, 1.0)
        assert np.allclose(box.lower, [-2.5, -2.0])
        assert np.allclose(box.upper, [3.5, 3.0])

    def test_nesting(self):
        omega = PhaseBox([0.0, 0.0], [1.0, 1.0])
        once = inflate_domain(omega, 1.0, 1.0)
        twice = inflate_domain(once, 1.0, 1.0)
        assert np.all(twice.lower <= once.lower) and np.all(once.lower <= omega.lower)
        assert np.all(twice.upper >= once.upper) and np.all(once.upper >= omega.upper)

    def test_trajectories_stay_inside_certified_box(self):
        target = RegularityTarget(s=0.95, cutoff=16, amplitude=1.0)
        field = synthesize(target, dim=1, period=132.0, seed=12)
        omega = PhaseBox([0.0, 0.0], [1.0, 1.0])
        T = 2.0
        box = inflate_domain(omega, field.sup_bound, T)
        params = FlowParams(h=1e-2, T=T)
        rng = np.random.default_rng(6)
        for _ in range(10):
            state = PhaseState(rng.uniform(0, 1, 1), rng.uniform(0, 1, 1))
            traj = integrate(field.evaluate_batch, state, params)
            assert np.all(traj.xs >= box.lower[0]) and np.all(traj.xs <= box.upper[0])
            assert np.all(traj.vs >= box.lower[1]) and np.all(traj.vs <= box.upper[1])

    def test_min_safe_period_covers_double_inflation(self):
        omega = PhaseBox([0.0, 0.0], [1.0, 1.0])
        L = min_safe_period(omega, 1.0, 2.0)
        twice = inflate_domain(inflate_domain(omega, 1.0, 2.0), 1.0, 2.0)
        lo, hi = twice.position_bounds()
        assert L == pytest.approx(4.0 * (hi[0] - lo[0]))

    def test_box_validation(self):
        with pytest.raises(ValueError):
            PhaseBox([1.0, 0.0], [0.0, 1.0])
        with pytest.raises(ValueError):
            PhaseBox([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])


class TestTrajectoryCsv:
    def test_header_and_round_trip(self, tmp_path):
        params = FlowParams(h=0.125, T=1.0, record_stride=2)
        traj = integrate(harmonic, PhaseState([1.0], [0.0]), params)
        path = tmp_path / "trajectory.csv"
        write_trajectory_csv(traj, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,x_1,v_1"
        assert len(lines) == len(traj) + 1
        value = float(lines[-1].split(",")[1])
        assert value == traj.final_state.x[0]  # 17 digits round-trip exactly

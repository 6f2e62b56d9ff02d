import math

import numpy as np
import pytest

from roughflow.flow import FlowParams, PhaseBox, PhaseState
from roughflow.spectral import RegularityTarget, mollify, synthesize
from roughflow.stability import (ContainmentError, EnsembleSpec, PerturbedPair,
                                 ShiftSpec, divergence_record, fit_log_exponent,
                                 mollification_cauchy_study, q_delta,
                                 q_scaling_study, step_robustness)


def free(x):
    return np.zeros_like(x)


OMEGA = PhaseBox([0.0, 0.0], [1.0, 1.0])


def small_field(cutoff=16, period=132.0, seed=42, amplitude=1.0):
    target = RegularityTarget(s=0.95, cutoff=cutoff, amplitude=amplitude)
    return synthesize(target, dim=1, period=period, seed=seed)


class TestDivergenceRecord:
    def test_zero_shift_keeps_only_delta_norm(self):
        pair = PerturbedPair(PhaseState([0.3], [0.7]), [0.0], [0.0], 0.01)
        rec = divergence_record(free, pair, FlowParams(h=0.1, T=1.0))
        assert np.all(rec.sup_x_sq == 0.0)
        assert np.all(rec.int_v_sq == 0.0)
        assert np.all(rec.a_delta == pytest.approx(1e-4, rel=1e-15))

    def test_free_motion_closed_form(self):
        d1, d2, T = 0.01, 0.02, 1.0
        pair = PerturbedPair(PhaseState([0.0], [1.0]), [d1], [d2],
                             math.hypot(d1, d2))
        rec = divergence_record(free, pair, FlowParams(h=0.01, T=T))
        assert rec.sup_x_sq[-1] == pytest.approx((d1 + d2 * T) ** 2, rel=1e-9)
        assert rec.int_v_sq[-1] == pytest.approx(d2 ** 2 * T, rel=1e-12)

    def test_a_delta_monotone(self):
        field = small_field()
        pair = PerturbedPair(PhaseState([0.4], [0.6]), [1e-3], [1e-3],
                             math.hypot(1e-3, 1e-3))
        rec = divergence_record(field.evaluate_batch, pair, FlowParams(h=1e-2, T=2.0))
        a = rec.a_delta
        assert np.all(np.diff(a) >= 0.0)
        assert a[0] >= pair.delta_norm ** 2

    def test_pair_invariant(self):
        with pytest.raises(ValueError):
            PerturbedPair(PhaseState([0.0], [0.0]), [0.1], [0.0], 0.05)
        with pytest.raises(ValueError):
            PerturbedPair(PhaseState([0.0], [0.0]), [0.0], [0.0], 0.0)


class TestQDelta:
    def test_zero_shift_gives_zero(self):
        ens = EnsembleSpec(OMEGA, sampling="grid", count=16, seed=0)
        shift = ShiftSpec(0.05, np.zeros(2))
        q = q_delta(free, ens, shift, FlowParams(h=0.1, T=1.0))
        assert q == 0.0

    def test_free_motion_closed_form(self):
        # default direction: d1 = d2 = delta/sqrt(2), so the integrand is
        # log(1 + ((1+T)^2 + T)/2) for every member and Q = |Omega| * that
        T = 1.0
        ens = EnsembleSpec(OMEGA, sampling="grid", count=25, seed=0)
        q = q_delta(free, ens, ShiftSpec(0.01), FlowParams(h=0.05, T=T))
        expected = OMEGA.volume * math.log(1.0 + ((1 + T) ** 2 + T) / 2.0)
        assert q == pytest.approx(expected, rel=1e-9)

    def test_free_motion_uniform_bound(self):
        T = 2.0
        ens = EnsembleSpec(OMEGA, sampling="low-discrepancy", count=32, seed=0)
        q = q_delta(free, ens, ShiftSpec(0.01), FlowParams(h=0.05, T=T))
        assert q <= OMEGA.volume * math.log(1.0 + (1 + T) ** 2 + T)

    def test_grid_reseeding_invariance(self):
        field = small_field()
        params = FlowParams(h=1e-2, T=1.0)
        qs = []
        for seed in (0, 123):
            ens = EnsembleSpec(OMEGA, sampling="grid", count=16, seed=seed)
            qs.append(q_delta(field.evaluate_batch, ens, ShiftSpec(0.01), params))
        assert qs[0] == qs[1]

    def test_monotone_in_horizon(self):
        field = small_field()
        ens = EnsembleSpec(OMEGA, sampling="grid", count=16, seed=0)
        shift = ShiftSpec(0.01)
        q1 = q_delta(field.evaluate_batch, ens, shift, FlowParams(h=1e-2, T=0.5))
        q2 = q_delta(field.evaluate_batch, ens, shift, FlowParams(h=1e-2, T=1.0))
        assert q2 >= q1

    def test_quadrature_consistency_under_grid_refinement(self):
        field = small_field()
        params = FlowParams(h=1e-2, T=1.0)
        shift = ShiftSpec(0.01)
        coarse = q_delta(field.evaluate_batch,
                         EnsembleSpec(OMEGA, "grid", 64, 0), shift, params)
        fine = q_delta(field.evaluate_batch,
                       EnsembleSpec(OMEGA, "grid", 256, 0), shift, params)
        assert abs(fine - coarse) / coarse <= 0.02

    def test_containment_violation_detected(self):
        class LyingForce:
            sup_bound = 0.0  # claims F == 0 but pushes hard

            def __call__(self, x):
                return np.full_like(x, 50.0)

        ens = EnsembleSpec(OMEGA, sampling="grid", count=4, seed=0)
        with pytest.raises(ContainmentError):
            q_delta(LyingForce(), ens, ShiftSpec(0.01), FlowParams(h=0.01, T=1.0))


class TestEnsembleSpec:
    def test_grid_needs_exact_power(self):
        with pytest.raises(ValueError):
            EnsembleSpec(OMEGA, sampling="grid", count=30, seed=0).points()

    def test_all_samples_inside_omega(self):
        for sampling, count in (("grid", 16), ("low-discrepancy", 32),
                                ("pseudorandom", 50)):
            pts = EnsembleSpec(OMEGA, sampling=sampling, count=count, seed=1).points()
            assert pts.shape == (count, 2)
            assert np.all(pts >= OMEGA.lower) and np.all(pts <= OMEGA.upper)

    def test_low_discrepancy_deterministic(self):
        a = EnsembleSpec(OMEGA, "low-discrepancy", 64, seed=1).points()
        b = EnsembleSpec(OMEGA, "low-discrepancy", 64, seed=2).points()
        assert np.array_equal(a, b)

    def test_pseudorandom_seeded(self):
        a = EnsembleSpec(OMEGA, "pseudorandom", 64, seed=1).points()
        b = EnsembleSpec(OMEGA, "pseudorandom", 64, seed=1).points()
        c = EnsembleSpec(OMEGA, "pseudorandom", 64, seed=2).points()
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_unknown_scheme_rejected(self):
        with pytest.raises(ValueError):
            EnsembleSpec(OMEGA, sampling="sobol", count=4, seed=0)


class TestScalingStudy:
    def test_free_motion_constant_in_delta(self):
        ens = EnsembleSpec(OMEGA, sampling="grid", count=16, seed=0)
        deltas = [1e-1, 1e-2, 1e-3, 1e-4]
        study = q_scaling_study(free, ens, deltas, FlowParams(h=0.05, T=1.0))
        qs = study.qs()
        assert np.max(np.abs(qs - qs[0])) <= 1e-9 * qs[0]
        fit = fit_log_exponent(study.deltas(), qs)
        assert abs(fit.slope) <= 1e-9

    def test_preconditions(self):
        ens = EnsembleSpec(OMEGA, sampling="grid", count=16, seed=0)
        params = FlowParams(h=0.05, T=1.0)
        with pytest.raises(ValueError):
            q_scaling_study(free, ens, [1e-3, 1e-2], params)  # increasing
        with pytest.raises(ValueError):
            q_scaling_study(free, ens, [0.5, 1e-3], params)  # 0.5 > 1/e

    def test_rows_expose_q_over_log(self):
        ens = EnsembleSpec(OMEGA, sampling="grid", count=16, seed=0)
        study = q_scaling_study(free, ens, [1e-2, 1e-3], FlowParams(h=0.05, T=1.0))
        for row in study.rows:
            assert row.q_over_log == pytest.approx(
                row.q / math.log(1.0 / row.delta), rel=1e-15)

    def test_step_gate_passes_on_smooth_field(self):
        field = small_field(cutoff=8)
        ens = EnsembleSpec(OMEGA, sampling="grid", count=16, seed=0)
        gate = step_robustness(field.evaluate_batch, ens, [1e-2, 1e-3],
                               FlowParams(h=1e-2, T=1.0))
        assert gate.max_rel_change < 0.01
        assert gate.passed()


class TestFitLogExponent:
    def test_exact_half_power(self):
        deltas = np.array([1e-2, 1e-3, 1e-4, 1e-5])
        qs = np.log(1.0 / deltas) ** 0.5
        fit = fit_log_exponent(deltas, qs)
        assert fit.slope == pytest.approx(0.5, abs=1e-10)
        assert fit.residual <= 1e-10

    def test_constant_table(self):
        deltas = np.array([1e-2, 1e-3, 1e-4])
        fit = fit_log_exponent(deltas, np.full(3, 2.5))
        assert fit.slope == pytest.approx(0.0, abs=1e-12)

    def test_noisy_power_recovered(self):
        rng = np.random.default_rng(2024)
        deltas = 10.0 ** -np.linspace(1.5, 5, 8)
        qs = 3.0 * np.log(1.0 / deltas) ** 0.8 * (1.0 + 0.01 * rng.normal(size=8))
        fit = fit_log_exponent(deltas, qs)
        assert 0.75 <= fit.slope <= 0.85

    def test_nonpositive_rows_reported(self):
        deltas = np.array([1e-2, 1e-3, 1e-4, 1e-5])
        qs = np.array([2.0, -1.0, 1.5, 1.2])
        fit = fit_log_exponent(deltas, qs)
        assert fit.excluded == (1,)
        assert fit.n_used == 3

    def test_too_few_rows(self):
        with pytest.raises(ValueError):
            fit_log_exponent(np.array([1e-2, 1e-3]), np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            fit_log_exponent(np.array([1e-2, 1e-3, 1e-4]),
                             np.array([1.0, -1.0, -2.0]))


class TestMollificationStudy:
    def test_band_limited_field_gives_zero_distances(self):
        field = small_field(cutoff=4)
        ens = EnsembleSpec(OMEGA, sampling="grid", count=4, seed=0)
        rows = mollification_cauchy_study(field, [8, 16, 32], ens,
                                          FlowParams(h=0.05, T=0.5))
        assert all(r.distance == 0.0 for r in rows)

    def test_single_cutoff_rejected(self):
        field = small_field()
        ens = EnsembleSpec(OMEGA, sampling="grid", count=4, seed=0)
        with pytest.raises(ValueError):
            mollification_cauchy_study(field, [8], ens, FlowParams(h=0.05, T=0.5))
        with pytest.raises(ValueError):
            mollification_cauchy_study(field, [8, 8], ens, FlowParams(h=0.05, T=0.5))

    def test_distances_decrease_for_rough_field(self):
        field = small_field(cutoff=64)
        ens = EnsembleSpec(OMEGA, sampling="low-discrepancy", count=64, seed=0)
        rows = mollification_cauchy_study(field, [8, 16, 32, 64], ens,
                                          FlowParams(h=1e-2, T=1.0))
        dist = [r.distance for r in rows]
        assert all(b < a for a, b in zip(dist, dist[1:]))

    def test_rows_are_consistent_with_truncations(self):
        field = small_field(cutoff=16)
        assert mollify(field, 16).mode_count() == field.mode_count()

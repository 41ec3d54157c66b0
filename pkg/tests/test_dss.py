import numpy as np
import pytest

import fluxspot as fs
from fluxspot.circuit import EffectiveCoefficients
from fluxspot.exceptions import StencilCrossingError
from fluxspot.floquet import FilterWeights
from fluxspot.pareto import Individual, ParetoFront

from conftest import random_drive, solve_drive


def static_drive(omega_d=10.0):
    return fs.DriveSpec(phi_dc=1.03 * np.pi, phi_ac=0.05, omega_d=omega_d, p=(0.0,))


class TestDistanceToNearestInteger:
    def test_values(self):
        assert fs.distance_to_nearest_integer(0.5) == 0.5
        assert fs.distance_to_nearest_integer(1.2) == pytest.approx(0.2)
        assert fs.distance_to_nearest_integer(-3.0) == 0.0


class TestUpperBounds:
    def make_static_weights(self):
        g = np.zeros(5, dtype=complex)
        g[2] = 1.0
        return FilterWeights(
            g_z=np.zeros(5, dtype=complex), g_plus=g, g_minus=g.copy(), k_max=2
        )

    def test_general_bound_exceeds_t1_at_sweet_spot(self, qubit, noise):
        w = self.make_static_weights()
        omega_d = 1.3 * qubit.delta
        rates = fs.decoherence_rates(w, qubit.delta, omega_d, noise)
        ub = fs.t1_upper_bound_general(w, qubit.delta, omega_d, noise)
        assert np.isfinite(ub)
        assert ub >= rates.t1

    def test_general_bound_against_arbitrary_precision(self, qubit, noise):
        import mpmath as mp

        mp.mp.dps = 40
        w = self.make_static_weights()
        omega_d = 1.3 * qubit.delta
        dist = fs.distance_to_nearest_integer(qubit.delta / omega_d)
        expected = mp.sqrt(mp.pi) / (
            2
            * mp.mpf(float(noise.a_f))
            * mp.sqrt(mp.mpf(float(noise.a_d)) * mp.mpf(float(omega_d)))
            * mp.sqrt(mp.mpf(float(dist)))
            * 2.0   # sum |g_+|^2 over both stored branches is 1 each
        )
        # our weights carry sum |g_+|^2 = 1
        expected = float(expected * 2.0)
        got = fs.t1_upper_bound_general(w, qubit.delta, omega_d, noise)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_resonant_fold_gives_infinity(self, noise):
        w = self.make_static_weights()
        assert fs.t1_upper_bound_general(w, 10.0, 10.0, noise) == np.inf

    def test_missing_channel_warns(self):
        w = self.make_static_weights()
        flux_only = fs.NoiseModel(a_f=1.0, a_d=0.0)
        with pytest.warns(UserWarning):
            assert fs.t1_upper_bound_general(w, 3.0, 10.0, flux_only) == np.inf

    def test_dss_bound_singularity(self, noise):
        delta = 3.0
        omega_d = np.pi * delta / np.sqrt(3.0)
        assert fs.t1_upper_bound_dss(delta, 0.4 * omega_d, omega_d, noise) == np.inf

    def test_dss_bound_scales_inversely_with_flux_noise(self, noise):
        ub = fs.t1_upper_bound_dss(3.0, 4.0, 10.0, noise)
        doubled = fs.NoiseModel(
            a_f=2 * noise.a_f, a_d=noise.a_d, temperature=noise.temperature
        )
        assert fs.t1_upper_bound_dss(3.0, 4.0, 10.0, doubled) == pytest.approx(
            ub / 2.0, rel=1e-12
        )

    def test_bounds_hold_on_benchmarks(self, benchmark_results):
        for name, (bench, ctx, point) in benchmark_results.items():
            report = fs.evaluate_bounds(point, ctx.noise, ctx.qubit.delta)
            assert report.margin_general >= 1.0, name
            assert report.margin_dss >= 1.0, name

    def test_bounds_hold_on_random_drives(self, context, noise):
        rng = np.random.default_rng(61)
        for _ in range(25):
            d = random_drive(rng, context)
            sol, w = solve_drive(d, context)
            rates = fs.decoherence_rates(w, sol.omega_gap, sol.omega_d, noise)
            ub = fs.t1_upper_bound_general(w, sol.omega_gap, sol.omega_d, noise)
            assert rates.t1 <= ub * (1 + 1e-9)

    def test_dimensional_rescaling(self, noise):
        # rescaling all frequencies by c rescales both bounds by 1/c^... the
        # general bound carries 1/(a_f sqrt(a_d w)) -> times 1/(c sqrt(1))
        c = 2.0
        w = self.make_static_weights()
        base = fs.t1_upper_bound_general(w, 3.0, 10.0, noise)
        scaled_noise = fs.NoiseModel(
            a_f=c * noise.a_f, a_d=noise.a_d / c, temperature=noise.temperature
        )
        scaled = fs.t1_upper_bound_general(w, c * 3.0, c * 10.0, scaled_noise)
        assert scaled == pytest.approx(base / c, rel=1e-12)


class TestSensitivity:
    def test_static_analytic_derivative(self):
        c = EffectiveCoefficients(a_coef=0.0, b_coef=4.0)
        fd = fs.quasienergy_sensitivity_fd(static_drive(), c, 3.0, "dc")
        assert fd == pytest.approx(4.0 / 5.0, abs=1e-6)

    def test_static_sweet_spot_derivative_vanishes(self):
        c = EffectiveCoefficients(a_coef=0.0, b_coef=0.0)
        fd = fs.quasienergy_sensitivity_fd(static_drive(), c, 3.0, "dc")
        assert abs(fd) < 1e-8

    def test_dc_derivative_equals_central_weight(self, context):
        rng = np.random.default_rng(67)
        for _ in range(5):
            d = random_drive(rng, context)
            sol, w = solve_drive(d, context)
            fd = fs.quasienergy_sensitivity_fd(
                d, context.coefficients, context.qubit.delta, "dc", k_max=sol.k_max
            )
            assert fd == pytest.approx(w.g_z0.real, rel=1e-5, abs=1e-8)

    def test_ac_derivative_matches_perturbative_sum(self, benchmark_results):
        for name, (bench, ctx, point) in benchmark_results.items():
            fd = fs.quasienergy_sensitivity_fd(
                point.drive,
                ctx.coefficients,
                ctx.qubit.delta,
                "ac",
                k_max=point.solution.k_max,
            )
            pert = fs.amplitude_sensitivity(point.weights, point.drive).real
            assert fd == pytest.approx(pert, rel=0.05, abs=1e-3), name

    def test_stencil_crossing_raises_on_absurd_step(self, benchmark_results):
        _, ctx, point = benchmark_results["dss-2"]
        with pytest.raises(StencilCrossingError):
            fs.quasienergy_sensitivity_fd(
                point.drive,
                ctx.coefficients,
                ctx.qubit.delta,
                "dc",
                step=2500.0,
                k_max=point.solution.k_max,
            )

    def test_which_validated(self, context):
        with pytest.raises(Exception):
            fs.quasienergy_sensitivity_fd(
                static_drive(), context.coefficients, 3.0, "sideways"
            )


class TestClassification:
    def test_biased_static_point_is_plain(self, context):
        zero = fs.Genome(p0=0.0, p_re=(0.0,) * 4, p_im=(0.0,) * 4, omega_d_frac=1.3)
        _, point = fs.evaluate_genome(zero, context)
        report = fs.classify_point(point, context)
        assert report.label == "plain"
        assert report.gz0_abs > 1e-1

    @pytest.mark.parametrize("name", ["dss-1", "dss-2", "dss-3"])
    def test_benchmarks_are_single_sweet_spots(self, benchmark_results, name):
        _, ctx, point = benchmark_results[name]
        report = fs.classify_point(point, ctx)
        assert report.label == "dss"
        assert report.gz0_abs < 1e-4
        assert report.double_dss_metric >= 0.1

    def test_undriven_sweet_spot_is_doubly_insensitive(self):
        ctx = fs.reference_context(phi_dc=np.pi)
        zero = fs.Genome(p0=0.0, p_re=(0.0,) * 4, p_im=(0.0,) * 4, omega_d_frac=1.3)
        _, point = fs.evaluate_genome(zero, ctx)
        report = fs.classify_point(point, ctx)
        assert report.label == "double_dss"
        assert report.gz0_abs < 1e-12
        assert report.double_dss_metric < 1e-12

    def test_classify_front_annotates_all_points(self, context):
        genomes = [
            fs.Genome(p0=0.0, p_re=(0.0,) * 4, p_im=(0.0,) * 4, omega_d_frac=1.3),
            fs.Genome(
                p0=0.2, p_re=(0.3, 0.0, 0.0, 0.0), p_im=(0.1, 0, 0, 0),
                omega_d_frac=1.1,
            ),
        ]
        points = []
        for g in genomes:
            objs, pt = fs.evaluate_genome(g, context)
            points.append(Individual(genome=g, objectives=objs, point=pt))
        front = ParetoFront(points=tuple(points))
        annotated = fs.classify_front(front, context, compute_fd=True)
        assert len(annotated) == 2
        for _, report in annotated:
            assert report.label in ("plain", "dss", "double_dss")
            assert np.isfinite(report.d_omega_d_phi_dc)

    def test_dc_filter_orders_flux_sensitivity(self, context):
        # points passing the sweet-spot filter have smaller measured DC
        # sensitivity than typical random drives
        rng = np.random.default_rng(71)
        sample = []
        for _ in range(20):
            d = random_drive(rng, context)
            fd = fs.quasienergy_sensitivity_fd(
                d, context.coefficients, context.qubit.delta, "dc", k_max=15
            )
            sol, w = solve_drive(d, context)
            sample.append((abs(w.g_z0), abs(fd)))
        gz, fds = np.array(sample).T
        order = np.argsort(gz)
        median = np.median(fds)
        assert np.all(fds[order[:3]] <= median)
        corr = np.corrcoef(gz, fds)[0, 1]
        assert corr > 0.9

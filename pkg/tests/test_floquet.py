import numpy as np
import pytest

import fluxspot as fs
from fluxspot.circuit import EffectiveCoefficients
from fluxspot.exceptions import (
    DegenerateGapError,
    InvalidParameterError,
    TruncationError,
)
from fluxspot.floquet import FloquetSolution, fold_to_zone

from conftest import random_drive, solve_drive


def drive(omega_d, p, phi_dc=np.pi, phi_ac=0.05):
    return fs.DriveSpec(phi_dc=phi_dc, phi_ac=phi_ac, omega_d=omega_d, p=p)


def coeffs(a=0.0, b=0.0):
    return EffectiveCoefficients(a_coef=a, b_coef=b)


class TestDriveSpec:
    def test_waveform_is_real_and_periodic(self):
        d = drive(7.0, (0.3, 0.2 - 0.4j, -0.1 + 0.5j))
        ts = np.linspace(0.0, 2 * d.period, 50)
        vals = d.waveform(ts)
        assert np.all(np.isreal(vals))
        assert d.waveform(0.3) == pytest.approx(d.waveform(0.3 + d.period), abs=1e-12)

    def test_box_validation(self):
        with pytest.raises(InvalidParameterError):
            drive(7.0, (1.2,))
        with pytest.raises(InvalidParameterError):
            drive(7.0, (-0.1,))
        with pytest.raises(InvalidParameterError):
            drive(7.0, (0.5, 1.5 + 0.1j))
        with pytest.raises(InvalidParameterError):
            drive(-1.0, (0.5,))


class TestAssemble:
    def test_undriven_blocks(self):
        d = drive(10.0, (0.0,))
        m = fs.assemble_floquet_matrix(d, coeffs(a=0.0, b=4.0), 3.0, k_max=2)
        w = np.linalg.eigvalsh(m)
        expected = sorted(
            s * 2.5 + k * 10.0 for s in (-1, 1) for k in (-2, -1, 0, 1, 2)
        )
        assert np.allclose(sorted(w), expected, atol=1e-12)

    def test_single_tone_band_structure(self):
        d = drive(10.0, (0.0, 0.5))
        a = 2.0
        m = fs.assemble_floquet_matrix(d, coeffs(a=a, b=0.0), 3.0, k_max=2)
        # exactly one off-diagonal band with entries a * p_1 * sigma_x
        block = m[2:4, 0:2]
        assert np.allclose(block, a * 0.5 * np.array([[0, 1], [1, 0]]))
        assert np.allclose(m[4:6, 0:2], 0.0)

    def test_hermitian(self, context):
        rng = np.random.default_rng(5)
        d = random_drive(rng, context)
        m = fs.assemble_floquet_matrix(
            d, context.coefficients, context.qubit.delta, k_max=12
        )
        assert np.max(np.abs(m - m.conj().T)) < 1e-12 * np.max(np.abs(m))

    def test_truncation_guard(self):
        d = drive(10.0, (0.0, 0.5, 0.5))
        with pytest.raises(TruncationError):
            fs.assemble_floquet_matrix(d, coeffs(), 3.0, k_max=1)


class TestSolve:
    def test_static_closed_form(self):
        d = drive(10.0, (0.0,))
        m = fs.assemble_floquet_matrix(d, coeffs(a=0.0, b=4.0), 3.0, k_max=3)
        sol = fs.solve_floquet(m, 10.0)
        assert sol.omega_gap == pytest.approx(5.0, abs=1e-12)
        assert sol.eps_plus == pytest.approx(2.5, abs=1e-12)
        # only the central harmonic is populated
        for h in (sol.harmonics_plus, sol.harmonics_minus):
            mags = np.linalg.norm(h, axis=1)
            assert mags[sol.k_max] == pytest.approx(1.0, abs=1e-12)
            assert np.all(np.delete(mags, sol.k_max) < 1e-12)

    def test_commuting_case(self):
        d = drive(10.0, (0.0, 0.5 + 0.3j))
        m = fs.assemble_floquet_matrix(d, coeffs(a=0.3, b=1.0), 0.0, k_max=6)
        sol = fs.solve_floquet(m, 10.0)
        assert sol.omega_gap == pytest.approx(1.0, abs=1e-10)
        # modes are transverse (flux-operator) eigenstates up to phase:
        # both vector components equal in magnitude at every harmonic
        h = sol.harmonics_plus
        assert np.allclose(np.abs(h[:, 0]), np.abs(h[:, 1]), atol=1e-12)

    def test_normalization_and_gauge(self, context):
        rng = np.random.default_rng(11)
        for _ in range(5):
            d = random_drive(rng, context)
            sol, _ = solve_drive(d, context)
            for h in (sol.harmonics_plus, sol.harmonics_minus):
                assert np.sum(np.abs(h) ** 2) == pytest.approx(1.0, abs=1e-10)
                pivot = h[sol.k_max][np.argmax(np.abs(h[sol.k_max]))]
                assert abs(pivot.imag) < 1e-10 and pivot.real >= 0
            assert -sol.omega_d / 2 < sol.eps_minus <= sol.omega_d / 2
            assert 0.0 < sol.omega_gap < sol.omega_d

    def test_degenerate_gap_raises(self):
        d = drive(3.0, (0.0,))
        m = fs.assemble_floquet_matrix(d, coeffs(a=0.0, b=0.0), 3.0, k_max=3)
        with pytest.raises(DegenerateGapError):
            fs.solve_floquet(m, 3.0)


class TestPropagatorReference:
    def test_static_limit(self):
        d = drive(10.0, (0.0,))
        ref = fs.reference_floquet_via_propagator(
            d, coeffs(a=0.0, b=4.0), 3.0, substeps=4096, k_max=3
        )
        assert ref.omega_gap == pytest.approx(5.0, abs=1e-9)

    def test_matches_matrix_solver(self, context):
        rng = np.random.default_rng(23)
        for _ in range(3):
            d = random_drive(rng, context)
            sol, _ = solve_drive(d, context)
            ref = fs.reference_floquet_via_propagator(
                d, context.coefficients, context.qubit.delta, k_max=sol.k_max
            )
            assert abs(ref.eps_plus - sol.eps_plus) < 3e-6
            assert fs.mode_infidelity(ref, sol) < 1e-10

    def test_commuting_phase_integral_oracle(self):
        # with delta = 0 everything commutes: quasienergies are the mean
        # longitudinal field and the mode phase is its running integral
        a, b = 0.4, 1.3
        d = drive(9.0, (0.2, 0.5 - 0.25j))
        ref = fs.reference_floquet_via_propagator(
            d, coeffs(a=a, b=b), 0.0, substeps=8192, k_max=8
        )
        expected_gap = fold_to_zone(b + 2 * a * 0.2, 9.0)
        assert ref.omega_gap == pytest.approx(abs(expected_gap), abs=1e-8)
        # analytic mode: e^{-i a q(t)} |+x> with q(t) = int (P - p0)
        ts = np.linspace(0.1, 0.6, 4)
        from scipy.integrate import quad

        for t in ts:
            q, _ = quad(lambda s: d.waveform(s) - 0.2, 0.0, t, limit=200)
            mode = ref.mode_at(t, "plus")[0]
            analytic = np.exp(-1j * a * q) * np.array([1.0, 1.0]) / np.sqrt(2)
            overlap = abs(np.vdot(analytic, mode))
            assert overlap == pytest.approx(1.0, abs=1e-7)

    def test_substep_floor_guard(self):
        d = drive(10.0, (0.0, 0.5))
        with pytest.raises(InvalidParameterError):
            fs.reference_floquet_via_propagator(
                d, coeffs(a=1.0, b=1.0), 3.0, substeps=100
            )


class TestFilterWeights:
    def test_static_values(self):
        d = drive(10.0, (0.0,))
        m = fs.assemble_floquet_matrix(d, coeffs(a=0.0, b=4.0), 3.0, k_max=3)
        w = fs.compute_filter_weights(fs.solve_floquet(m, 10.0))
        assert abs(w.g_z0) == pytest.approx(0.8, abs=1e-12)
        assert abs(w.g_plus[w.k_max]) == pytest.approx(0.6, abs=1e-12)
        off_center = np.delete(np.abs(w.g_z), w.k_max)
        assert np.all(off_center < 1e-12)
        assert w.parseval_sum() == pytest.approx(1.0, abs=1e-12)

    def test_commuting_case_weights(self):
        d = drive(10.0, (0.0, 0.5 + 0.3j))
        m = fs.assemble_floquet_matrix(d, coeffs(a=0.3, b=1.0), 0.0, k_max=6)
        w = fs.compute_filter_weights(fs.solve_floquet(m, 10.0))
        assert abs(w.g_z0) == pytest.approx(1.0, abs=1e-10)
        assert np.all(np.delete(np.abs(w.g_z), w.k_max) < 1e-10)
        assert np.all(np.abs(w.g_plus) < 1e-10)
        assert np.all(np.abs(w.g_minus) < 1e-10)

    def test_static_sweet_spot_center_weight_vanishes(self):
        d = drive(10.0, (0.0,))
        m = fs.assemble_floquet_matrix(d, coeffs(a=0.0, b=0.0), 3.0, k_max=3)
        w = fs.compute_filter_weights(fs.solve_floquet(m, 10.0))
        assert abs(w.g_z0) < 1e-14

    def test_fft_oracle_agreement(self, context):
        rng = np.random.default_rng(37)
        for _ in range(4):
            d = random_drive(rng, context)
            sol, w = solve_drive(d, context)
            w_fft = fs.filter_weights_time_grid(sol)
            assert np.max(np.abs(w.g_z - w_fft.g_z)) < 1e-9
            assert np.max(np.abs(w.g_plus - w_fft.g_plus)) < 1e-9
            assert np.max(np.abs(w.g_minus - w_fft.g_minus)) < 1e-9

    def test_parseval_and_cross_symmetry(self, context):
        rng = np.random.default_rng(41)
        for _ in range(50):
            d = random_drive(rng, context)
            _, w = solve_drive(d, context)
            assert w.parseval_sum() == pytest.approx(1.0, abs=1e-8)
            assert np.max(np.abs(np.abs(w.g_plus) - np.abs(w.g_minus[::-1]))) < 1e-10

    def test_gauge_invariance(self, context):
        rng = np.random.default_rng(43)
        d = random_drive(rng, context)
        sol, w = solve_drive(d, context)
        rotated = FloquetSolution(
            eps_plus=sol.eps_plus,
            eps_minus=sol.eps_minus,
            omega_gap=sol.omega_gap,
            harmonics_plus=sol.harmonics_plus * np.exp(0.7j),
            harmonics_minus=sol.harmonics_minus * np.exp(-1.1j),
            k_max=sol.k_max,
            omega_d=sol.omega_d,
        )
        w_rot = fs.compute_filter_weights(rotated)
        assert np.allclose(np.abs(w.g_z), np.abs(w_rot.g_z), atol=1e-12)
        assert np.allclose(np.abs(w.g_plus), np.abs(w_rot.g_plus), atol=1e-12)
        # the dephasing family is phase-free, not only in magnitude
        assert np.allclose(w.g_z, w_rot.g_z, atol=1e-12)


def alternative_representative(sol):
    """Fold the + branch down one zone and relabel the pair.

    Harmonic arrays are padded by one slot so the re-indexing loses nothing.
    """
    pad = np.zeros((1, 2), dtype=complex)
    plus = np.concatenate([pad, sol.harmonics_plus, pad])
    minus = np.concatenate([pad, sol.harmonics_minus, pad])
    shifted = np.zeros_like(plus)
    shifted[:-1] = plus[1:]   # harmonics re-indexed by -1
    return FloquetSolution(
        eps_plus=sol.eps_minus,
        eps_minus=sol.eps_plus - sol.omega_d,
        omega_gap=sol.omega_d - sol.omega_gap,
        harmonics_plus=minus,
        harmonics_minus=shifted,
        k_max=sol.k_max + 1,
        omega_d=sol.omega_d,
    )


class TestRepresentationInvariance:
    def test_fold_and_swap_leaves_rates_invariant(self, context, noise):
        rng = np.random.default_rng(47)
        for _ in range(5):
            d = random_drive(rng, context)
            sol, w = solve_drive(d, context)
            rates = fs.decoherence_rates(w, sol.omega_gap, sol.omega_d, noise)
            alt = alternative_representative(sol)
            w_alt = fs.compute_filter_weights(alt)
            rates_alt = fs.decoherence_rates(
                w_alt, alt.omega_gap, alt.omega_d, noise
            )
            assert rates_alt.gamma_1 == pytest.approx(rates.gamma_1, rel=1e-9)
            assert rates_alt.gamma_z == pytest.approx(rates.gamma_z, rel=1e-9)
            ref = np.sort(np.abs(w.g_z))[::-1]
            alt = np.sort(np.abs(w_alt.g_z))[::-1]
            assert np.allclose(alt[: ref.size], ref, atol=1e-9)
            assert np.all(alt[ref.size :] < 1e-12)

    def test_relaxation_rate_from_single_branch(self, context, noise):
        # gamma_1 can be written with the + weights alone against the
        # symmetrized spectrum; checks the branch-exchange symmetry
        rng = np.random.default_rng(53)
        d = random_drive(rng, context)
        sol, w = solve_drive(d, context)
        rates = fs.decoherence_rates(w, sol.omega_gap, sol.omega_d, noise)
        args = w.ks * sol.omega_d - sol.omega_gap
        s_sym = fs.spectral_density(noise, args) + fs.spectral_density(noise, -args)
        gamma_1 = float(np.sum(np.abs(w.g_plus) ** 2 * s_sym))
        assert gamma_1 == pytest.approx(rates.gamma_1, rel=1e-9)


class TestTruncationConvergence:
    def test_infidelity_below_floor_at_three_n(self, context):
        # benchmark-amplitude modulation; the strongest box drives need
        # harmonic headroom beyond 3n (see the truncation-study command)
        rng = np.random.default_rng(59)
        coeffs_ctx = context.coefficients
        scale = 0.35
        for n in (1, 2, 3):
            p = [complex(scale * rng.uniform(0, 1), 0.0)]
            p += [
                complex(scale * rng.uniform(-1, 1), scale * rng.uniform(-1, 1))
                for _ in range(n)
            ]
            d = fs.DriveSpec(
                phi_dc=context.phi_dc,
                phi_ac=context.phi_ac,
                omega_d=1.1 * context.omega_ge,
                p=tuple(p),
            )
            ref = fs.reference_floquet_via_propagator(
                d, coeffs_ctx, context.qubit.delta, k_max=3 * n + 2
            )
            infid = []
            for k_max in range(n, 3 * n + 1):
                m = fs.assemble_floquet_matrix(
                    d, coeffs_ctx, context.qubit.delta, k_max
                )
                sol = fs.solve_floquet(m, d.omega_d)
                infid.append(fs.mode_infidelity(ref, sol))
            assert infid[-1] < 1e-10
            assert infid[0] > infid[-1]

"""Correlation-kernel checks built around closed-form convolution oracles.

The weighted band convolutions have exact Gaussian references: with
a = exp(-p^2) the plain, gradient, and bilaplacian weights produce
(pi/2)^{3/2} e^{-s^2/2} times 1, pi^2 (3 - s^2), and
pi^4 (s^4 + 2 s^2 + 15). The factorized kernels are cross-checked
against the Fourier-split identity F(r) = G(r) - lowpass(G)(r) and a
Plancherel balance between the momentum band and the position tail.
Scaling laws in the box scale are measured on the fixed-cutoff-fraction
sweep; lattice diagnostics are held to their exact matrix inequalities
rather than to lattice-resolution-limited values.
"""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import simpson

from gpregime.errors import (
    InvalidParameterError,
    InvalidRegimeError,
    ResourceLimitError,
    SolverFailureError,
)
from gpregime.gp import minimize_gp
from gpregime.kernels import (
    _band_convolve,
    _moment_lookup,
    build_G,
    build_eta_H,
    build_gaussian_lowpass,
    build_hN,
    build_nu_H,
    cross_gradient_hs,
    default_sweep_tuples,
    eta_norms,
    eta_power_bound,
    hyperbolic,
    make_cutoffs,
    nu_norms,
    series_pointwise,
    sweep_kernels,
)
from gpregime.potentials import make_square_well, make_trap
from gpregime.radial import radial_fourier_inverse
from gpregime.scattering import solve_neumann


@pytest.fixture(scope="module")
def well():
    return make_square_well(6.0, 1.0, 512)


@pytest.fixture(scope="module")
def zero_well():
    return make_square_well(0.0, 1.0, 512)


@pytest.fixture(scope="module")
def state():
    return minimize_gp(make_trap("harmonic", 800, 8.0), 0.0)


@pytest.fixture(scope="module")
def sol64(well):
    return solve_neumann(well, 0.5, 64)


@pytest.fixture(scope="module")
def G64(sol64):
    return build_G(sol64)


@pytest.fixture(scope="module")
def cuts():
    return make_cutoffs(0.5, 4.0, 2.0)


@pytest.fixture(scope="module")
def eta64(G64, state, cuts):
    return build_eta_H(G64, state, cuts)


@pytest.fixture(scope="module")
def eta64_report(eta64):
    return eta_norms(eta64)


@pytest.fixture(scope="module")
def sweep(well, state):
    return sweep_kernels(well, state, alpha=4.0, beta=2.0)


def loglog_slope(ells, vals):
    return np.polyfit(np.log(np.asarray(ells)), np.log(np.asarray(vals)), 1)[0]


def slope_of(sweep_report, key):
    return loglog_slope(sweep_report.ells, sweep_report.series(key))


class TestCutoffs:
    def test_indicators_partition_the_line(self, cuts):
        p = np.linspace(0.0, 3.0 * cuts.cutoff_momentum, 1001)
        assert np.all(cuts.chi_H(p) + cuts.chi_Hc(p) == 1.0)
        # the high band owns its endpoint
        assert cuts.chi_H(cuts.cutoff_momentum) == 1.0
        assert cuts.chi_Hc(cuts.cutoff_momentum) == 0.0

    def test_cutoff_momentum_scale(self, cuts):
        assert cuts.cutoff_momentum == pytest.approx(0.5 ** -4.0, rel=1e-12)

    def test_lowpass_mass_is_one(self):
        g = build_gaussian_lowpass(0.5, 2.0)
        assert abs(g.l1_quad - 1.0) < 1e-8

    def test_lowpass_l2_matches_closed_form(self):
        g = build_gaussian_lowpass(0.5, 2.0)
        assert g.l2_quad == pytest.approx(g.l2_closed, rel=1e-6)
        assert g.l2_closed == pytest.approx(
            np.pi ** 0.75 * 2.0 ** -0.75 * g.sigma ** -1.5, rel=1e-12)

    def test_lowpass_l2_scaling_in_box_scale(self):
        ells = (0.5, 0.25, 0.125)
        vals = [build_gaussian_lowpass(ell, 2.0).l2_quad for ell in ells]
        assert loglog_slope(ells, vals) == pytest.approx(-3.0, abs=0.05)

    def test_invalid_parameters_raise(self):
        with pytest.raises(InvalidParameterError):
            make_cutoffs(1.2, 4.0, 2.0)
        with pytest.raises(InvalidParameterError):
            make_cutoffs(0.5, 4.0, 0.0)
        with pytest.raises(InvalidParameterError):
            make_cutoffs(0.5, 2.0, 3.0)


class TestCorrelationG:
    def test_hat_at_zero_is_scaled_mass(self, G64, sol64):
        assert G64.hat_at_zero == pytest.approx(-sol64.int_w / 64.0 ** 2,
                                                rel=1e-12)

    def test_position_values_rescale_the_ball_solution(self, G64, sol64):
        r = np.array([0.05, 0.1, 0.2, 0.4])
        assert np.allclose(G64.radial(r), -64.0 * sol64.w_ell(64.0 * r),
                           rtol=1e-12)

    def test_quadratic_sup_is_scale_free(self, well, G64):
        other = build_G(solve_neumann(well, 0.5, 128))
        assert other.sup_p2 == pytest.approx(G64.sup_p2, rel=0.01)

    def test_transform_certificate(self, G64):
        assert G64.refinement_defect < 5e-3

    def test_zero_potential_vanishes(self, zero_well, state, cuts):
        Gz = build_G(solve_neumann(zero_well, 0.5, 64))
        assert Gz.hat_at_zero == 0.0
        assert np.all(Gz.radial(np.linspace(0.0, 1.0, 11)) == 0.0)


class TestBandConvolve:
    def test_gaussian_closed_forms(self):
        p = np.linspace(0.0, 8.0, 1601)
        a = np.exp(-p ** 2)
        s = np.linspace(0.0, 5.0, 201)
        g = (np.pi / 2.0) ** 1.5 * np.exp(-s ** 2 / 2.0)
        refs = {
            "plain": g,
            "grad": np.pi ** 2 * (3.0 - s ** 2) * g,
            "lap": np.pi ** 4 * (s ** 4 + 2.0 * s ** 2 + 15.0) * g,
        }
        for kind, ref in refs.items():
            got = _band_convolve(p, a, a, s, kind)
            err = np.max(np.abs(got - ref)) / np.max(np.abs(ref))
            assert err < 1e-4, f"{kind}: {err:.2e}"

    def test_sharp_band_is_continuous_at_zero_separation(self, eta64):
        # the clipped edge layer once produced an O(h) jump here
        s = np.array([0.0, 1e-3, 2e-3, 5e-3])
        vals = _band_convolve(eta64.p_nodes, eta64.fhat, eta64.fhat, s,
                              "plain")
        assert np.max(np.abs(vals[1:] - vals[0])) < 2e-3 * abs(vals[0])

    def test_unknown_weight_rejected(self, eta64):
        with pytest.raises(InvalidParameterError):
            _band_convolve(eta64.p_nodes, eta64.fhat, eta64.fhat,
                           np.array([0.5]), "cubic")

    @settings(max_examples=40, deadline=None)
    @given(
        seed=st.integers(0, 2 ** 31 - 1),
        power=st.sampled_from([1, 3]),
    )
    def test_moment_lookup_matches_dense_quadrature(self, seed, power):
        rng = np.random.default_rng(seed)
        nodes = np.linspace(0.3, 2.7, 25)
        vals = rng.normal(size=nodes.size)
        lookup = _moment_lookup(nodes, vals, power)
        x = rng.uniform(0.3, 2.7, size=5)
        fine = np.linspace(nodes[0], nodes[-1], 20001)
        dense = np.interp(fine, nodes, vals) * fine ** power
        mass = np.cumsum(np.concatenate([[0.0], np.diff(fine) *
                                         (dense[1:] + dense[:-1]) / 2.0]))
        want = np.interp(x, fine, mass)
        assert np.allclose(lookup(x), want, atol=1e-6)


class TestFactorized:
    def test_split_identity_recovers_position_values(self, G64, eta64, cuts):
        # highpass factor plus lowpass remainder must reproduce G
        P = cuts.cutoff_momentum
        p = np.linspace(0.0, P, 4097)
        r = np.array([0.05, 0.1, 0.2, 0.3, 0.45])
        low = radial_fourier_inverse(G64.hat(p), p[1] - p[0], r)
        split = eta64.factor(r) + low
        direct = G64.radial(r)
        scale = np.max(np.abs(direct))
        assert np.max(np.abs(split - direct)) < 1e-5 * scale

    def test_plancherel_balance(self, eta64):
        h = eta64.p_nodes[1] - eta64.p_nodes[0]
        band = 4.0 * np.pi * simpson(eta64.fhat ** 2 * eta64.p_nodes ** 2,
                                     dx=h)
        r = np.linspace(0.0, 3.0, 6001)
        F = eta64.factor(r)
        pos = 4.0 * np.pi * simpson(F ** 2 * r ** 2, dx=r[1] - r[0])
        assert pos == pytest.approx(band, rel=5e-2)

    def test_band_vanishes_below_cutoff(self, eta64, G64, cuts):
        P = cuts.cutoff_momentum
        below = np.array([0.0, 0.3 * P, 0.9 * P])
        assert np.all(eta64.hat_factor(below) == 0.0)
        # exact at nodes, interpolation-limited between them
        nodes = eta64.p_nodes[[0, 10, 200]]
        assert np.allclose(eta64.hat_factor(nodes), G64.hat(nodes),
                           rtol=1e-12)
        mid = 0.5 * (eta64.p_nodes[10] + eta64.p_nodes[11])
        assert float(eta64.hat_factor(mid)) == pytest.approx(
            float(G64.hat(np.array([mid]))[0]), rel=1e-3)

    def test_value_factorizes(self, eta64, state):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(5, 3))
        y = rng.normal(size=(5, 3))
        d = np.linalg.norm(x - y, axis=-1)
        rx = np.linalg.norm(x, axis=-1)
        ry = np.linalg.norm(y, axis=-1)
        want = (eta64.factor(d) * eta64.weight("left", rx)
                * eta64.weight("right", ry))
        assert np.allclose(eta64.value(x, y), want, rtol=1e-12)

    def test_field_kernel_left_weight_is_flat(self, G64, state, cuts):
        nu = build_nu_H(G64, state, cuts)
        r = np.linspace(0.0, 5.0, 11)
        assert np.all(nu.weight("left", r) == 1.0)
        assert np.allclose(nu.weight("right", r),
                           np.interp(r, state.grid, state.phi,
                                     right=0.0), rtol=1e-12)


class TestEtaNorms:
    def test_zero_potential_gives_zero_kernel(self, zero_well, state, cuts):
        Gz = build_G(solve_neumann(zero_well, 0.5, 64))
        rep = eta_norms(build_eta_H(Gz, state, cuts))
        assert rep.l2 == 0.0
        assert rep.grad_l2 == 0.0
        assert rep.row_sup == 0.0
        assert rep.pointwise_ratio == 0.0

    def test_l2_scaling_in_box_scale(self, sweep):
        assert slope_of(sweep, "eta_l2") == pytest.approx(2.0, abs=0.2)

    def test_gradient_norm_tracks_sqrt_density(self, sweep):
        vals = np.array([row["eta_grad_l2"] / np.sqrt(row["N"])
                         for row in sweep.rows])
        assert vals.max() / vals.min() < 1.2

    def test_gradient_stability_at_fixed_box_scale(self, well, state):
        vals = []
        for N in (50, 100):
            sol = solve_neumann(well, 0.7, N)
            eta = build_eta_H(build_G(sol), state,
                              make_cutoffs(0.7, 4.0, 2.0))
            vals.append(eta_norms(eta).grad_l2 / np.sqrt(N))
        assert max(vals) / min(vals) < 1.2

    def test_l2_below_row_sup(self, eta64_report):
        assert eta64_report.l2 <= eta64_report.row_sup * (1.0 + 1e-9)

    def test_pointwise_ratio_is_scaled_factor_sup(self, eta64,
                                                  eta64_report):
        assert eta64_report.pointwise_ratio == pytest.approx(
            eta64_report.f_sup / eta64.N, rel=1e-12)

    def test_certificate_rejects_coarse_band(self, G64, state, cuts):
        coarse = build_eta_H(G64, state, cuts, n_momentum=64)
        with pytest.raises(SolverFailureError):
            eta_norms(coarse)

    def test_band_needs_a_minimum_of_intervals(self, G64, state, cuts):
        with pytest.raises(InvalidParameterError):
            build_eta_H(G64, state, cuts, n_momentum=4)

    def test_certificate_within_tolerance(self, eta64_report):
        assert eta64_report.defect < 5e-3


class TestNuNorms:
    def test_column_ratio_equals_l2(self, G64, state, cuts):
        rep = nu_norms(build_nu_H(G64, state, cuts))
        assert rep.col_sup_ratio == rep.l2
        assert rep.l2 > 0.0

    def test_slice_sup_sits_in_the_band(self, G64, state, cuts):
        rep = nu_norms(build_nu_H(G64, state, cuts))
        assert rep.argmax_p >= cuts.cutoff_momentum
        assert rep.sup_p2_slice > 0.0

    def test_l2_scaling_in_box_scale(self, sweep):
        assert slope_of(sweep, "nu_l2") == pytest.approx(2.0, abs=0.2)

    def test_zero_potential_gives_zero_kernel(self, zero_well, state, cuts):
        Gz = build_G(solve_neumann(zero_well, 0.5, 64))
        rep = nu_norms(build_nu_H(Gz, state, cuts))
        assert rep.l2 == 0.0
        assert rep.row_sup == 0.0


class TestCubicKernel:
    def test_concentration_limit(self, well, state):
        gaps = [build_hN(solve_neumann(well, 0.5, N), state).limit_gap
                for N in (50, 100, 200)]
        assert gaps[1] < 0.5 * gaps[0]
        assert gaps[2] < 0.5 * gaps[1]

    def test_sup_below_product_bound(self, sol64, state):
        rep = build_hN(sol64, state)
        assert rep.sup <= rep.young_bound * (1.0 + 1e-9)

    def test_nonnegative_interaction_mass(self, sol64, state):
        # V >= 0 and w >= 0 make the signed and absolute masses agree
        rep = build_hN(sol64, state)
        assert rep.int_kernel == pytest.approx(rep.kernel_l1, rel=1e-12)

    def test_zero_potential_vanishes(self, zero_well, state):
        rep = build_hN(solve_neumann(zero_well, 0.5, 64), state)
        assert rep.l2 == 0.0
        assert rep.sup == 0.0


class TestHyperbolic:
    def test_series_norm_recomputes(self, eta64_report, eta64):
        hk = hyperbolic(eta64)
        l2 = eta64_report.l2
        k = np.arange(1, hk.series_depth + 1)
        from scipy.special import factorial
        want_p = np.sum(l2 ** (2 * k + 1) / factorial(2 * k + 1))
        want_r = np.sum(l2 ** (2 * k) / factorial(2 * k))
        assert hk.p_norm == pytest.approx(want_p, rel=1e-12)
        assert hk.r_norm == pytest.approx(want_r, rel=1e-12)

    def test_sinh_is_base_plus_remainder(self, eta64):
        hk = hyperbolic(eta64)
        assert hk.sinh_k.powers[0] == 1
        assert hk.sinh_k.coefficients[0] == 1.0
        assert tuple(hk.sinh_k.powers[1:]) == tuple(hk.p_k.powers)
        assert np.allclose(hk.sinh_k.coefficients[1:], hk.p_k.coefficients)

    def test_depth_shrinks_with_loose_tolerance(self, eta64):
        tight = hyperbolic(eta64, tol=1e-14)
        loose = hyperbolic(eta64, tol=1e-4)
        assert loose.series_depth <= tight.series_depth
        assert tight.tail_bound < 1e-14

    def test_remainder_scaling_exceeds_base(self, sweep):
        # cubic-and-higher tails fall at least as fast as the base norm
        assert slope_of(sweep, "p_norm") >= 4.0 - 0.3
        assert slope_of(sweep, "r_norm") >= 4.0 - 0.3
        assert slope_of(sweep, "p_norm") == pytest.approx(6.0, abs=0.2)
        assert slope_of(sweep, "r_norm") == pytest.approx(4.0, abs=0.2)

    def test_gradient_chain_is_contractive(self, eta64):
        hk = hyperbolic(eta64)
        assert 0.0 < hk.grad_p_norm < hk.grad_eta_l2
        assert np.isfinite(hk.lap_p_norm)
        assert hk.lap_p_norm > 0.0

    def test_divergent_series_refused(self, eta64):
        big = dataclasses.replace(eta64, fhat=eta64.fhat * 100.0)
        with pytest.raises(InvalidRegimeError):
            hyperbolic(big)

    def test_zero_kernel_trivial(self, zero_well, state, cuts):
        Gz = build_G(solve_neumann(zero_well, 0.5, 64))
        hk = hyperbolic(build_eta_H(Gz, state, cuts))
        assert hk.p_norm == 0.0
        assert hk.r_norm == 0.0
        assert hk.series_depth == 0


class TestLatticeBounds:
    def test_power_ratio_obeys_submultiplicativity(self, well, state):
        sol = solve_neumann(well, 0.7, 50)
        eta = build_eta_H(build_G(sol), state, make_cutoffs(0.7, 2.0, 1.0))
        for n in (2, 3):
            rep = eta_power_bound(eta, n)
            assert rep.max_ratio <= 1.0 + 1e-9
            assert not rep.trivial

    def test_power_bound_deterministic(self, well, state):
        sol = solve_neumann(well, 0.7, 50)
        eta = build_eta_H(build_G(sol), state, make_cutoffs(0.7, 2.0, 1.0))
        a = eta_power_bound(eta, 2, seed=7)
        b = eta_power_bound(eta, 2, seed=7)
        assert a.max_ratio == b.max_ratio

    def test_zero_kernel_flags_trivial(self, zero_well, state, cuts):
        Gz = build_G(solve_neumann(zero_well, 0.5, 64))
        eta = build_eta_H(Gz, state, cuts)
        assert eta_power_bound(eta, 2).trivial

    def test_lattice_budget_enforced(self, eta64):
        with pytest.raises(ResourceLimitError):
            eta_power_bound(eta64, 2, max_points=10)

    def test_power_needs_at_least_two(self, eta64):
        with pytest.raises(InvalidParameterError):
            eta_power_bound(eta64, 1)

    def test_series_pointwise_stays_small(self, eta64):
        rep = series_pointwise(hyperbolic(eta64))
        assert not rep.trivial
        assert 0.0 < rep.max_ratio < 1.0

    def test_series_pointwise_trivial_at_zero(self, zero_well, state, cuts):
        Gz = build_G(solve_neumann(zero_well, 0.5, 64))
        rep = series_pointwise(hyperbolic(build_eta_H(Gz, state, cuts)))
        assert rep.trivial
        assert rep.max_ratio == 0.0


class TestCrossGradient:
    def test_zero_kernel_gives_zero(self, zero_well, state, cuts):
        Gz = build_G(solve_neumann(zero_well, 0.5, 64))
        rep = cross_gradient_hs(build_eta_H(Gz, state, cuts))
        assert rep.value == 0.0

    def test_finite_and_positive(self, well, state):
        sol = solve_neumann(well, 0.75, 50)
        eta = build_eta_H(build_G(sol), state, make_cutoffs(0.75, 1.0, 0.5))
        rep = cross_gradient_hs(eta)
        assert np.isfinite(rep.value)
        assert rep.value > 0.0
        assert rep.lattice_points > 1000

    def test_decay_in_box_scale(self, well, state):
        ells = (0.75, 0.625, 0.5)
        vals = []
        for ell in ells:
            sol = solve_neumann(well, ell, 50)
            eta = build_eta_H(build_G(sol), state,
                              make_cutoffs(ell, 1.0, 0.5))
            vals.append(cross_gradient_hs(eta).value)
        # lattice bias cancels partially in ratios; the trend must beat
        # the base rate minus a resolution allowance
        assert loglog_slope(ells, vals) >= 1.0 - 0.5

    def test_adjacent_resolutions_agree_coarsely(self, well, state):
        sol = solve_neumann(well, 0.75, 50)
        eta = build_eta_H(build_G(sol), state, make_cutoffs(0.75, 1.0, 0.5))
        a = cross_gradient_hs(eta, spacing=0.24).value
        b = cross_gradient_hs(eta, spacing=0.22).value
        assert max(a, b) / min(a, b) < 1.6


class TestSweep:
    def test_default_tuples_pin_the_cutoff_fraction(self):
        tuples = default_sweep_tuples(4.0)
        assert tuples == ((0.5, 64), (0.25, 1024), (0.125, 16384))
        for ell, N in tuples:
            qc = ell ** -4.0 / N
            assert 0.2 <= qc <= 0.3

    def test_rows_carry_the_norm_inventory(self, sweep):
        keys = {"ell", "N", "eta_l2", "eta_grad_l2", "nu_l2", "p_norm",
                "r_norm", "gauss_l1", "gauss_l2", "hn_l2", "eta_defect",
                "nu_defect", "series_depth"}
        for row in sweep.rows:
            assert keys <= set(row)

    def test_certificates_hold_across_the_sweep(self, sweep):
        for row in sweep.rows:
            assert row["eta_defect"] < 5e-3
            assert row["nu_defect"] < 5e-3
            assert abs(row["gauss_l1"] - 1.0) < 1e-8

    def test_lowpass_l2_scaling(self, sweep):
        assert slope_of(sweep, "gauss_l2") == pytest.approx(-3.0, abs=0.05)

    def test_series_rejects_unknown_key(self, sweep):
        with pytest.raises(InvalidParameterError):
            sweep.series("not_a_key")

"""Scattering and Neumann-ball checks against square-well closed forms.

The square well V0 on [0, R] is fully solvable: with kappa = sqrt(V0/2) the
zero-energy solution is proportional to sinh(kappa r) inside the well,
a0 = R - tanh(kappa R)/kappa, and the Neumann eigenvalue solves an explicit
transcendental equation. Those closed forms are the oracles here; nothing
below trusts the solver to certify itself.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from gpregime.errors import (
    InvalidDomainError,
    InvalidParameterError,
)
from gpregime.potentials import make_square_well
from gpregime.scattering import (
    ball_indicator_hat,
    fourier_w,
    fourier_w_ode,
    rescale,
    solve_neumann,
    solve_zero_energy,
    verify_lemma_scattering,
)

A0_EXACT = 1.0 - np.tanh(1.0)  # square well V0 = 2, R = 1


@pytest.fixture(scope="module")
def well():
    return make_square_well(2.0, 1.0, 2048)


@pytest.fixture(scope="module")
def ref(well):
    return solve_zero_energy(well)


@pytest.fixture(scope="module")
def neu100(well):
    return solve_neumann(well, 0.5, 100)


@pytest.fixture(scope="module")
def neu_sweep(well):
    return {N: solve_neumann(well, 0.5, N) for N in (50, 100, 200)}


def exact_neumann_lambda(V0, R, L):
    """Root of the square-well Neumann condition, independent of the solver."""

    def mismatch(lam):
        kt = np.sqrt(V0 / 2.0 - lam)
        uR, vR = np.sinh(kt * R), kt * np.cosh(kt * R)
        om = np.sqrt(lam)
        d = L - R
        uL = uR * np.cos(om * d) + vR * np.sin(om * d) / om
        vL = -uR * om * np.sin(om * d) + vR * np.cos(om * d)
        return vL - uL / L

    a0 = R - np.tanh(np.sqrt(V0 / 2.0) * R) / np.sqrt(V0 / 2.0)
    guess = 3.0 * a0 / L ** 3
    return brentq(mismatch, 0.2 * guess, 5.0 * guess, xtol=1e-300, rtol=1e-15)


class TestZeroEnergy:
    def test_scattering_length_closed_form(self, ref):
        assert abs(ref.a0 - A0_EXACT) / A0_EXACT < 1e-9

    def test_integral_identity_8pi_a0(self, ref):
        assert abs(ref.a0_from_integral - ref.a0) / ref.a0 < 1e-8

    def test_interior_profile_closed_form(self, ref):
        inside = ref.r_grid <= 1.0
        r = ref.r_grid[inside]
        exact = np.sinh(r) / np.cosh(1.0)
        assert np.max(np.abs(ref.u[inside] - exact)) < 1e-9

    def test_tail_is_linear_with_unit_slope(self, ref):
        tail = ref.r_grid >= 5.0
        assert np.max(np.abs(ref.u[tail] - (ref.r_grid[tail] - ref.a0))) < 1e-9

    def test_f_bounded_and_monotone(self, ref):
        assert np.all(ref.f >= -1e-12)
        assert np.all(ref.f <= 1.0 + 1e-12)
        assert np.all(np.diff(ref.f) >= -1e-10)

    def test_zero_potential_is_trivial(self):
        sol = solve_zero_energy(make_square_well(0.0, 1.0, 64))
        assert abs(sol.a0) < 1e-12
        assert np.allclose(sol.f, 1.0, atol=1e-12)
        assert sol.int_Vf == 0.0

    def test_domain_validation(self, well):
        with pytest.raises(InvalidDomainError):
            solve_zero_energy(well, r_max=5.0)
        with pytest.raises(InvalidParameterError):
            solve_zero_energy(well, n_pts=100)

    @settings(max_examples=10, deadline=None)
    @given(v0=st.floats(0.1, 30.0), radius=st.floats(0.3, 2.0))
    def test_closed_form_scattering_length_family(self, v0, radius):
        kappa = np.sqrt(v0 / 2.0)
        expected = radius - np.tanh(kappa * radius) / kappa
        sol = solve_zero_energy(make_square_well(v0, radius, 512), n_pts=2048)
        assert abs(sol.a0 - expected) <= 1e-8 * max(expected, 1e-6)
        assert -1e-12 <= sol.f.min() and sol.f.max() <= 1.0 + 1e-12
        assert sol.a0 < radius


class TestNeumann:
    def test_eigenvalue_against_transcendental_root(self, neu100):
        exact = exact_neumann_lambda(2.0, 1.0, 50.0)
        assert abs(neu100.lambda_ell - exact) / exact < 1e-8

    def test_eigenvalue_rate(self, neu_sweep):
        # lam L^3 / (3 a0) -> 1 from above like 1 + C a0 / L
        devs = {}
        for N, sol in neu_sweep.items():
            ratio = sol.lambda_ell * sol.radius ** 3 / (3.0 * A0_EXACT)
            devs[N] = ratio - 1.0
            assert 0.0 < devs[N] < 0.05
        slope = np.polyfit(np.log([25.0, 50.0, 100.0]),
                           np.log([devs[50], devs[100], devs[200]]), 1)[0]
        assert abs(slope + 1.0) < 0.1

    def test_lambda_monotone_in_radius(self, neu_sweep):
        lams = [neu_sweep[N].lambda_ell for N in (50, 100, 200)]
        assert lams[0] > lams[1] > lams[2] > 0

    def test_ground_state_profile(self, neu100):
        f = neu100.f
        assert f[-1] == 1.0
        assert np.all(f >= -1e-12) and np.all(f <= 1.0 + 1e-12)
        assert np.all(np.diff(f) >= -1e-10)
        assert np.all(neu100.w >= -1e-12) and np.all(neu100.w <= 1.0 + 1e-12)

    def test_profiles_extend_correctly(self, neu100):
        L = neu100.radius
        assert neu100.f_ell(L + 1.0) == 1.0
        assert neu100.w_ell(L + 1.0) == 0.0
        assert abs(neu100.f_ell(L / 2) - np.interp(L / 2, neu100.r_grid, neu100.f)) < 1e-14

    def test_grid_convergence_is_cauchy(self, well, neu100):
        finer = solve_neumann(well, 0.5, 100, n_pts=8192)
        assert abs(finer.lambda_ell - neu100.lambda_ell) / neu100.lambda_ell < 1e-6
        ref_a = solve_zero_energy(well, n_pts=4096).a0
        fin_a = solve_zero_energy(well, n_pts=8192).a0
        assert abs(fin_a - ref_a) / ref_a < 1e-6

    def test_zero_potential_neumann(self):
        sol = solve_neumann(make_square_well(0.0, 1.0, 64), 0.5, 40)
        assert sol.lambda_ell == 0.0
        assert np.allclose(sol.f, 1.0, atol=1e-14)
        assert np.allclose(sol.w, 0.0, atol=1e-14)

    def test_parameter_validation(self, well):
        with pytest.raises(InvalidParameterError):
            solve_neumann(well, 1.2, 100)
        with pytest.raises(InvalidParameterError):
            solve_neumann(well, 0.5, 100, n_pts=64)
        with pytest.raises(InvalidDomainError):
            solve_neumann(well, 0.5, 1)


class TestRescale:
    def test_weak_residual_below_eigenvalue_scale(self, neu100):
        res = rescale(neu100)
        lam_sc = 100.0 ** 2 * neu100.lambda_ell
        assert res.lambda_scaled == pytest.approx(lam_sc)
        assert res.residual < 1e-6 * lam_sc

    def test_rescaled_profile_and_indicator(self, neu100):
        res = rescale(neu100)
        ell = neu100.ell
        assert res.f_N_ell(ell) == pytest.approx(1.0, abs=1e-12)
        assert res.f_N_ell(2 * ell) == 1.0
        assert res.chi_ell(0.99 * ell) == 1.0
        assert res.chi_ell(1.01 * ell) == 0.0


class TestFourier:
    def test_ball_indicator_closed_form_limits(self):
        L = 2.0
        vol = 4.0 * np.pi * L ** 3 / 3.0
        assert ball_indicator_hat(np.array([1e-9]), L)[0] == pytest.approx(vol)
        p = np.array([0.37, 1.3])
        x = 2 * np.pi * p * L
        expected = (np.sin(x) - x * np.cos(x)) / (2 * np.pi ** 2 * p ** 3)
        assert np.allclose(ball_indicator_hat(p, L), expected, rtol=1e-13)

    def test_report_consistency(self, neu100):
        rep = fourier_w(neu100)
        assert rep.at_zero == pytest.approx(neu100.int_w, rel=1e-10)
        assert rep.sup_p2 > 0 and np.isfinite(rep.sup_p2)
        assert rep.refinement_defect < 1e-5
        # the transform of a nonnegative integrable w starts positive
        assert rep.values[0] > 0

    def test_direct_and_equation_routes_agree(self, neu100):
        p = np.geomspace(0.05, 5.0, 48)
        direct = fourier_w(neu100, p).values
        via_ode = fourier_w_ode(neu100, p)
        scale = np.max(np.abs(direct))
        assert np.max(np.abs(direct - via_ode)) < 1e-6 * scale

    def test_momentum_grid_validation(self, neu100):
        with pytest.raises(InvalidParameterError):
            fourier_w(neu100, np.linspace(1.0, 2.0, 32))
        with pytest.raises(InvalidParameterError):
            fourier_w_ode(neu100, np.array([1e-5]))


class TestLemmaReport:
    def test_items_within_expected_ranges(self, ref, neu_sweep):
        rep = verify_lemma_scattering(neu_sweep[100], ref)
        assert rep.i_deviation < 0.02
        assert 0.0 < rep.ii_weighted < 50.0
        assert rep.iii_sup_w < 2.0
        assert rep.iii_sup_wp < 2.0
        assert rep.iii_moment_weighted < 5.0
        assert np.isfinite(rep.iv_sup_p2) and rep.iv_sup_p2 > 0

    def test_volume_moment_approaches_limit(self, ref, neu_sweep):
        vals = [abs(neu_sweep[N].int_w / neu_sweep[N].radius ** 2
                    - 0.4 * np.pi * A0_EXACT) for N in (50, 200)]
        assert vals[1] < vals[0] / 2.0

    def test_weighted_potential_integral_is_stable(self, ref, neu_sweep):
        vals = [verify_lemma_scattering(neu_sweep[N], ref).ii_weighted
                for N in (50, 100, 200)]
        assert max(vals) / min(vals) < 3.0

    def test_mixed_potentials_rejected(self, ref):
        other = solve_neumann(make_square_well(3.0, 1.0, 512), 0.5, 40)
        with pytest.raises(InvalidParameterError):
            verify_lemma_scattering(other, ref)

    def test_report_serializes(self, ref, neu100):
        d = verify_lemma_scattering(neu100, ref).to_dict()
        assert set(d) >= {"a0", "lambda_ell", "i", "ii", "iii", "iv"}
        assert "ratio" in d["i"] and "sup_p2_what" in d["iv"]

"""
Tests for resonance points, the averaged field and branch stability.

Numbers quoted with the leading damping average follow the closed form
1/(8ω₀² sin²(πΩ₀)) for the period mean of κ_ψ²; the exact mean is the
default everywhere else.

Run with: pytest vibroimpact/test_resonance.py
"""

import math
from dataclasses import replace
from unittest import TestCase

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from .exceptions import (
    DegenerateResonance,
    DomainError,
    NoResonance,
    NoUniformBranch,
)
from .model import CloseFrequencies, DistinctFrequencies, OscillatorConfig
from .resonance import (
    AveragedField,
    DampingAverage,
    Stability,
    a_n,
    branch_phase,
    classify,
    classify_branches,
    coefficients,
    equilibria,
    f0,
    f0_eta,
    f0_numeric,
    find_resonance,
    first_order_closed_form,
    impact_frequency_at,
    mean_growth,
    mean_log_derivative,
    tau_grid,
)

J_CANONICAL = 2.0 * math.sqrt(3.0)


class BaseTestCase(TestCase):
    """Base test case with the canonical resonance and its variants."""

    def setUp(self):
        """Set up canonical, second-harmonic and distinct-frequency fields."""
        self.config = OscillatorConfig(
            big_omega=1.0, delta=1.0, gamma=0.1, epsilon=0.005
        )
        self.forcing = CloseFrequencies(a1=1.0, a2=0.5, nu=1.5, big_gamma=1.0)
        self.rp = find_resonance(self.config, 1.5, 1, 1)
        self.field = AveragedField(self.rp, self.forcing)
        self.leading = AveragedField(
            self.rp, self.forcing, damping_average=DampingAverage.LEADING
        )

        self.config_2 = replace(self.config, gamma=0.05)
        self.forcing_2 = CloseFrequencies(a1=1.0, a2=0.5, nu=3.0, big_gamma=1.0)
        self.field_2 = AveragedField(
            find_resonance(self.config_2, 3.0, 1, 2), self.forcing_2
        )

        self.distinct = DistinctFrequencies(
            amp_a=1.5, amp_b=1.0, nu=1.5, big_gamma=1.0, theta=0.3
        )
        self.field_distinct = AveragedField(self.rp, self.distinct)


class FindResonanceTests(BaseTestCase):
    """Test location of resonance points."""

    def test_canonical_point(self):
        """Test J₁₁ = 2√3 with ω₀(J₁₁) = ν."""
        self.assertAlmostEqual(self.rp.j_pq, J_CANONICAL, places=12)
        self.assertAlmostEqual(impact_frequency_at(self.rp), 1.5, places=12)
        self.assertAlmostEqual(self.rp.omega0_prime, 9.0 / (32.0 * math.pi), places=12)
        self.assertAlmostEqual(self.rp.mu, math.sqrt(0.005), places=15)

    def test_second_harmonic_point(self):
        """Test ν = 3 with p = 2 resonates at the same impulse."""
        self.assertAlmostEqual(self.field_2.rp.j_pq, J_CANONICAL, places=12)
        self.assertAlmostEqual(self.field_2.rp.window, 4.0 * math.pi / 3.0, places=12)

    def test_negative_limiter(self):
        """Test Δ = -1, ν = 4 resonates at J = 2 with a falling frequency map."""
        config = replace(self.config, delta=-1.0)
        rp = find_resonance(config, 4.0, 1, 1)
        self.assertAlmostEqual(rp.j_pq, 2.0, places=12)
        self.assertLess(rp.omega0_prime, 0.0)

    def test_out_of_band(self):
        """Test frequencies outside (Ω, 2Ω) have no resonance for Δ > 0."""
        with self.assertRaises(NoResonance):
            find_resonance(self.config, 1.5, 1, 2)
        with self.assertRaises(NoResonance):
            find_resonance(self.config, 2.5, 1, 1)

    def test_zero_delta(self):
        """Test Δ = 0 is degenerate at 2Ω and has no resonance elsewhere."""
        config = replace(self.config, delta=0.0)
        with self.assertRaises(DegenerateResonance):
            find_resonance(config, 2.0, 1, 1)
        with self.assertRaises(NoResonance):
            find_resonance(config, 1.5, 1, 1)

    def test_invalid_ratio(self):
        """Test non-coprime or non-positive p, q are rejected."""
        with self.assertRaises(DomainError):
            find_resonance(self.config, 1.5, 2, 4)
        with self.assertRaises(DomainError):
            find_resonance(self.config, 1.5, 0, 1)

    def test_mismatched_forcing(self):
        """Test the field rejects a forcing at another frequency."""
        with self.assertRaises(DomainError):
            AveragedField(self.rp, self.forcing_2)


class AveragedFieldTests(BaseTestCase):
    """Test the closed-form averaged field and A_n."""

    def test_leading_ratio_values(self):
        """Test A₁(0) = -0.1343555 and A₁(π) = -0.403067 with the leading mean."""
        self.assertAlmostEqual(a_n(0.0, self.leading), -0.1343555, delta=2e-7)
        self.assertAlmostEqual(a_n(math.pi, self.leading), -0.403067, delta=2e-6)

    def test_leading_second_harmonic_ratio(self):
        """Test A₂(0) = -0.214969 for ν = 3, γ = 0.05."""
        field = replace(self.field_2, damping_average=DampingAverage.LEADING)
        self.assertAlmostEqual(a_n(0.0, field), -0.214969, delta=2e-6)

    def test_leading_f0_value(self):
        """Test f0(0, 0) = -1.94981 with the leading mean."""
        self.assertAlmostEqual(f0(0.0, 0.0, self.leading), -1.94981, delta=2e-5)

    def test_exact_mean_scales_damping(self):
        """Test exact damping is the leading part times 1 - sin(2πΩ₀)/(2πΩ₀)."""
        two_pi_cap = 2.0 * math.pi * (2.0 / 3.0)
        weight = 1.0 - math.sin(two_pi_cap) / two_pi_cap
        self.assertAlmostEqual(
            self.field.damping_mean, self.leading.damping_mean * weight, places=12
        )

    def test_ratio_linear_in_gamma(self):
        """Test A_n doubles exactly when γ doubles."""
        doubled = AveragedField(
            find_resonance(replace(self.config, gamma=0.2), 1.5, 1, 1), self.forcing
        )
        taus = tau_grid(self.forcing, 64)
        np.testing.assert_array_equal(a_n(taus, doubled), 2.0 * a_n(taus, self.field))

    def test_ratio_threshold(self):
        """Test strong damping pushes max |A₁| past 1."""
        heavy = AveragedField(
            find_resonance(replace(self.config, gamma=1.0), 1.5, 1, 1), self.forcing
        )
        self.assertGreater(np.max(np.abs(a_n(tau_grid(self.forcing), heavy))), 1.0)

    def test_uncoupled_ratio_is_infinite(self):
        """Test q ≠ 1 resonances do not couple to the forcing."""
        forcing = CloseFrequencies(a1=1.0, a2=0.5, nu=1.2, big_gamma=1.0)
        field = AveragedField(find_resonance(self.config, 1.2, 3, 2), forcing)
        self.assertFalse(field.coupled)
        self.assertEqual(a_n(0.0, field), math.inf)
        with self.assertRaises(NoUniformBranch):
            equilibria(field)

    @settings(max_examples=25, deadline=None)
    @given(
        eta=st.floats(min_value=0.0, max_value=2.0 * math.pi),
        tau=st.floats(min_value=0.0, max_value=2.0 * math.pi),
    )
    def test_closed_form_matches_quadrature(self, eta, tau):
        """Test f0 against direct averaging over the common period."""
        self.assertAlmostEqual(
            f0(eta, tau, self.field), f0_numeric(eta, tau, self.field), delta=1e-8
        )

    def test_second_harmonic_quadrature(self):
        """Test f0 against direct averaging for n = 2."""
        for eta, tau in ((0.3, 0.0), (2.0, 1.5), (5.0, 4.0)):
            self.assertAlmostEqual(
                f0(eta, tau, self.field_2),
                f0_numeric(eta, tau, self.field_2),
                delta=1e-8,
            )


class EquilibriaTests(BaseTestCase):
    """Test locked-phase branches."""

    def test_canonical_branch_count_and_order(self):
        """Test n = 1 gives two branches, '+' first."""
        branches = equilibria(self.field)
        self.assertEqual(len(branches), 2)
        self.assertEqual([b.label for b in branches], ["+", "-"])
        self.assertEqual(len(branches[0].tau), 256)

    def test_leading_branch_phases(self):
        """Test η₀(0) = 1.70556 and 4.57763 with the leading mean."""
        plus, minus = equilibria(self.leading)
        self.assertAlmostEqual(plus.eta0[0], 1.70556, delta=2e-5)
        self.assertAlmostEqual(minus.eta0[0], 4.57763, delta=2e-5)

    def test_residual_vanishes(self):
        """Test |f0(η₀(τ), τ)| ≤ 1e-10 on every branch."""
        for field in (self.field, self.field_2, self.field_distinct):
            for branch in equilibria(field):
                residual = f0(branch.eta0, branch.tau, field)
                self.assertLessEqual(float(np.max(np.abs(residual))), 1e-10)

    def test_second_harmonic_has_four_branches(self):
        """Test n = 2 gives 2n = 4 branches."""
        self.assertEqual(len(equilibria(self.field_2)), 4)

    def test_slope_signs_split(self):
        """Test a(τ) is positive on n branches and negative on n."""
        for field in (self.field, self.field_2):
            branches = equilibria(field)
            signs = [np.sign(f0_eta(b, b.tau, field)) for b in branches]
            positive = sum(1 for s in signs if np.all(s > 0))
            negative = sum(1 for s in signs if np.all(s < 0))
            self.assertEqual(positive, field.n)
            self.assertEqual(negative, field.n)

    def test_leading_slope_value(self):
        """Test a(0) = 1.703289 on the '+' branch with the leading mean."""
        plus = equilibria(self.leading)[0]
        self.assertAlmostEqual(f0_eta(plus, 0.0, self.leading), 1.703289, delta=2e-5)

    def test_distinct_branches_constant(self):
        """Test distinct-frequency branches do not depend on τ."""
        for branch in equilibria(self.field_distinct):
            self.assertLess(np.ptp(branch.eta0), 1e-12)

    def test_no_uniform_branch(self):
        """Test heavy damping raises NoUniformBranch."""
        heavy = AveragedField(
            find_resonance(replace(self.config, gamma=1.0), 1.5, 1, 1), self.forcing
        )
        with self.assertRaises(NoUniformBranch):
            equilibria(heavy)

    def test_branch_phase_matches_grid(self):
        """Test branch_phase evaluated on the grid reproduces eta0."""
        for branch in equilibria(self.field):
            np.testing.assert_allclose(
                branch_phase(branch, branch.tau, self.field), branch.eta0, atol=1e-14
            )


class StabilityTests(BaseTestCase):
    """Test linearization coefficients and stability labels."""

    def test_closed_form_trace(self):
        """Test b + e = -γ at every equilibrium with the exact mean."""
        taus = tau_grid(self.forcing, 32)
        b_val, e_val = first_order_closed_form(taus, self.field)
        np.testing.assert_allclose(b_val + e_val, -0.1, atol=1e-6)
        grid = tau_grid(self.forcing_2, 32)
        b_val, e_val = first_order_closed_form(grid, self.field_2)
        np.testing.assert_allclose(b_val + e_val, -0.05, atol=1e-6)

    def test_quadrature_matches_closed_form(self):
        """Test the quadrature b and e agree with the closed forms."""
        minus = equilibria(self.field)[1]
        taus = tau_grid(self.forcing, 16)
        coeffs = coefficients(minus, self.field, taus)
        b_val, e_val = first_order_closed_form(taus, self.field)
        np.testing.assert_allclose(coeffs.b, b_val, atol=1e-6)
        np.testing.assert_allclose(coeffs.e, e_val, atol=1e-6)

    def test_canonical_labels(self):
        """Test '+' is UnstableThm1 and '-' is StableThm2."""
        classified = classify_branches(self.field, equilibria(self.field))
        labels = [branch.stability for branch, _ in classified]
        self.assertEqual(labels, [Stability.UNSTABLE_THM1, Stability.STABLE_THM2])

    def test_stable_branch_growth(self):
        """Test d·a < 0 uniformly and ⟨b + e⟩ = -γ on the '-' branch."""
        minus = equilibria(self.field)[1]
        coeffs = coefficients(minus, self.field)
        self.assertTrue(np.all(coeffs.a * coeffs.d < 0))
        self.assertAlmostEqual(mean_growth(coeffs), -0.1, delta=1e-5)
        self.assertTrue(np.all(np.isfinite(coeffs.h)))

    def test_leading_mean_still_stable(self):
        """Test the leading damping average gives the same labels."""
        classified = classify_branches(self.leading, equilibria(self.leading))
        labels = [branch.stability for branch, _ in classified]
        self.assertEqual(labels, [Stability.UNSTABLE_THM1, Stability.STABLE_THM2])

    def test_growth_undefined_on_unstable_branch(self):
        """Test mean_growth refuses branches with a·d > 0."""
        plus = equilibria(self.field)[0]
        coeffs = coefficients(plus, self.field, tau_grid(self.forcing, 16))
        self.assertTrue(np.all(np.isnan(coeffs.h)))
        with self.assertRaises(DomainError):
            mean_growth(coeffs)

    def test_second_harmonic_labels(self):
        """Test n = 2 gives two stable and two unstable branches."""
        classified = classify_branches(self.field_2, equilibria(self.field_2))
        labels = [branch.stability for branch, _ in classified]
        self.assertEqual(labels.count(Stability.STABLE_THM2), 2)
        self.assertEqual(labels.count(Stability.UNSTABLE_THM1), 2)

    def test_negative_limiter_swaps_roles(self):
        """Test Δ < 0 flips the sign of d, making '-' unstable by sign alone."""
        config = replace(self.config, delta=-1.0)
        forcing = CloseFrequencies(a1=1.0, a2=0.5, nu=4.0, big_gamma=1.0)
        field = AveragedField(find_resonance(config, 4.0, 1, 1), forcing)
        classified = classify_branches(field, equilibria(field))
        labels = {branch.label: branch.stability for branch, _ in classified}
        self.assertEqual(labels["-"], Stability.UNSTABLE_THM1)
        self.assertIn(labels["+"], (Stability.STABLE_THM2, Stability.UNSTABLE_THM2))

    def test_classify_indeterminate_on_sign_change(self):
        """Test a·d changing sign over τ is left indeterminate."""
        minus = equilibria(self.field)[1]
        coeffs = coefficients(minus, self.field, tau_grid(self.forcing, 8))
        mixed = replace(coeffs, a=np.where(np.arange(8) < 4, 1.0, -1.0))
        self.assertEqual(classify(minus, mixed), Stability.INDETERMINATE)

    def test_mean_log_derivative_vanishes(self):
        """Test the mean of h'/h is zero for a positive periodic sample."""
        taus = np.linspace(0.0, 2 * math.pi, 128, endpoint=False)
        values = 2.0 + np.cos(taus) + 0.3 * np.sin(3 * taus)
        self.assertLess(abs(mean_log_derivative(values, 2 * math.pi)), 1e-10)

"""Initial-data generation, epsilon measurement and the transport profiles."""

import numpy as np
import pytest

from elsasser.dynamics import ElsasserState
from elsasser.energies import WeightSpec, energy_E_k, inverse_order_energy
from elsasser.initial_data import (
    alfven_exact,
    concentration_radius,
    linear_alfven_profile,
    measure_epsilon,
    sample_localized_divfree,
)
from elsasser.integrator import StepControl, integrate
from elsasser.oracles import dense_energy_E_k
from elsasser.rng import Lcg64
from elsasser.spectral import make_grid, to_spectral


@pytest.fixture(scope="module")
def grid128():
    return make_grid(2, 128, 32.0)


@pytest.fixture(scope="module")
def sample(grid128):
    spec = WeightSpec(grid128)
    return sample_localized_divfree(grid128, 1e-4, 2.0, 7, spec), spec


class TestLcg64:
    def test_recurrence(self):
        g = Lcg64(0)
        a, c, m = 6364136223846793005, 1442695040888963407, 2**64
        assert g.next_u64() == c
        assert g.next_u64() == (a * c + c) % m

    def test_uniform_range(self):
        g = Lcg64(42)
        u = np.array([g.uniform() for _ in range(10000)])
        assert u.min() > 0 and u.max() <= 1
        assert abs(u.mean() - 0.5) < 0.01

    def test_normal_moments(self):
        g = Lcg64(3)
        z = np.array([g.normal() for _ in range(40000)])
        assert abs(z.mean()) < 0.02 and abs(z.var() - 1) < 0.03

    def test_reproducible(self):
        a, b = Lcg64(99), Lcg64(99)
        assert [a.normal() for _ in range(7)] == [b.normal() for _ in range(7)]


class TestSampler:
    def test_zero_target(self, grid128):
        s = sample_localized_divfree(grid128, 0.0, 2.0, 1, WeightSpec(grid128))
        assert not s.lambda_plus.any() and not s.lambda_minus.any()

    def test_hits_target(self, sample):
        s, spec = sample
        assert abs(measure_epsilon(s, spec).epsilon_inviscid / 1e-4 - 1) < 0.01

    def test_viscous_target(self, grid128):
        spec = WeightSpec(grid128)
        s = sample_localized_divfree(grid128, 2e-4, 2.0, 7, spec, viscous=True)
        assert abs(measure_epsilon(s, spec, viscous=True).epsilon_viscous / 2e-4 - 1) < 0.01

    def test_same_seed_bitwise(self, grid128, sample):
        s, spec = sample
        t = sample_localized_divfree(grid128, 1e-4, 2.0, 7, spec)
        assert np.array_equal(s.lambda_plus, t.lambda_plus)
        assert np.array_equal(s.lambda_minus, t.lambda_minus)

    def test_different_seed_differs(self, grid128, sample):
        s, spec = sample
        t = sample_localized_divfree(grid128, 1e-4, 2.0, 8, spec)
        assert not np.array_equal(s.lambda_plus, t.lambda_plus)

    def test_divergence_and_mean(self, sample):
        s, _ = sample
        assert s.divergence_max() < 1e-11
        for f in (s.lambda_plus, s.lambda_minus):
            assert np.max(np.abs(f.mean(axis=(1, 2)))) < 1e-13

    def test_localized(self, grid128, sample):
        s, spec = sample
        assert measure_epsilon(s, spec).concentration_radius < grid128.half_length / 2

    def test_band_limited(self, grid128, sample):
        s, _ = sample
        F = to_spectral(s.lambda_plus, grid128)
        assert np.max(np.abs(F[:, ~grid128.dealias_mask])) < 1e-15

    def test_under_resolved_length(self, grid128):
        with pytest.raises(ValueError, match="grid spacings"):
            sample_localized_divfree(grid128, 1e-4, 1.0, 1, WeightSpec(grid128))

    def test_unresolved_mask(self):
        g = make_grid(2, 32, 16.0)
        with pytest.raises(ValueError, match="not resolved"):
            sample_localized_divfree(g, 1e-4, 4.0, 1, WeightSpec(g))

    def test_unresolved_spectrum(self):
        g = make_grid(2, 16, 32.0)
        with pytest.raises(ValueError):
            sample_localized_divfree(g, 1e-4, 16.0, 1, WeightSpec(g))

    def test_three_dimensional_default_mask_rejected(self):
        g = make_grid(3, 64, 16.0)
        with pytest.raises(ValueError, match="not resolved"):
            sample_localized_divfree(g, 1e-4, 2.0, 5, WeightSpec(g))

    def test_three_dimensional(self):
        g = make_grid(3, 64, 16.0)
        spec = WeightSpec(g)
        s = sample_localized_divfree(g, 1e-4, 2.0, 5, spec, mask_radius=6.0)
        assert s.divergence_max() < 1e-11
        assert abs(measure_epsilon(s, spec).epsilon / 1e-4 - 1) < 0.01


class TestMeasureEpsilon:
    def test_zero_state(self, grid128):
        r = measure_epsilon(ElsasserState.zeros(grid128), WeightSpec(grid128))
        assert r.epsilon_inviscid == 0 and r.epsilon_viscous == 0

    def test_single_mode_dense_oracle(self, grid32):
        x1, _ = grid32.mesh
        lp = np.zeros((2,) + grid32.shape)
        lp[1] = 0.2 * np.sin(np.pi * x1 / 8)
        s = ElsasserState(grid32, lp, np.zeros_like(lp))
        r = measure_epsilon(s, WeightSpec(grid32))
        ref = dense_energy_E_k(lp, np.zeros_like(lp), grid32, 0.6, 5)
        assert abs(r.epsilon_inviscid - ref) / ref < 1e-9

    def test_viscous_adds_inverse_terms(self, sample):
        s, spec = sample
        r = measure_epsilon(s, spec)
        assert r.epsilon_viscous - r.epsilon_inviscid == pytest.approx(inverse_order_energy(s), rel=1e-12)
        assert r.epsilon_viscous >= r.epsilon_inviscid

    def test_quadratic(self, sample):
        s, spec = sample
        a, b = measure_epsilon(s, spec), measure_epsilon(s.scaled(2.0), spec)
        assert abs(b.epsilon_inviscid / (4 * a.epsilon_inviscid) - 1) < 1e-12
        assert abs(b.epsilon_viscous / (4 * a.epsilon_viscous) - 1) < 1e-12

    def test_requires_time_zero(self, sample):
        s, spec = sample
        with pytest.raises(ValueError):
            measure_epsilon(ElsasserState(s.grid, s.lambda_plus, s.lambda_minus, 1.0), spec)

    def test_equals_E_k(self, sample):
        s, spec = sample
        assert measure_epsilon(s, spec).epsilon_inviscid == energy_E_k(s, spec)[0]

    def test_radius_of_centered_bump(self, grid128):
        x1, x2 = grid128.mesh
        lp = np.zeros((2,) + grid128.shape)
        lp[0] = np.exp(-(x1**2 + x2**2) / 2)
        r = concentration_radius(ElsasserState(grid128, lp, np.zeros_like(lp)), WeightSpec(grid128))
        assert 2.0 < r < 6.0


@pytest.fixture(scope="module")
def big():
    return make_grid(2, 256, 64.0)


class TestLinearAlfven:
    def test_minus_family_zero(self, grid64):
        s = linear_alfven_profile(grid64, "gaussian_ring", 0.1)
        assert not s.lambda_minus.any()
        assert s.divergence_max() < 1e-12

    def test_transport_to_one(self, big):
        s = linear_alfven_profile(big, "gaussian_ring", 1e-2, width=1.4)
        res = integrate(s, StepControl(1.0))
        exact = alfven_exact(big, "gaussian_ring", 1e-2, 1.0, width=1.4)
        assert np.max(np.abs(res.state.lambda_plus - exact)) < 1e-8
        assert np.max(np.abs(res.state.lambda_minus)) < 1e-12

    def test_viscous_single_mode_decay(self, grid64):
        nu, T = 0.05, 3.0
        s = linear_alfven_profile(grid64, "single_mode", 0.2)
        res = integrate(s, StepControl(T), nu=nu)
        exact = alfven_exact(grid64, "single_mode", 0.2, T, nu)
        assert np.max(np.abs(res.state.lambda_plus - exact)) < 1e-8

    def test_oblique_background(self, grid64):
        e = (0.6, 0.8)
        s = linear_alfven_profile(grid64, "gaussian_ring", 0.1, e=e, width=2.0)
        res = integrate(s, StepControl(2.0), e=e)
        exact = alfven_exact(grid64, "gaussian_ring", 0.1, 2.0, e=e, width=2.0)
        assert np.max(np.abs(res.state.lambda_plus - exact)) < 1e-8

    def test_rejects_amplitude(self, grid64):
        with pytest.raises(ValueError):
            linear_alfven_profile(grid64, "single_mode", 0.0)

    def test_rejects_shape(self, grid64):
        with pytest.raises(ValueError):
            linear_alfven_profile(grid64, "square", 1.0)

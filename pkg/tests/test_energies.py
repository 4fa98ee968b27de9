"""Moving weights, ghost function and the weighted energies."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elsasser.dynamics import ElsasserState
from elsasser.energies import (
    EnergyTracker,
    WeightSpec,
    accumulate_V,
    accumulate_W,
    energy_E_k,
    energy_modified,
    ghost_coordinates,
    ghost_integrand,
    ghost_q,
    ghost_q_infinity,
    initial_report,
    inverse_order_energy,
    sobolev_embedding_constant,
    weight_field,
    weight_value,
    weighted_energy,
)
from elsasser.integrator import StepControl, integrate
from elsasser.oracles import dense_energy_E_k
from elsasser.spectral import make_grid, norm_sq

from test_dynamics import random_state

# int_0^inf (1+t^2)^{-0.6} dt, mpmath at 30 digits after t = 1/v^5 on the tail
Q_INF_06 = 5.66154348760787686
# int_0^3.7 (1+t^2)^{-0.6} dt, mpmath at 30 digits
Q_37_06 = 1.82759005579643472623651262424
# int_0^5000 (1+t^2)^{-0.6} dt, mpmath at 30 digits
Q_5000_06 = 4.75126138808090673


def single_mode_state(grid, amp=0.3, m=1, time=0.0):
    x1, _ = grid.mesh
    lp = np.zeros((2,) + grid.shape)
    lp[1] = amp * np.sin(np.pi * m * x1 / grid.half_length)
    return ElsasserState(grid, lp, np.zeros_like(lp), time)


class TestWeightSpec:
    def test_defaults(self, grid16):
        s = WeightSpec(grid16)
        assert s.mu == 0.6 and s.k == 5 and s.e == (1.0, 0.0)

    @pytest.mark.parametrize("mu", [0.5, 2 / 3, 0.7, 0.4])
    def test_mu_range(self, grid16, mu):
        with pytest.raises(ValueError, match="1/2, 2/3"):
            WeightSpec(grid16, mu)

    def test_k_lower_bound(self, grid3d):
        with pytest.raises(ValueError):
            WeightSpec(grid3d, 0.6, 5)
        assert WeightSpec(grid3d).k == 6


class TestWeights:
    def test_origin(self):
        assert weight_value([0.0, 0.0], 0.0, +1, 1.7, [1.0, 0.0]) == 1.0

    def test_formula(self):
        assert weight_value([1.0, 0.0], 1.0, +1, 1.0, [1.0, 0.0]) == pytest.approx(math.sqrt(5))

    def test_cancellation(self):
        assert weight_value([1.0, 0.0], 1.0, -1, 1.0, [1.0, 0.0]) == 1.0

    def test_field_matches_pointwise(self, grid16):
        w = weight_field(grid16, 0.7, -1, 1.2, (0.6, 0.8))
        x = [grid16.coords[0].ravel()[3], grid16.coords[1].ravel()[11]]
        assert w[3, 11] == pytest.approx(weight_value(x, 0.7, -1, 1.2, (0.6, 0.8)), rel=1e-14)

    def test_signs_agree_at_time_zero(self, grid16):
        assert np.array_equal(weight_field(grid16, 0.0, 1, 1.2, (1, 0)), weight_field(grid16, 0.0, -1, 1.2, (1, 0)))

    def test_ghost_coordinates_sum(self, grid16):
        g = ghost_coordinates(grid16, 2.3, (0.6, 0.8))
        assert np.max(np.abs(g.sigma_plus + g.sigma_minus + 4.6)) < 1e-14


class TestGhostQ:
    def test_zero(self):
        assert ghost_q(0.0, 0.6) == 0.0

    def test_odd(self):
        assert ghost_q(-3.7, 0.6) == -ghost_q(3.7, 0.6)

    def test_value(self):
        assert abs(ghost_q(3.7, 0.6) - Q_37_06) < 1e-10

    def test_beyond_table(self):
        assert abs(ghost_q(5000.0, 0.6) - Q_5000_06) < 1e-10

    def test_infinity_oracle(self):
        assert abs(ghost_q_infinity(0.6) - Q_INF_06) < 1e-12

    def test_mu_rejected(self):
        with pytest.raises(ValueError):
            ghost_q(1.0, 0.7)

    def test_monotone_and_bounded(self):
        s = np.linspace(-2000, 2000, 4001)
        q = ghost_q(s, 0.6)
        assert np.all(np.diff(q) > 0)
        qinf = ghost_q_infinity(0.6)
        assert np.all(np.abs(q) <= qinf)
        assert np.all(np.exp(q) >= np.exp(-qinf)) and np.all(np.exp(q) <= np.exp(qinf))

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.51, 0.66), st.floats(0, 50))
    def test_additivity_against_quad(self, mu, s):
        from scipy.integrate import quad

        ref = quad(lambda t: (1 + t * t) ** (-mu), 0, s, epsabs=1e-13, limit=200)[0]
        assert abs(ghost_q(s, mu) - ref) < 1e-10


class TestEnergyE:
    def test_zero_state(self, grid16):
        assert energy_E_k(ElsasserState.zeros(grid16), WeightSpec(grid16))[0] == 0.0

    def test_dense_oracle_single_mode(self, grid32):
        s = single_mode_state(grid32, m=2)
        E, _ = energy_E_k(s, WeightSpec(grid32))
        ref = dense_energy_E_k(s.lambda_plus, s.lambda_minus, grid32, 0.6, 5)
        assert abs(E - ref) / ref < 1e-9

    def test_dense_oracle_random_moving(self, grid32):
        s = random_state(grid32, np.random.default_rng(2), ell=0.5, time=1.25)
        spec = WeightSpec(grid32, 0.55, 5, (0.6, 0.8))
        E, _ = energy_E_k(s, spec)
        ref = dense_energy_E_k(s.lambda_plus, s.lambda_minus, grid32, 0.55, 5, 1.25, (0.6, 0.8))
        assert abs(E - ref) / ref < 1e-6

    def test_unweighted_reduces_to_l2(self, grid32):
        s = random_state(grid32, np.random.default_rng(4))
        E, _ = weighted_energy(s, WeightSpec(grid32), high_exponent=0.0, zero_exponent=0.0, k=0)
        ref = norm_sq(s.lambda_plus, grid32) + norm_sq(s.lambda_minus, grid32)
        assert abs(E - ref) / ref < 1e-12

    def test_per_order_sums(self, grid32):
        s = random_state(grid32, np.random.default_rng(4))
        E, per = energy_E_k(s, WeightSpec(grid32))
        assert sorted(per) == list(range(6))
        assert sum(per.values()) == pytest.approx(E, rel=1e-15)

    def test_literal_minus_weight_switch(self, grid32):
        s = random_state(grid32, np.random.default_rng(8), time=2.0)
        a, _ = energy_E_k(s, WeightSpec(grid32))
        b, _ = energy_E_k(s, WeightSpec(grid32, literal_minus_weight=True))
        assert a != b
        s0 = ElsasserState(grid32, s.lambda_plus, s.lambda_minus, 0.0)
        assert energy_E_k(s0, WeightSpec(grid32))[0] == energy_E_k(s0, WeightSpec(grid32, literal_minus_weight=True))[0]

    def test_quadratic(self, grid32):
        s = random_state(grid32, np.random.default_rng(6))
        spec = WeightSpec(grid32)
        assert energy_E_k(s.scaled(2.0), spec)[0] == pytest.approx(4 * energy_E_k(s, spec)[0], rel=1e-12)

    def test_three_dimensional(self, grid3d):
        s = random_state(grid3d, np.random.default_rng(1), ell=0.5)
        spec = WeightSpec(grid3d)
        E, per = energy_E_k(s, spec)
        assert len(per) == 7
        ref = dense_energy_E_k(s.lambda_plus, s.lambda_minus, grid3d, 0.6, 6)
        assert abs(E - ref) / ref < 1e-6


class TestModifiedEnergy:
    def test_zero_state(self, grid16):
        assert energy_modified(ElsasserState.zeros(grid16), WeightSpec(grid16)) == 0.0

    def test_single_mode_multiplier(self, grid32):
        s = single_mode_state(grid32, amp=0.4, m=1)
        spec = WeightSpec(grid32)
        diff = energy_modified(s, spec) - energy_E_k(s, spec)[0]
        assert diff == pytest.approx((8 / np.pi) ** 2 * norm_sq(s.lambda_plus, grid32), rel=1e-12)

    def test_dominates(self, grid32):
        s = random_state(grid32, np.random.default_rng(3))
        spec = WeightSpec(grid32)
        assert energy_modified(s, spec) >= energy_E_k(s, spec)[0]

    def test_nonzero_mean_rejected(self, grid16):
        lp = np.ones((2,) + grid16.shape)
        with pytest.raises(ValueError):
            inverse_order_energy(ElsasserState(grid16, lp, np.zeros_like(lp)))


class TestAccumulators:
    def test_zero_state(self, grid16):
        spec = WeightSpec(grid16)
        z = ElsasserState.zeros(grid16)
        r = initial_report(z, spec, 0.1)
        r = accumulate_W(r, z, spec, 0.5)
        r = accumulate_V(r, z, spec, 0.1, 0.5)
        assert r.W_k == 0.0 and r.V_k == 0.0

    def test_inviscid_V_zero(self, grid32):
        spec = WeightSpec(grid32)
        s = random_state(grid32, np.random.default_rng(1))
        r = accumulate_V(initial_report(s, spec, 0.0), s, spec, 0.0, 1.0)
        assert r.V_k == 0.0

    def test_ghost_free_integrand_is_energy(self, grid32):
        s = random_state(grid32, np.random.default_rng(1), time=0.8)
        spec = WeightSpec(grid32)
        assert ghost_integrand(s, spec, ghost=False) == pytest.approx(energy_E_k(s, spec)[0], rel=1e-12)

    def test_ghost_integrand_bounded_by_energy(self, grid32):
        s = random_state(grid32, np.random.default_rng(1), time=0.8)
        spec = WeightSpec(grid32)
        assert ghost_integrand(s, spec) <= ghost_integrand(s, spec, ghost=False)

    def test_rejects_nonpositive_dt(self, grid16):
        spec = WeightSpec(grid16)
        z = ElsasserState.zeros(grid16)
        with pytest.raises(ValueError):
            accumulate_W(initial_report(z, spec), z, spec, 0.0)

    def test_tracker_monotone(self, grid32):
        spec = WeightSpec(grid32)
        tr = EnergyTracker(spec, 0.05)
        s = random_state(grid32, np.random.default_rng(11), scale=0.5, ell=0.7)
        integrate(s, StepControl(1.5), nu=0.05, observers=[tr])
        reps = tr.reports
        for a, b in zip(reps, reps[1:]):
            assert b.W_k >= a.W_k and b.V_k >= a.V_k and b.E_tilde >= a.E_tilde
        assert [r.E_tilde for r in reps] == list(np.maximum.accumulate([r.E_k for r in reps]))
        assert all(r.E_k <= r.Ecal_k for r in reps)

    def test_V_single_mode_decay_oracle(self, grid32):
        # closed-form decaying, translating mode; time integral by adaptive quadrature
        from scipy.integrate import quad

        nu, T, A, mu, k = 0.2, 2.0, 0.3, 0.6, 5
        spec = WeightSpec(grid32, mu, k)
        tr = EnergyTracker(spec, nu)
        s = single_mode_state(grid32, amp=A, m=1)
        integrate(s, StepControl(T, cfl_safety=0.02), nu=nu, observers=[tr], nonlinear=False)
        xi = np.pi / 8
        x1, x2 = grid32.mesh

        def rate(t):
            r2 = 1 + (x1 + t) ** 2 + x2**2
            sn, cs = np.sin(xi * (x1 + t)) ** 2, np.cos(xi * (x1 + t)) ** 2
            amp2 = A**2 * np.exp(-2 * nu * xi**2 * t)
            # squared weights: <.>^{2mu} on order 1, <.>^{4mu} on orders >= 2
            f = amp2 * sn + r2**mu * amp2 * xi**2 * cs
            for j in range(2, k + 2):
                f = f + r2 ** (2 * mu) * amp2 * xi ** (2 * j) * (sn if j % 2 == 0 else cs)
            return nu * float(np.sum(np.broadcast_to(f, grid32.shape))) * grid32.cell_volume

        assert abs(tr.reports[0].v_rate - rate(0.0)) / rate(0.0) < 1e-12
        ref = quad(rate, 0, T, epsabs=0, epsrel=1e-12)[0]
        assert abs(tr.latest.V_k - ref) / ref < 1e-6


class TestSobolevRatio:
    def gaussian(self, grid, width=1.5):
        x1, x2 = grid.mesh
        return np.exp(-(x1**2 + x2**2) / (2 * width**2))

    def test_unweighted_gaussian_below_one(self, grid32):
        r = sobolev_embedding_constant(self.gaussian(grid32), 0.0, 0.0, WeightSpec(grid32))
        assert 0 < r < 1

    def test_homogeneous(self, grid32):
        spec = WeightSpec(grid32)
        f = self.gaussian(grid32)
        a = sobolev_embedding_constant(f, 0.5, 1.2, spec)
        b = sobolev_embedding_constant(10 * f, 0.5, 1.2, spec)
        assert a == pytest.approx(b, rel=1e-13)

    def test_zero_field(self, grid32):
        with pytest.raises(ValueError):
            sobolev_embedding_constant(np.zeros(grid32.shape), 0.0, 1.2, WeightSpec(grid32))

    def test_corpus_bound(self, grid32):
        spec = WeightSpec(grid32)
        rng = np.random.default_rng(50)
        ratios = []
        for _ in range(50):
            s = random_state(grid32, rng, ell=0.6)
            x1, x2 = grid32.mesh
            f = s.lambda_plus[0] * np.exp(-(x1**2 + x2**2) / 18)
            ratios.append(sobolev_embedding_constant(f, 0.0, 1.2, spec))
            ratios.append(sobolev_embedding_constant(f, 1.0, 1.2, spec, mu_ghost=0.6))
        assert max(ratios) < 0.5
        assert min(ratios) > 0

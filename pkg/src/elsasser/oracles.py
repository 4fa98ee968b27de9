"""Independent reference computations.

These avoid the FFT machinery used by the solver: derivatives come from
dense Fourier differentiation matrices built from explicit DFT sums, and
the pressure oracle is a closed form.  They are meant for small grids
(32^2) only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy import integrate as sp_integrate

from .dynamics import ElsasserState, pressure_solve
from .energies import WeightSpec, energy_E_k, ghost_q_infinity
from .initial_data import linear_alfven_profile, alfven_exact, measure_epsilon
from .integrator import StepControl, integrate
from .spectral import Grid, make_grid
from .verification import a2_constant_estimate

__all__ = [
    "dft_matrix",
    "differentiation_matrix",
    "dense_energy_E_k",
    "dense_inverse_energy",
    "two_mode_state",
    "two_mode_pressure",
    "OracleResult",
    "run_oracle_suite",
]


def dft_matrix(N: int) -> np.ndarray:
    j = np.arange(N)
    return np.exp(-2j * np.pi * np.outer(j, j) / N) / N


def _mode_numbers(N: int) -> np.ndarray:
    m = np.arange(N)
    return np.where(m < N // 2, m, m - N).astype(float)


def differentiation_matrix(N: int, L: float) -> np.ndarray:
    """Real ``N x N`` spectral first-derivative matrix on ``[-L, L)``.

    The Nyquist mode is differentiated to zero.
    """
    F = dft_matrix(N)
    Finv = np.conj(F.T) * N
    k = np.pi * _mode_numbers(N) / L
    k[N // 2] = 0.0
    return np.real(Finv @ np.diag(1j * k) @ F)


def _apply(D: np.ndarray, f: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(D, f, axes=([1], axis)), 0, axis)


def dense_energy_E_k(lp, lm, grid: Grid, mu: float, k: int, t: float = 0.0, e=None) -> float:
    """``E_k`` by explicit multi-index loops and dense differentiation."""
    n = grid.n_dims
    e = np.eye(n)[0] if e is None else np.asarray(e, float)
    D = differentiation_matrix(grid.points_per_dim, grid.half_length)
    x = np.meshgrid(*[-grid.half_length + grid.spacing * np.arange(grid.points_per_dim)] * n, indexing="ij")
    dv = grid.spacing**n
    total = 0.0
    for sign, field in ((+1, lp), (-1, lm)):
        r2 = 1.0 + sum((x[i] + sign * e[i] * t) ** 2 for i in range(n))
        for comp in field:
            total += float(np.sum(r2**mu * comp**2)) * dv
            for a in product(range(k + 1), repeat=n):
                if not 1 <= sum(a) <= k:
                    continue
                d = comp
                for axis, p in enumerate(a):
                    for _ in range(p):
                        d = _apply(D, d, axis)
                total += float(np.sum(r2 ** (2 * mu) * d**2)) * dv
    return total


def dense_inverse_energy(lp, lm, grid: Grid) -> float:
    """``|| |grad|^{-1} L+ ||^2 + || |grad|^{-1} L- ||^2`` from full DFT sums."""
    N, L, n = grid.points_per_dim, grid.half_length, grid.n_dims
    F = dft_matrix(N)
    k = np.pi * _mode_numbers(N) / L
    K2 = sum(np.meshgrid(*[k**2] * n, indexing="ij"))
    vol = (2 * L) ** n
    total = 0.0
    for field in (lp, lm):
        for comp in field:
            C = comp.astype(complex)
            for axis in range(n):
                C = _apply(F, C, axis)
            mask = K2 > 0
            total += float(np.sum(np.abs(C[mask]) ** 2 / K2[mask])) * vol
    return total


def two_mode_state(grid: Grid, a: float = 0.3, b: float = 0.2, m1: int = 2, m2: int = 3) -> ElsasserState:
    """``L+ = (a cos(xi2 x2), 0)``, ``L- = (0, b cos(xi1 x1))`` (2-D)."""
    x1, x2 = grid.mesh
    xi1, xi2 = np.pi * m1 / grid.half_length, np.pi * m2 / grid.half_length
    lp = np.stack([a * np.cos(xi2 * x2), np.zeros(grid.shape)])
    lm = np.stack([np.zeros(grid.shape), b * np.cos(xi1 * x1)])
    return ElsasserState(grid, lp, lm)


def two_mode_pressure(grid: Grid, a: float = 0.3, b: float = 0.2, m1: int = 2, m2: int = 3) -> np.ndarray:
    """Closed form: ``p = a b xi1 xi2 / |xi|^2 sin(xi1 x1) sin(xi2 x2)``."""
    x1, x2 = grid.mesh
    xi1, xi2 = np.pi * m1 / grid.half_length, np.pi * m2 / grid.half_length
    return a * b * xi1 * xi2 / (xi1**2 + xi2**2) * np.sin(xi1 * x1) * np.sin(xi2 * x2)


@dataclass(frozen=True)
class OracleResult:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _smooth_pair(grid: Grid):
    """Localized divergence-free pair built from two Gaussian stream functions."""
    x1, x2 = grid.mesh
    psi_p = np.exp(-((x1 - 1.0) ** 2 + x2**2) / 8.0)
    psi_m = np.exp(-(x1**2 + (x2 + 0.5) ** 2) / 6.0)
    D = differentiation_matrix(grid.points_per_dim, grid.half_length)
    curl = lambda s: np.stack([_apply(D, s, 1), -_apply(D, s, 0)])  # noqa: E731
    return ElsasserState(grid, 0.1 * curl(psi_p), 0.05 * curl(psi_m))


def run_oracle_suite() -> list[OracleResult]:
    """Fast self-check against the dense and closed-form oracles."""
    out = []
    g = make_grid(2, 32, 8.0)
    spec = WeightSpec(g, 0.6, 5)
    s = _smooth_pair(g)
    E, _ = energy_E_k(s, spec)
    out.append(OracleResult("E_k_dense", _rel(E, dense_energy_E_k(s.lambda_plus, s.lambda_minus, g, 0.6, 5)), 1e-6))
    s_t = ElsasserState(g, s.lambda_plus, s.lambda_minus, 1.5)
    E_t, _ = energy_E_k(s_t, spec)
    out.append(
        OracleResult("E_k_dense_moving", _rel(E_t, dense_energy_E_k(s.lambda_plus, s.lambda_minus, g, 0.6, 5, 1.5)), 1e-6)
    )
    rep = measure_epsilon(s, spec, viscous=True)
    ref = dense_energy_E_k(s.lambda_plus, s.lambda_minus, g, 0.6, 5) + dense_inverse_energy(
        s.lambda_plus, s.lambda_minus, g
    )
    out.append(OracleResult("measure_epsilon_dense", _rel(rep.epsilon_viscous, ref), 1e-6))
    tm = two_mode_state(g)
    p = pressure_solve(tm)
    p_ref = two_mode_pressure(g)
    out.append(OracleResult("pressure_two_mode", float(np.max(np.abs(p - p_ref)) / np.max(np.abs(p_ref))), 1e-6))
    mu = 0.6
    q_num = sp_integrate.quad(lambda x: (1 + x * x) ** (-mu), 0, np.inf)[0]
    out.append(OracleResult("ghost_q_infinity", _rel(ghost_q_infinity(mu), q_num), 1e-8))
    g64 = make_grid(2, 64, 16.0)
    st = linear_alfven_profile(g64, "single_mode", 0.1)
    res = integrate(st, StepControl(1.0), observers=())
    err = float(np.max(np.abs(res.state.lambda_plus - alfven_exact(g64, "single_mode", 0.1, 1.0))))
    out.append(OracleResult("transport_single_mode", err, 1e-12))
    est = a2_constant_estimate(0.0, 2, [1.0, 10.0])
    out.append(OracleResult("a2_constant_weight", abs(est.sup_over_cubes - 1.0), 1e-12))
    if not all(math.isfinite(r.error) for r in out):
        raise RuntimeError("oracle suite produced non-finite errors")
    return out

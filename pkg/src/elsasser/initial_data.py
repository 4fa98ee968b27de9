"""Admissible small initial data and measurement of the smallness parameter.

The smallness parameter is the weighted norm required of the data::

    eps = sum_{1<=|a|<=k} ||<x>^{2mu} d^a L+-||^2 + ||<x>^{mu} L+-||^2
          [+ || |grad|^{-1} L+- ||^2   in the viscous case]

which is ``E_k`` (resp. ``Ecal_k``) evaluated at ``t = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .dynamics import ElsasserState, default_background
from .energies import WeightSpec, derivative_sums, energy_E_k, inverse_order_energy
from .rng import Lcg64
from .spectral import Grid, leray_project_hat, to_physical, to_spectral

__all__ = [
    "InitialDataReport",
    "measure_epsilon",
    "concentration_radius",
    "sample_localized_divfree",
    "linear_alfven_profile",
    "alfven_exact",
    "PROFILE_SHAPES",
]

PROFILE_SHAPES = ("gaussian_ring", "single_mode")

# envelope exp(-|xi|^2 l^2) is below 1e-10 beyond |xi| l = 4.8
_ENVELOPE_CUTOFF = 4.8


@dataclass(frozen=True)
class InitialDataReport:
    epsilon_inviscid: float
    epsilon_viscous: float
    concentration_radius: float
    viscous: bool = False
    seed: int | None = None

    @property
    def epsilon(self) -> float:
        return self.epsilon_viscous if self.viscous else self.epsilon_inviscid


def concentration_radius(state: ElsasserState, spec: WeightSpec, fraction: float = 0.999) -> float:
    """Radius of the centred ball holding ``fraction`` of the weighted energy density."""
    grid = state.grid
    sp, sm = derivative_sums(state, spec.k)
    r2 = sum(c**2 for c in grid.coords)
    r2 = np.broadcast_to(r2, grid.shape)
    hi, lo = (1.0 + r2) ** (2 * spec.mu), (1.0 + r2) ** spec.mu
    dens = lo * (sp[0] + sm[0])
    for j in range(1, spec.k + 1):
        dens = dens + hi * (sp[j] + sm[j])
    total = dens.sum()
    if total <= 0:
        return 0.0
    order = np.argsort(r2, axis=None, kind="stable")
    cum = np.cumsum(dens.ravel()[order])
    idx = int(np.searchsorted(cum, fraction * cum[-1]))
    return float(np.sqrt(r2.ravel()[order][min(idx, order.size - 1)]))


def measure_epsilon(state: ElsasserState, spec: WeightSpec, viscous: bool = False) -> InitialDataReport:
    if state.time != 0.0:
        raise ValueError("measure_epsilon applies to data at t = 0")
    eps_inv, _ = energy_E_k(state, spec)
    eps_visc = eps_inv + inverse_order_energy(state)
    return InitialDataReport(eps_inv, eps_visc, concentration_radius(state, spec), viscous)


def _random_potential(grid: Grid, ell: float, rng: Lcg64) -> np.ndarray:
    """Real random field with spectral envelope ``exp(-|xi|^2 ell^2)``.

    Coefficients are drawn mode by mode in lexicographic order of the
    integer mode vector, so the same seed gives the same continuum field on
    every grid that resolves the envelope.
    """
    L, N, n = grid.half_length, grid.points_per_dim, grid.n_dims
    M = int(np.floor(_ENVELOPE_CUTOFF * L / (np.pi * ell)))
    if M >= N / 3:
        raise ValueError(
            f"correlation length {ell} not resolved: needs modes up to {M}, grid keeps < {N / 3:.1f}"
        )
    F = np.zeros(grid.shape, dtype=complex)
    for m in product(range(-M, M + 1), repeat=n):
        xi2 = (np.pi / L) ** 2 * sum(c * c for c in m)
        if xi2 * ell**2 > _ENVELOPE_CUTOFF**2:
            continue
        re, im = rng.normal(), rng.normal()
        if not any(m):
            continue
        F[tuple(c % N for c in m)] = (re + 1j * im) * np.exp(-xi2 * ell**2)
    return np.real(np.fft.ifftn(F, norm="forward"))


# share of the curl energy allowed outside the 2/3-rule band
_TAIL_LIMIT = 1e-10


def _check_resolved(P: np.ndarray, grid: Grid) -> None:
    """Reject masked potentials whose curl has spectral content beyond the kept band."""
    w = grid.parseval_weights * grid.k_squared * np.abs(P) ** 2
    if P.ndim > grid.n_dims:
        w = w.sum(axis=0)
    total = w.sum()
    tail = w[~grid.dealias_mask].sum() / total if total > 0 else 0.0
    if tail > _TAIL_LIMIT:
        raise ValueError(
            f"localized data not resolved: {tail:.2e} of the spectrum lies beyond the 2/3 band "
            f"(limit {_TAIL_LIMIT:g}); refine the grid or enlarge mask_radius"
        )


def _curl_hat(P: np.ndarray, grid: Grid) -> np.ndarray:
    """Curl of a spectral potential: stream function in 2-D, vector in 3-D."""
    kd = grid.derivative_wavenumbers
    if grid.n_dims == 2:
        return np.stack([1j * kd[1] * P, -1j * kd[0] * P])
    return np.stack(
        [
            1j * kd[1] * P[2] - 1j * kd[2] * P[1],
            1j * kd[2] * P[0] - 1j * kd[0] * P[2],
            1j * kd[0] * P[1] - 1j * kd[1] * P[0],
        ]
    )


def sample_localized_divfree(
    grid: Grid,
    target_eps: float,
    correlation_length: float,
    seed: int,
    spec: WeightSpec,
    mask_radius: float | None = None,
    viscous: bool = False,
) -> ElsasserState:
    """Random localized divergence-free data with prescribed ``eps``.

    Each family is the curl of a random potential (envelope
    ``exp(-|xi|^2 l^2)``) multiplied by a Gaussian mask of standard
    deviation ``mask_radius / 4`` (default ``mask_radius = L/4``).  The
    masked potential must be resolved: at most ``1e-10`` of its curl energy
    may lie beyond the 2/3-rule band.  The curl is band-limited and
    projected, then the amplitude is set so that :func:`measure_epsilon`
    returns ``target_eps``.
    """
    if target_eps < 0:
        raise ValueError("target_eps must be nonnegative")
    if target_eps == 0:
        return ElsasserState.zeros(grid)
    if correlation_length < 4 * grid.spacing:
        raise ValueError(
            f"correlation_length must be >= 4 grid spacings ({4 * grid.spacing:g})"
        )
    radius = grid.half_length / 4 if mask_radius is None else mask_radius
    r2 = np.broadcast_to(sum(c**2 for c in grid.coords), grid.shape)
    mask = np.exp(-r2 / (2 * (radius / 4) ** 2))
    rng = Lcg64(seed)
    n_pot = 1 if grid.n_dims == 2 else 3
    fields = []
    for _ in range(2):
        pot = np.stack([_random_potential(grid, correlation_length, rng) for _ in range(n_pot)])
        P = to_spectral(mask * pot, grid)
        if grid.n_dims == 2:
            P = P[0]
        _check_resolved(P, grid)
        U = leray_project_hat(_curl_hat(P, grid) * grid.dealias_mask, grid)
        fields.append(to_physical(U, grid))
    state = ElsasserState(grid, fields[0], fields[1], 0.0)
    base = measure_epsilon(state, spec, viscous).epsilon
    if not base > 0:
        raise ValueError("localization mask removed all energy; target unreachable")
    state = state.scaled(np.sqrt(target_eps / base))
    got = measure_epsilon(state, spec, viscous)
    if abs(got.epsilon / target_eps - 1.0) > 0.01:
        raise ValueError(f"eps targeting failed: got {got.epsilon:g} for {target_eps:g}")
    if got.concentration_radius >= grid.half_length / 2:
        raise ValueError(
            f"data not localized: R0 = {got.concentration_radius:g} >= L/2 = {grid.half_length / 2:g}"
        )
    return state


def _wrap(y: np.ndarray, L: float) -> np.ndarray:
    return np.mod(y + L, 2 * L) - L


def alfven_exact(
    grid: Grid,
    shape: str,
    amplitude: float,
    t: float = 0.0,
    nu: float = 0.0,
    e=None,
    width: float = 2.0,
) -> np.ndarray:
    """Closed-form ``Lambda+(t, x) = phi(x + e t)`` (with heat decay for ``nu > 0``).

    ``gaussian_ring`` is the curl of ``A s exp(-|y|^2 / 2 s^2)`` in the
    ``(x1, x2)`` plane; ``single_mode`` is ``A sin(pi x1 / L)`` polarized
    along ``x2``.
    """
    n, L = grid.n_dims, grid.half_length
    e = default_background(n) if e is None else np.asarray(e, dtype=float)
    y = [_wrap(np.broadcast_to(c + t * ei, grid.shape), L) for c, ei in zip(grid.coords, e)]
    out = np.zeros((n,) + grid.shape)
    if shape == "gaussian_ring":
        S2 = width**2 + 2 * nu * t
        decay = (width**2 / S2) ** (n / 2)
        g = amplitude * width * decay * np.exp(-sum(c**2 for c in y) / (2 * S2)) / S2
        out[0] = -y[1] * g
        out[1] = y[0] * g
    elif shape == "single_mode":
        xi = np.pi / L
        out[1] = amplitude * np.exp(-nu * xi**2 * t) * np.sin(xi * y[0])
    else:
        raise ValueError(f"unknown profile shape {shape!r}; choose from {PROFILE_SHAPES}")
    return out


def linear_alfven_profile(
    grid: Grid, shape: str, amplitude: float, e=None, width: float = 2.0
) -> ElsasserState:
    """State with ``Lambda- = 0`` and a divergence-free ``Lambda+`` profile.

    For such data the nonlinearity and the pressure vanish identically, so
    the inviscid evolution is pure transport ``Lambda+(t, x) = phi(x + e t)``.
    """
    if not amplitude > 0:
        raise ValueError("amplitude must be positive")
    lp = alfven_exact(grid, shape, amplitude, 0.0, 0.0, e, width)
    U = leray_project_hat(to_spectral(lp, grid) * grid.dealias_mask, grid)
    hm = np.zeros_like(U)
    return ElsasserState.from_spectral(grid, U, hm, 0.0)

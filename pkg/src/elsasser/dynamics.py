"""Incompressible MHD in Elsasser form: state, pressure and right-hand side.

With ``Lp = v + (H - e)`` and ``Lm = v - (H - e)`` the system reads::

    d_t Lp - e.grad Lp + (Lm.grad) Lp + grad p = nu lap Lp
    d_t Lm + e.grad Lm + (Lp.grad) Lm + grad p = nu lap Lm
    div Lp = div Lm = 0,        p = p_phys + |H|^2 / 2

Both advection terms are built from the single product tensor
``Q_ij = Lm_i Lp_j``: ``(Lm.grad) Lp_j = d_i Q_ij`` and
``(Lp.grad) Lm_j = d_i Q_ji``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import Grid, leray_project_hat, to_physical, to_spectral

__all__ = [
    "ElsasserState",
    "PhysicalState",
    "default_background",
    "check_background",
    "from_physical",
    "to_physical_fields",
    "pressure_solve",
    "pressure_hat",
    "rhs",
    "rhs_hat",
    "nonlinear_hat",
    "linear_multipliers",
]


def default_background(n_dims: int) -> np.ndarray:
    e = np.zeros(n_dims)
    e[0] = 1.0
    return e


def check_background(e, n_dims: int) -> np.ndarray:
    e = np.asarray(e, dtype=float)
    if e.shape != (n_dims,):
        raise ValueError(f"background must have {n_dims} components, got shape {e.shape}")
    if abs(np.linalg.norm(e) - 1.0) > 1e-12:
        raise ValueError(f"background vector must be a unit vector, |e| = {np.linalg.norm(e)}")
    return e


@dataclass(frozen=True)
class ElsasserState:
    """Good unknowns ``(Lambda+, Lambda-)`` at time ``time``.

    Arrays have shape ``(n,) + grid.shape``.  Spectral coefficients are
    cached on first use and may be supplied directly by the integrator.
    """

    grid: Grid
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    time: float = 0.0
    _hat: tuple | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_spectral(cls, grid: Grid, hp: np.ndarray, hm: np.ndarray, time: float = 0.0):
        return cls(grid, to_physical(hp, grid), to_physical(hm, grid), float(time), (hp, hm))

    @classmethod
    def zeros(cls, grid: Grid, time: float = 0.0):
        z = np.zeros((grid.n_dims,) + grid.shape)
        return cls(grid, z, z.copy(), time)

    def spectral(self) -> tuple[np.ndarray, np.ndarray]:
        if self._hat is None:
            hat = (to_spectral(self.lambda_plus, self.grid), to_spectral(self.lambda_minus, self.grid))
            object.__setattr__(self, "_hat", hat)
        return self._hat

    def scaled(self, c: float) -> "ElsasserState":
        return ElsasserState(self.grid, c * self.lambda_plus, c * self.lambda_minus, self.time)

    def max_speed(self) -> float:
        """Largest pointwise magnitude of either field."""
        return float(
            max(
                np.sqrt(np.max(np.sum(self.lambda_plus**2, axis=0))),
                np.sqrt(np.max(np.sum(self.lambda_minus**2, axis=0))),
            )
        )

    def divergence_max(self) -> float:
        """Max-norm of both divergences relative to the largest field value."""
        hp, hm = self.spectral()
        kd = self.grid.derivative_wavenumbers
        out = 0.0
        for U, u in ((hp, self.lambda_plus), (hm, self.lambda_minus)):
            scale = np.max(np.abs(u))
            if scale == 0.0:
                continue
            div = to_physical(sum(1j * k * U[i] for i, k in enumerate(kd)), self.grid)
            out = max(out, float(np.max(np.abs(div)) / scale))
        return out


@dataclass(frozen=True)
class PhysicalState:
    """Velocity ``v`` and magnetic field ``H`` around the background ``e``."""

    grid: Grid
    velocity: np.ndarray
    magnetic: np.ndarray
    background: np.ndarray


def _bcast(e: np.ndarray, n_dims: int) -> np.ndarray:
    return e.reshape((-1,) + (1,) * n_dims)


def from_physical(s: PhysicalState) -> ElsasserState:
    e = check_background(s.background, s.grid.n_dims)
    dH = s.magnetic - _bcast(e, s.grid.n_dims)
    return ElsasserState(s.grid, s.velocity + dH, s.velocity - dH, 0.0)


def to_physical_fields(s: ElsasserState, e=None) -> PhysicalState:
    n = s.grid.n_dims
    e = default_background(n) if e is None else check_background(e, n)
    v = 0.5 * (s.lambda_plus + s.lambda_minus)
    H = _bcast(e, n) + 0.5 * (s.lambda_plus - s.lambda_minus)
    return PhysicalState(s.grid, v, H, e)


def _product_hat(lp: np.ndarray, lm: np.ndarray, grid: Grid, dealiased: bool) -> np.ndarray:
    """Spectral ``Q_ij = Lm_i Lp_j``, shape ``(n, n) + spectral_shape``."""
    n = grid.n_dims
    Q = np.empty((n, n) + grid.spectral_shape, dtype=complex)
    for i in range(n):
        for j in range(n):
            Q[i, j] = to_spectral(lm[i] * lp[j], grid)
    if dealiased:
        Q *= grid.dealias_mask
    return Q


def pressure_hat(lp: np.ndarray, lm: np.ndarray, grid: Grid, dealiased: bool = True) -> np.ndarray:
    """Spectral pressure from ``-lap p = d_i d_j (Lm_i Lp_j)``; zero mode 0."""
    Q = _product_hat(lp, lm, grid, dealiased)
    kd = grid.derivative_wavenumbers
    src = sum(kd[i] * kd[j] * Q[i, j] for i in range(grid.n_dims) for j in range(grid.n_dims))
    k2 = grid.kd_squared
    inv = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)
    return -src * inv


def pressure_solve(state: ElsasserState, dealiased: bool = True) -> np.ndarray:
    """Elsasser pressure ``p`` on the grid (zero mean)."""
    return to_physical(
        pressure_hat(state.lambda_plus, state.lambda_minus, state.grid, dealiased), state.grid
    )


def nonlinear_hat(
    hp: np.ndarray, hm: np.ndarray, grid: Grid, projected: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Dealiased advection terms ``-(Lm.grad)Lp`` and ``-(Lp.grad)Lm``.

    With ``projected`` the pressure gradient is included through the Leray
    projection; otherwise the raw advection terms are returned.
    """
    lp, lm = to_physical(hp, grid), to_physical(hm, grid)
    Q = _product_hat(lp, lm, grid, dealiased=True)
    kd = grid.derivative_wavenumbers
    n = grid.n_dims
    Np = -np.stack([sum(1j * kd[i] * Q[i, j] for i in range(n)) for j in range(n)])
    Nm = -np.stack([sum(1j * kd[i] * Q[j, i] for i in range(n)) for j in range(n)])
    if projected:
        Np, Nm = leray_project_hat(Np, grid), leray_project_hat(Nm, grid)
    return Np, Nm


def linear_multipliers(grid: Grid, nu: float, e) -> tuple[np.ndarray, np.ndarray]:
    """Fourier symbols of ``+-e.grad + nu lap`` for the two families."""
    kd = grid.derivative_wavenumbers
    ek = sum(ei * k for ei, k in zip(e, kd))
    diff = -nu * grid.k_squared
    return diff + 1j * ek, diff - 1j * ek


def rhs_hat(
    hp: np.ndarray,
    hm: np.ndarray,
    grid: Grid,
    nu: float,
    e,
    nonlinear: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    Lp, Lm = linear_multipliers(grid, nu, e)
    dp, dm = Lp * hp, Lm * hm
    if nonlinear:
        Np, Nm = nonlinear_hat(hp, hm, grid)
        dp, dm = dp + Np, dm + Nm
    return dp, dm


def rhs(state: ElsasserState, nu: float, e=None, nonlinear: bool = True):
    """Time derivatives ``(dLp/dt, dLm/dt)`` as physical vector fields."""
    if nu < 0:
        raise ValueError(f"viscosity must be nonnegative, got {nu}")
    grid = state.grid
    e = default_background(grid.n_dims) if e is None else check_background(e, grid.n_dims)
    hp, hm = state.spectral()
    dp, dm = rhs_hat(hp, hm, grid, nu, e, nonlinear)
    return to_physical(dp, grid), to_physical(dm, grid)

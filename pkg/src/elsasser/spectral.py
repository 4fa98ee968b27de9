"""Periodic grid geometry and Fourier-space differential operators.

The box is ``[-L, L)^n`` sampled at ``N`` points per axis.  Wavenumbers are
integer multiples of ``pi / L``.  Transforms use the "forward" normalization,
so the zero-mode coefficient is the mean of the field.

Fields are plain numpy arrays: a scalar field has shape ``(N,) * n`` and a
vector field has shape ``(n,) + (N,) * n``.  Spectral coefficients use the
real-FFT layout (last axis halved).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "make_grid",
    "to_spectral",
    "to_physical",
    "spectral_derivative",
    "gradient",
    "divergence",
    "leray_project",
    "leray_project_hat",
    "inv_modulus",
    "dealias",
    "inner",
    "norm_sq",
    "spectral_norm_sq",
    "multi_indices",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-half_length, half_length)^n_dims``."""

    n_dims: int
    points_per_dim: int
    half_length: float

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.points_per_dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_dim,) * self.n_dims

    @property
    def axes(self) -> tuple[int, ...]:
        """Trailing axes that carry the spatial dimensions."""
        return tuple(range(-self.n_dims, 0))

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.n_dims

    @property
    def volume(self) -> float:
        return (2.0 * self.half_length) ** self.n_dims

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays, one per axis."""
        x1 = -self.half_length + self.spacing * np.arange(self.points_per_dim)
        out = []
        for d in range(self.n_dims):
            shape = [1] * self.n_dims
            shape[d] = self.points_per_dim
            out.append(x1.reshape(shape))
        return tuple(out)

    @cached_property
    def mesh(self) -> np.ndarray:
        """Dense coordinates, shape ``(n,) + shape``."""
        return np.stack([np.broadcast_to(c, self.shape) for c in self.coords])

    @cached_property
    def mode_numbers(self) -> tuple[np.ndarray, ...]:
        """Integer mode numbers ``m`` per axis in rfft layout (broadcastable)."""
        N = self.points_per_dim
        out = []
        for d in range(self.n_dims):
            if d == self.n_dims - 1:
                m = np.arange(N // 2 + 1, dtype=float)
            else:
                m = np.fft.fftfreq(N, d=1.0 / N)
            shape = [1] * self.n_dims
            shape[d] = m.size
            out.append(m.reshape(shape))
        return tuple(out)

    @cached_property
    def spectral_shape(self) -> tuple[int, ...]:
        N = self.points_per_dim
        return (N,) * (self.n_dims - 1) + (N // 2 + 1,)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Wavenumbers ``xi = pi m / L``, Nyquist included."""
        return tuple(m * (np.pi / self.half_length) for m in self.mode_numbers)

    @cached_property
    def derivative_wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Wavenumbers used for differentiation; the Nyquist mode is zeroed."""
        N = self.points_per_dim
        return tuple(
            np.where(np.abs(m) == N // 2, 0.0, k)
            for m, k in zip(self.mode_numbers, self.wavenumbers)
        )

    @cached_property
    def k_squared(self) -> np.ndarray:
        return sum(np.broadcast_to(k, self.spectral_shape) ** 2 for k in self.wavenumbers)

    @cached_property
    def kd_squared(self) -> np.ndarray:
        return sum(
            np.broadcast_to(k, self.spectral_shape) ** 2 for k in self.derivative_wavenumbers
        )

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keep modes with ``|m_i| < N/3`` on every axis."""
        cut = self.points_per_dim / 3.0
        mask = np.ones(self.spectral_shape, dtype=bool)
        for m in self.mode_numbers:
            mask &= np.abs(m) < cut
        return mask

    @cached_property
    def parseval_weights(self) -> np.ndarray:
        """Multiplicity of each rfft coefficient in the full spectrum."""
        N = self.points_per_dim
        m_last = self.mode_numbers[-1]
        w = np.where((m_last == 0) | (m_last == N // 2), 1.0, 2.0)
        return np.broadcast_to(w, self.spectral_shape)


def make_grid(n_dims: int, points_per_dim: int, half_length: float) -> Grid:
    """Build a :class:`Grid`, validating resolution and dimension."""
    if n_dims not in (2, 3):
        raise ValueError(f"n_dims must be 2 or 3, got {n_dims}")
    N = int(points_per_dim)
    if N != points_per_dim or N < 16 or N & (N - 1):
        raise ValueError(f"points_per_dim must be a power of two >= 16, got {points_per_dim}")
    if not half_length > 0:
        raise ValueError(f"half_length must be positive, got {half_length}")
    return Grid(n_dims, N, float(half_length))


def _check_shape(f: np.ndarray, shape: tuple[int, ...], what: str) -> None:
    if f.shape[-len(shape):] != shape or f.ndim < len(shape):
        raise ValueError(f"{what} has shape {f.shape}, expected trailing {shape}")


def to_spectral(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Forward real FFT over the spatial axes, normalized by ``1/N^n``."""
    f = np.asarray(f, dtype=float)
    _check_shape(f, grid.shape, "field")
    return sfft.rfftn(f, axes=grid.axes, norm="forward")


def to_physical(F: np.ndarray, grid: Grid) -> np.ndarray:
    """Inverse of :func:`to_spectral`."""
    _check_shape(F, grid.spectral_shape, "spectral field")
    return sfft.irfftn(F, s=grid.shape, axes=grid.axes, norm="forward")


def _dpow(k: np.ndarray, order: int) -> np.ndarray:
    return (1j * k) ** order


def spectral_derivative(f: np.ndarray, grid: Grid, axis: int, order: int = 1) -> np.ndarray:
    """``d^order f / dx_axis^order`` for a real field (scalar or stacked)."""
    if not 0 <= axis < grid.n_dims:
        raise ValueError(f"axis {axis} out of range for {grid.n_dims}-D grid")
    if order < 0:
        raise ValueError("order must be nonnegative")
    F = to_spectral(f, grid)
    return to_physical(F * _dpow(grid.derivative_wavenumbers[axis], order), grid)


def gradient(f: np.ndarray, grid: Grid) -> np.ndarray:
    F = to_spectral(f, grid)
    return np.stack(
        [to_physical(1j * k * F, grid) for k in grid.derivative_wavenumbers], axis=0
    )


def divergence(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Sum of ``d u_i / dx_i`` for a vector field of shape ``(n,) + grid.shape``."""
    U = to_spectral(u, grid)
    D = sum(1j * k * U[i] for i, k in enumerate(grid.derivative_wavenumbers))
    return to_physical(D, grid)


def leray_project_hat(U: np.ndarray, grid: Grid) -> np.ndarray:
    """Project spectral vector coefficients onto the divergence-free subspace."""
    kd = grid.derivative_wavenumbers
    k2 = grid.kd_squared
    inv = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)
    kdotu = sum(k * U[i] for i, k in enumerate(kd))
    return np.stack([U[i] - k * kdotu * inv for i, k in enumerate(kd)], axis=0)


def leray_project(u: np.ndarray, grid: Grid) -> np.ndarray:
    """``u - grad lap^{-1} div u``; the mean of ``u`` passes through."""
    return to_physical(leray_project_hat(to_spectral(u, grid), grid), grid)


def inv_modulus(f: np.ndarray, grid: Grid, tol: float = 1e-12) -> np.ndarray:
    """Apply the multiplier ``1/|xi|`` to a zero-mean field (zero mode -> 0).

    Raises ``ValueError`` when the mean exceeds ``tol`` times the RMS value.
    """
    F = to_spectral(f, grid)
    mean = np.abs(F[(Ellipsis,) + (0,) * grid.n_dims])
    rms = np.sqrt(np.mean(np.asarray(f) ** 2, axis=grid.axes))
    if np.any(mean > tol * rms):
        raise ValueError("inv_modulus requires a zero-mean field")
    k2 = grid.k_squared
    inv = np.divide(1.0, np.sqrt(k2), out=np.zeros_like(k2), where=k2 > 0)
    return to_physical(F * inv, grid)


def dealias(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Truncate a physical field to the 2/3-rule band."""
    return to_physical(to_spectral(f, grid) * grid.dealias_mask, grid)


def inner(f: np.ndarray, g: np.ndarray, grid: Grid) -> float:
    """Discrete L2 inner product (midpoint quadrature over the box)."""
    return float(np.sum(np.asarray(f) * np.asarray(g)) * grid.cell_volume)


def norm_sq(f: np.ndarray, grid: Grid) -> float:
    return inner(f, f, grid)


def spectral_norm_sq(F: np.ndarray, grid: Grid) -> float:
    """Squared L2 norm from rfft coefficients (Parseval)."""
    return float(np.sum(grid.parseval_weights * np.abs(F) ** 2) * grid.volume)


def multi_indices(n_dims: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices ``a`` in ``N^n`` with ``|a| == order``."""
    return [a for a in product(range(order + 1), repeat=n_dims) if sum(a) == order]

"""Time stepping for the Elsasser system.

Two classical RK4 variants are provided.  ``rk4_explicit`` integrates the
full right-hand side.  ``rk4_integrating_factor`` (Lawson RK4) treats the
diagonal linear part ``+-e.grad + nu lap`` exactly through the factors
``exp(L dt)``, so linear Alfven transport and viscous decay carry no time
error and the step size is independent of ``nu``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .dynamics import (
    ElsasserState,
    check_background,
    default_background,
    linear_multipliers,
    nonlinear_hat,
    rhs_hat,
)
from .spectral import Grid, leray_project_hat

__all__ = [
    "SCHEMES",
    "StepControl",
    "SimulationError",
    "HorizonError",
    "cfl_dt",
    "max_horizon",
    "step",
    "integrate",
    "Integration",
]

log = logging.getLogger(__name__)

SCHEMES = ("rk4_explicit", "rk4_integrating_factor")
REPROJECT_TOL = 1e-11


class SimulationError(RuntimeError):
    """Raised when the state becomes non-finite."""


class HorizonError(ValueError):
    """Requested end time lets the data reach the periodic seam."""


@dataclass(frozen=True)
class StepControl:
    t_horizon: float
    cfl_safety: float = 0.4
    dt_max: float = 1.0
    scheme: str = "rk4_integrating_factor"

    def __post_init__(self):
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.dt_max <= 0:
            raise ValueError("dt_max must be positive")
        if self.t_horizon < 0:
            raise ValueError("t_horizon must be nonnegative")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")


def max_horizon(grid: Grid, concentration_radius: float, max_speed: float) -> float:
    """Latest end time before data of radius ``R0`` can reach the seam.

    Waves move at the Alfven speed 1 plus advection; two grid spacings are
    kept as a margin.
    """
    margin = 2.0 * grid.spacing
    return max(0.0, (grid.half_length - concentration_radius - margin) / (1.0 + max_speed))


def cfl_dt(state: ElsasserState, control: StepControl, nu: float = 0.0) -> float:
    h = state.grid.spacing
    c_max = 1.0 + state.max_speed()
    dt = control.cfl_safety * min(h / c_max, control.dt_max)
    if control.scheme == "rk4_explicit" and nu > 0:
        dt = min(dt, control.cfl_safety * h**2 / (2 * state.grid.n_dims * nu))
    return dt


def _rk4_explicit(hp, hm, grid, dt, nu, e, nonlinear):
    f = lambda a, b: rhs_hat(a, b, grid, nu, e, nonlinear)  # noqa: E731
    k1p, k1m = f(hp, hm)
    k2p, k2m = f(hp + 0.5 * dt * k1p, hm + 0.5 * dt * k1m)
    k3p, k3m = f(hp + 0.5 * dt * k2p, hm + 0.5 * dt * k2m)
    k4p, k4m = f(hp + dt * k3p, hm + dt * k3m)
    return (
        hp + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p),
        hm + dt / 6.0 * (k1m + 2 * k2m + 2 * k3m + k4m),
    )


def _rk4_if(hp, hm, grid, dt, nu, e, nonlinear):
    Lp, Lm = linear_multipliers(grid, nu, e)
    Ep, Em = np.exp(Lp * dt), np.exp(Lm * dt)
    Hp, Hm = np.exp(Lp * dt / 2), np.exp(Lm * dt / 2)
    if not nonlinear:
        return Ep * hp, Em * hm
    N = lambda a, b: nonlinear_hat(a, b, grid)  # noqa: E731
    k1p, k1m = N(hp, hm)
    k2p, k2m = N(Hp * (hp + 0.5 * dt * k1p), Hm * (hm + 0.5 * dt * k1m))
    k3p, k3m = N(Hp * hp + 0.5 * dt * k2p, Hm * hm + 0.5 * dt * k2m)
    k4p, k4m = N(Ep * hp + dt * Hp * k3p, Em * hm + dt * Hm * k3m)
    return (
        Ep * hp + dt / 6.0 * (Ep * k1p + 2 * Hp * (k2p + k3p) + k4p),
        Em * hm + dt / 6.0 * (Em * k1m + 2 * Hm * (k2m + k3m) + k4m),
    )


def _spectral_div_bound(U: np.ndarray, grid: Grid) -> float:
    """Upper bound on max|div u| / max-coefficient scale, from coefficients."""
    kd = grid.derivative_wavenumbers
    div = sum(1j * k * U[i] for i, k in enumerate(kd))
    scale = np.sum(grid.parseval_weights * np.sqrt(np.sum(np.abs(U) ** 2, axis=0)))
    if scale == 0:
        return 0.0
    return float(np.sum(grid.parseval_weights * np.abs(div)) / scale)


def _advance(hp, hm, grid, dt, nu, e, scheme, nonlinear):
    if scheme == "rk4_explicit":
        hp, hm = _rk4_explicit(hp, hm, grid, dt, nu, e, nonlinear)
    else:
        hp, hm = _rk4_if(hp, hm, grid, dt, nu, e, nonlinear)
    if not (np.all(np.isfinite(hp)) and np.all(np.isfinite(hm))):
        raise SimulationError(f"non-finite state after step of size {dt:g}")
    reprojected = False
    if max(_spectral_div_bound(hp, grid), _spectral_div_bound(hm, grid)) > REPROJECT_TOL:
        hp, hm = leray_project_hat(hp, grid), leray_project_hat(hm, grid)
        reprojected = True
    return hp, hm, reprojected


def step(
    state: ElsasserState,
    dt: float,
    nu: float = 0.0,
    e=None,
    scheme: str = "rk4_integrating_factor",
    nonlinear: bool = True,
) -> ElsasserState:
    """Advance ``state`` by one step of size ``dt``.

    ``nonlinear=False`` drops advection and pressure (used to test the
    linear propagator in isolation).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if nu < 0:
        raise ValueError("viscosity must be nonnegative")
    grid = state.grid
    e = default_background(grid.n_dims) if e is None else check_background(e, grid.n_dims)
    hp, hm = state.spectral()
    hp, hm, _ = _advance(hp, hm, grid, dt, nu, e, scheme, nonlinear)
    return ElsasserState.from_spectral(grid, hp, hm, state.time + dt)


Observer = Callable[[ElsasserState], None]


@dataclass
class Integration:
    """Outcome of :func:`integrate`."""

    state: ElsasserState
    steps: int
    reprojections: int


def integrate(
    initial: ElsasserState,
    control: StepControl,
    nu: float = 0.0,
    e=None,
    observers: Iterable[Observer] = (),
    observe_every: int = 1,
    concentration_radius: float | None = None,
    enforce_horizon: bool = True,
    nonlinear: bool = True,
) -> Integration:
    """March from ``initial.time`` to ``control.t_horizon``.

    Observers are called with the initial state, every ``observe_every``
    steps, and with the final state.  The last step is shortened to land
    exactly on the horizon.  When ``concentration_radius`` is given and
    ``enforce_horizon`` is set, horizons that let the data reach the
    periodic seam are rejected before any step is taken.
    """
    if nu < 0:
        raise ValueError("viscosity must be nonnegative")
    if observe_every < 1:
        raise ValueError("observe_every must be >= 1")
    grid = initial.grid
    e = default_background(grid.n_dims) if e is None else check_background(e, grid.n_dims)
    if concentration_radius is not None:
        limit = max_horizon(grid, concentration_radius, initial.max_speed())
        if control.t_horizon > limit + 1e-12:
            msg = (
                f"t_horizon {control.t_horizon:g} exceeds box-validity limit {limit:g} "
                f"(R0 = {concentration_radius:g}, L = {grid.half_length:g})"
            )
            if enforce_horizon:
                raise HorizonError(msg)
            log.warning(msg)

    observers = list(observers)
    state = initial
    for obs in observers:
        obs(state)
    t_end = control.t_horizon
    if t_end <= state.time:
        return Integration(state, 0, 0)

    hp, hm = state.spectral()
    t = state.time
    n_steps = reproj = 0
    while t < t_end:
        dt = cfl_dt(state, control, nu)
        last = t + dt >= t_end * (1 - 1e-14) or math.isclose(t + dt, t_end)
        if last:
            dt = t_end - t
        hp, hm, rp = _advance(hp, hm, grid, dt, nu, e, control.scheme, nonlinear)
        reproj += rp
        n_steps += 1
        t = t_end if last else t + dt
        state = ElsasserState.from_spectral(grid, hp, hm, t)
        if last or n_steps % observe_every == 0:
            for obs in observers:
                obs(state)
    if reproj:
        log.info("divergence re-projected on %d of %d steps", reproj, n_steps)
    return Integration(state, n_steps, reproj)

"""Weighted energy functionals with moving weights and the ghost weight.

Notation: ``<s> = sqrt(1 + |s|^2)``.  The ``+`` family is weighted by
``<x + e t>`` and damped by the ghost denominator ``<e.x - t>^{2 mu}``; the
``-`` family uses ``<x - e t>`` and ``<e.x + t>^{2 mu}``.

* ``E_k``   sum over ``1 <= |a| <= k`` of ``||<.>^{2mu} d^a L||^2`` plus the
  zero-order block ``||<.>^{mu} L||^2``.
* ``Ecal_k = E_k + || |grad|^{-1} L ||^2``.
* ``W_k``   time integral of the ``E_k`` integrand divided by the ghost
  denominators.
* ``V_k``   ``nu`` times the time integral of the ``2 mu``-weighted orders
  ``2..k+1``, the ``mu``-weighted first order and the unweighted zero order.

Sums over orders run over all multi-indices ``a`` of the given length.  Time
integrals use the trapezoidal rule at observer cadence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .dynamics import ElsasserState, check_background, default_background
from .spectral import Grid, multi_indices, to_physical, to_spectral

__all__ = [
    "WeightSpec",
    "EnergyReport",
    "GhostCoordinates",
    "ghost_coordinates",
    "weight_value",
    "weight_field",
    "ghost_q",
    "ghost_q_infinity",
    "derivative_sums",
    "weighted_energy",
    "energy_E_k",
    "energy_modified",
    "inverse_order_energy",
    "ghost_integrand",
    "dissipation_integrand",
    "initial_report",
    "accumulate_W",
    "accumulate_V",
    "observe",
    "sobolev_embedding_constant",
    "EnergyTracker",
]

MU_MIN, MU_MAX = 0.5, 2.0 / 3.0


@dataclass(frozen=True)
class WeightSpec:
    """Weight exponent ``mu``, derivative order ``k`` and background ``e``.

    ``literal_minus_weight`` evaluates the ``-`` family of ``E_k`` with
    ``<x + e t>`` instead of ``<x - e t>``.
    """

    grid: Grid
    mu: float = 0.6
    k: int | None = None
    e: tuple | None = None
    literal_minus_weight: bool = False

    def __post_init__(self):
        n = self.grid.n_dims
        if not MU_MIN < self.mu < MU_MAX:
            raise ValueError(f"mu must lie in (1/2, 2/3), got {self.mu}")
        k = n + 3 if self.k is None else int(self.k)
        if k < n + 3:
            raise ValueError(f"k must satisfy k >= n + 3 = {n + 3}, got {k}")
        e = default_background(n) if self.e is None else check_background(self.e, n)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "e", tuple(float(c) for c in e))


@dataclass(frozen=True)
class GhostCoordinates:
    sigma_plus: np.ndarray
    sigma_minus: np.ndarray


def ghost_coordinates(grid: Grid, t: float, e) -> GhostCoordinates:
    """Characteristic coordinates ``sigma_pm = +-e.x - t``."""
    ex = sum(ei * c for ei, c in zip(e, grid.coords))
    ex = np.broadcast_to(ex, grid.shape)
    return GhostCoordinates(ex - t, -ex - t)


def weight_value(x, t: float, sign: int, lam: float, e) -> float:
    """``<x + sign e t>^lam`` at a single point."""
    y = np.asarray(x, dtype=float) + sign * t * np.asarray(e, dtype=float)
    return float((1.0 + y @ y) ** (lam / 2.0))


def weight_field(grid: Grid, t: float, sign: int, lam: float, e) -> np.ndarray:
    """``<x + sign e t>^lam`` on the grid (unwrapped, box-centred coordinates)."""
    r2 = sum((c + sign * t * ei) ** 2 for c, ei in zip(grid.coords, e))
    return np.broadcast_to((1.0 + r2) ** (lam / 2.0), grid.shape)


# --- ghost weight q(s) ----------------------------------------------------

_Q_STEP = 0.25
_Q_SPAN = 1024.0
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def ghost_q_infinity(mu: float) -> float:
    """``q(inf) = int_0^inf <tau>^{-2 mu} dtau`` in closed form."""
    _check_mu(mu)
    return 0.5 * math.sqrt(math.pi) * special.gamma(mu - 0.5) / special.gamma(mu)


def _check_mu(mu: float) -> None:
    if not MU_MIN < mu < MU_MAX:
        raise ValueError(f"mu must lie in (1/2, 2/3), got {mu}")


def _gl_integral(a: np.ndarray, b: np.ndarray, mu: float) -> np.ndarray:
    half = 0.5 * (b - a)
    tau = (0.5 * (a + b))[..., None] + half[..., None] * _GL_X
    return half * np.sum(_GL_W * (1.0 + tau**2) ** (-mu), axis=-1)


@lru_cache(maxsize=8)
def _q_table(mu: float) -> np.ndarray:
    nodes = np.arange(0.0, _Q_SPAN + _Q_STEP / 2, _Q_STEP)
    panels = _gl_integral(nodes[:-1], nodes[1:], mu)
    return np.concatenate([[0.0], np.cumsum(panels)])


def ghost_q(s, mu: float):
    """``q(s) = int_0^s <tau>^{-2 mu} dtau`` (odd, bounded by ``q(inf)``).

    Table of panel integrals plus a 16-point Gauss-Legendre correction on
    the last partial panel; beyond the table the closed-form limit minus an
    adaptive tail integral is used.
    """
    _check_mu(mu)
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    table = _q_table(mu)
    inside = a <= _Q_SPAN
    j = np.minimum((np.where(inside, a, 0.0) / _Q_STEP).astype(int), table.size - 1)
    base = j * _Q_STEP
    out = table[j] + _gl_integral(base, np.where(inside, a, base), mu)
    if not np.all(inside):
        qinf = ghost_q_infinity(mu)
        f = lambda tau: (1.0 + tau * tau) ** (-mu)  # noqa: E731
        tail = np.vectorize(lambda v: integrate.quad(f, v, np.inf, epsabs=1e-13)[0])
        out = np.where(inside, out, qinf - tail(np.where(inside, _Q_SPAN, a)))
    out = np.sign(s) * out
    return float(out) if out.ndim == 0 else out


# --- derivative sums -------------------------------------------------------

_sum_cache: dict = {}


def _component_sums(U: np.ndarray, grid: Grid, max_order: int) -> list[np.ndarray]:
    """``S_j(x) = sum_{|a|=j} sum_c |d^a u_c(x)|^2`` for ``j = 0..max_order``."""
    kd = grid.derivative_wavenumbers
    out = []
    for j in range(max_order + 1):
        acc = np.zeros(grid.shape)
        for a in multi_indices(grid.n_dims, j):
            mult = 1.0
            for k, p in zip(kd, a):
                if p:
                    mult = mult * (1j * k) ** p
            d = to_physical(U * mult, grid)
            acc += np.sum(d * d, axis=0) if d.ndim > grid.n_dims else d * d
        out.append(acc)
    return out


def derivative_sums(state: ElsasserState, max_order: int):
    """Pointwise derivative sums for both families (single-entry cache)."""
    hit = _sum_cache.get("entry")
    if hit is not None and hit[0] is state and hit[1] >= max_order:
        sp, sm = hit[2]
        return sp[: max_order + 1], sm[: max_order + 1]
    hp, hm = state.spectral()
    sums = (_component_sums(hp, state.grid, max_order), _component_sums(hm, state.grid, max_order))
    _sum_cache["entry"] = (state, max_order, sums)
    return sums


class _Weights:
    """Squared weights for one instant."""

    def __init__(self, spec: WeightSpec, t: float):
        g, e, mu = spec.grid, spec.e, spec.mu
        self.rp = weight_field(g, t, +1, 2.0, e)  # <x+et>^2
        self.rm = weight_field(g, t, -1, 2.0, e)
        ex = np.broadcast_to(sum(ei * c for ei, c in zip(e, g.coords)), g.shape)
        self.gp = (1.0 + (ex - t) ** 2) ** (-mu)
        self.gm = (1.0 + (ex + t) ** 2) ** (-mu)
        self.mu = mu

    def high(self, sign: int) -> np.ndarray:
        return (self.rp if sign > 0 else self.rm) ** (2 * self.mu)

    def zero(self, sign: int) -> np.ndarray:
        return (self.rp if sign > 0 else self.rm) ** self.mu

    def ghost(self, sign: int) -> np.ndarray:
        return self.gp if sign > 0 else self.gm


def _integrate(f: np.ndarray, grid: Grid) -> float:
    return float(np.sum(f) * grid.cell_volume)


def weighted_energy(
    state: ElsasserState,
    spec: WeightSpec,
    *,
    high_exponent: float | None = None,
    zero_exponent: float | None = None,
    k: int | None = None,
) -> tuple[float, dict[int, float]]:
    """E_k-type sum with arbitrary weight exponents.

    The orders ``1..k`` carry ``<x +- e t>^{high_exponent}`` and order 0
    carries ``<x +- e t>^{zero_exponent}`` (defaults ``2 mu`` and ``mu``).
    """
    k = spec.k if k is None else k
    hi = 2 * spec.mu if high_exponent is None else high_exponent
    lo = spec.mu if zero_exponent is None else zero_exponent
    grid, t, e = state.grid, state.time, spec.e
    sp, sm = derivative_sums(state, k)
    w_plus = lambda lam: weight_field(grid, t, +1, 2 * lam, e)  # noqa: E731
    w_minus = lambda lam: weight_field(  # noqa: E731
        grid, t, +1 if spec.literal_minus_weight else -1, 2 * lam, e
    )
    per = {0: _integrate(w_plus(lo) * sp[0] + w_minus(lo) * sm[0], grid)}
    hp_, hm_ = w_plus(hi), w_minus(hi)
    for j in range(1, k + 1):
        per[j] = _integrate(hp_ * sp[j] + hm_ * sm[j], grid)
    return sum(per.values()), per


def energy_E_k(state: ElsasserState, spec: WeightSpec) -> tuple[float, dict[int, float]]:
    """Weighted energy ``E_k`` and its per-order shares."""
    return weighted_energy(state, spec)


def _zero_mean_check(U: np.ndarray, u: np.ndarray, grid: Grid, tol: float = 1e-12) -> None:
    mean = np.abs(U[(Ellipsis,) + (0,) * grid.n_dims])
    rms = np.sqrt(np.mean(u**2, axis=grid.axes))
    if np.any(mean > tol * np.maximum(rms, 1e-300)) and np.any(mean > 0):
        raise ValueError("inverse-order energy requires zero-mean fields")


def inverse_order_energy(state: ElsasserState) -> float:
    """``|| |grad|^{-1} Lp ||^2 + || |grad|^{-1} Lm ||^2`` via Parseval."""
    grid = state.grid
    hp, hm = state.spectral()
    _zero_mean_check(hp, state.lambda_plus, grid)
    _zero_mean_check(hm, state.lambda_minus, grid)
    k2 = grid.k_squared
    inv = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)
    w = grid.parseval_weights * inv
    tot = np.sum(w * (np.abs(hp) ** 2).sum(axis=0)) + np.sum(w * (np.abs(hm) ** 2).sum(axis=0))
    return float(tot * grid.volume)


def energy_modified(state: ElsasserState, spec: WeightSpec) -> float:
    """``Ecal_k = E_k + || |grad|^{-1} L+- ||^2``."""
    return energy_E_k(state, spec)[0] + inverse_order_energy(state)


def ghost_integrand(state: ElsasserState, spec: WeightSpec, ghost: bool = True) -> float:
    """Spatial integrand of ``W_k`` at ``state.time``.

    ``ghost=False`` replaces both ghost denominators by 1.
    """
    grid, k = state.grid, spec.k
    sp, sm = derivative_sums(state, k)
    W = _Weights(spec, state.time)
    gp = W.ghost(+1) if ghost else 1.0
    gm = W.ghost(-1) if ghost else 1.0
    hp_, hm_ = W.high(+1) * gp, W.high(-1) * gm
    f = W.zero(+1) * gp * sp[0] + W.zero(-1) * gm * sm[0]
    for j in range(1, k + 1):
        f = f + hp_ * sp[j] + hm_ * sm[j]
    return _integrate(f, grid)


def dissipation_integrand(state: ElsasserState, spec: WeightSpec, nu: float) -> float:
    """Spatial integrand of ``V_k`` at ``state.time`` (includes the ``nu``)."""
    if nu < 0:
        raise ValueError("viscosity must be nonnegative")
    if nu == 0:
        return 0.0
    grid, k = state.grid, spec.k
    sp, sm = derivative_sums(state, k + 1)
    W = _Weights(spec, state.time)
    hp_, hm_ = W.high(+1), W.high(-1)
    f = sp[0] + sm[0] + W.zero(+1) * sp[1] + W.zero(-1) * sm[1]
    for j in range(2, k + 2):
        f = f + hp_ * sp[j] + hm_ * sm[j]
    return nu * _integrate(f, grid)


@dataclass(frozen=True)
class EnergyReport:
    """Snapshot of the energies and running accumulations at ``time``."""

    time: float
    E_k: float
    Ecal_k: float
    E_tilde: float
    Ecal_tilde: float
    V_k: float
    W_k: float
    per_order: dict = field(default_factory=dict)
    w_rate: float = 0.0
    v_rate: float = 0.0


def initial_report(state: ElsasserState, spec: WeightSpec, nu: float = 0.0) -> EnergyReport:
    derivative_sums(state, spec.k + 1)
    E, per = energy_E_k(state, spec)
    Ecal = E + inverse_order_energy(state)
    return EnergyReport(
        time=state.time,
        E_k=E,
        Ecal_k=Ecal,
        E_tilde=E,
        Ecal_tilde=Ecal,
        V_k=0.0,
        W_k=0.0,
        per_order=per,
        w_rate=ghost_integrand(state, spec),
        v_rate=dissipation_integrand(state, spec, nu),
    )


def accumulate_W(report: EnergyReport, state: ElsasserState, spec: WeightSpec, dt: float) -> EnergyReport:
    """Add the trapezoidal ``W_k`` contribution over the last ``dt``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    rate = ghost_integrand(state, spec)
    return replace(report, W_k=report.W_k + 0.5 * dt * (report.w_rate + rate), w_rate=rate)


def accumulate_V(
    report: EnergyReport, state: ElsasserState, spec: WeightSpec, nu: float, dt: float
) -> EnergyReport:
    """Add the trapezoidal ``V_k`` contribution over the last ``dt``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    rate = dissipation_integrand(state, spec, nu)
    return replace(report, V_k=report.V_k + 0.5 * dt * (report.v_rate + rate), v_rate=rate)


def observe(report: EnergyReport, state: ElsasserState, spec: WeightSpec, nu: float) -> EnergyReport:
    """Advance a report to ``state.time``: energies, running sups, W_k, V_k."""
    dt = state.time - report.time
    if dt <= 0:
        raise ValueError("observation times must increase")
    derivative_sums(state, spec.k + 1)
    E, per = energy_E_k(state, spec)
    Ecal = E + inverse_order_energy(state)
    r = accumulate_W(report, state, spec, dt)
    r = accumulate_V(r, state, spec, nu, dt)
    return replace(
        r,
        time=state.time,
        E_k=E,
        Ecal_k=Ecal,
        E_tilde=max(report.E_tilde, E),
        Ecal_tilde=max(report.Ecal_tilde, Ecal),
        per_order=per,
    )


class EnergyTracker:
    """Observer that keeps the sequence of :class:`EnergyReport` snapshots."""

    def __init__(self, spec: WeightSpec, nu: float = 0.0):
        self.spec = spec
        self.nu = nu
        self.reports: list[EnergyReport] = []

    def __call__(self, state: ElsasserState) -> None:
        if not self.reports:
            self.reports.append(initial_report(state, self.spec, self.nu))
        else:
            self.reports.append(observe(self.reports[-1], state, self.spec, self.nu))

    @property
    def latest(self) -> EnergyReport:
        return self.reports[-1]


# --- weighted Sobolev embedding -------------------------------------------


def sobolev_embedding_constant(
    f: np.ndarray,
    t: float,
    lam: float,
    spec: WeightSpec,
    mu_ghost: float | None = None,
    sign: int = +1,
) -> float:
    """Ratio ``||w f||_inf / sum_{|b| <= [n/2]+1} ||w d^b f||_2``.

    ``w = <x + sign e t>^lam``, divided by ``<e.x - sign t>^{mu_ghost}`` when
    ``mu_ghost`` is given.
    """
    grid = spec.grid
    f = np.asarray(f, dtype=float)
    if not np.any(f):
        raise ValueError("embedding ratio undefined for the zero field")
    w = weight_field(grid, t, sign, lam, spec.e)
    if mu_ghost is not None:
        ex = sum(ei * c for ei, c in zip(spec.e, grid.coords))
        w = w * (1.0 + (ex - sign * t) ** 2) ** (-mu_ghost / 2.0)
    F = to_spectral(f, grid)
    kd = grid.derivative_wavenumbers
    denom = 0.0
    for order in range(grid.n_dims // 2 + 2):
        for b in multi_indices(grid.n_dims, order):
            mult = 1.0
            for k, p in zip(kd, b):
                if p:
                    mult = mult * (1j * k) ** p
            d = to_physical(F * mult, grid)
            denom += math.sqrt(_integrate((w * d) ** 2, grid))
    return float(np.max(np.abs(w * f)) / denom)

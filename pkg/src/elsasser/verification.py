"""Runtime monitors and independent checks.

Every monitor reduces to a :class:`MonitorFit`: two sampled series and the
smallest constant ``C`` with ``lhs <= C * rhs`` at every sample where
``rhs > 0``.  The a priori inequalities, the theorem-conclusion bound, the
weighted pressure bounds and the conservation budgets are all expressed
this way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .dynamics import ElsasserState, pressure_hat
from .energies import EnergyTracker, WeightSpec, weight_field
from .spectral import Grid, multi_indices, spectral_norm_sq, to_physical

__all__ = [
    "MonitorFit",
    "fit_constant",
    "make_fit",
    "ConservationMonitor",
    "conservation_check",
    "apriori_monitor",
    "apriori_from_series",
    "PRESSURE_LEMMAS",
    "pressure_lemma_integrands",
    "pressure_lemma_check",
    "PressureLemmaMonitor",
    "A2Estimate",
    "a2_constant_estimate",
    "doubling_scales",
    "a2_plateaus",
    "a2_diverges",
    "ghost_damping_exponent",
]


def fit_constant(lhs, rhs) -> float:
    """``max lhs/rhs`` over samples with ``rhs > 0`` (0 if there are none)."""
    best = 0.0
    for a, b in zip(lhs, rhs):
        if b > 0:
            best = max(best, a / b)
    return best


@dataclass(frozen=True)
class MonitorFit:
    name: str
    times: tuple
    lhs_series: tuple
    rhs_series: tuple
    fitted_C: float
    ceiling: float | None = None

    @property
    def passed(self) -> bool:
        return self.ceiling is None or self.fitted_C <= self.ceiling


def make_fit(name, times, lhs, rhs, ceiling=None) -> MonitorFit:
    return MonitorFit(
        name, tuple(times), tuple(lhs), tuple(rhs), fit_constant(lhs, rhs), ceiling
    )


# --- conservation -----------------------------------------------------------


class ConservationMonitor:
    """Observer for ``1/2 d/dt ||L+-||^2 + nu ||grad L+-||^2 = 0``.

    Records both squared norms, the trapezoidal dissipation integral and the
    relative divergence at every call.  For ``nu = 0`` the budget reduces to
    conservation of each Elsasser energy.
    """

    def __init__(self, nu: float = 0.0):
        self.nu = nu
        self.times: list[float] = []
        self.energy = {+1: [], -1: []}
        self.dissipated = {+1: [], -1: []}
        self.divergence: list[float] = []
        self._grad_prev = {+1: 0.0, -1: 0.0}

    def __call__(self, state: ElsasserState) -> None:
        grid = state.grid
        hp, hm = state.spectral()
        kd2 = grid.kd_squared
        for sign, U in ((+1, hp), (-1, hm)):
            e = spectral_norm_sq(U, grid)
            g = float(np.sum(grid.parseval_weights * kd2 * (np.abs(U) ** 2).sum(axis=0)) * grid.volume)
            if self.times:
                dt = state.time - self.times[-1]
                d = self.dissipated[sign][-1] + 0.5 * dt * (self._grad_prev[sign] + g)
            else:
                d = 0.0
            self.energy[sign].append(e)
            self.dissipated[sign].append(d)
            self._grad_prev[sign] = g
        self.divergence.append(state.divergence_max())
        self.times.append(state.time)

    def residuals(self, sign: int) -> list[float]:
        """Relative budget residual ``|dE/2 + nu D| / (E0/2)`` per sample."""
        E = self.energy[sign]
        if not E or E[0] == 0.0:
            return [0.0 if e == 0.0 else math.inf for e in E]
        return [
            abs(0.5 * (e - E[0]) + self.nu * d) / (0.5 * E[0])
            for e, d in zip(E, self.dissipated[sign])
        ]


def conservation_check(monitor: ConservationMonitor, ceiling: float | None = None):
    """Budget drift per unit time for each family, as ``(plus, minus)`` fits.

    The right-hand series is ``max(t, 1)``, so the fitted constant is the
    largest relative residual per unit elapsed time.
    """
    rhs = [max(t, 1.0) for t in monitor.times]
    return tuple(
        make_fit(f"balance_{name}", monitor.times, monitor.residuals(sign), rhs, ceiling)
        for sign, name in ((+1, "plus"), (-1, "minus"))
    )


# --- a priori inequalities ------------------------------------------------


def apriori_monitor(
    tracker: EnergyTracker,
    viscous: bool,
    epsilon: float | None = None,
    ceilings: tuple[float | None, float | None] = (None, None),
):
    """Fit the a priori inequality and the theorem-conclusion constant.

    Inviscid: ``E + W <= C (E(0) + W Etilde^{1/2})`` and ``E + W <= C0 eps``.
    Viscous: ``Ecal + V + W <= C (Ecal(0) + W Ecaltilde^{1/2})`` and
    ``Ecal + V + W <= C0 eps``.  Returns ``(inequality_fit, theorem_fit)``;
    the second is ``None`` when ``epsilon`` is not supplied.
    """
    reps = tracker.reports
    if viscous:
        energy = [r.Ecal_k for r in reps]
        tilde = [r.Ecal_tilde for r in reps]
    else:
        energy = [r.E_k for r in reps]
        tilde = [r.E_tilde for r in reps]
    return apriori_from_series(
        [r.time for r in reps], energy, tilde, [r.V_k for r in reps], [r.W_k for r in reps],
        viscous, epsilon, ceilings,
    )


def apriori_from_series(times, energy, tilde, V, W, viscous, epsilon=None, ceilings=(None, None)):
    """:func:`apriori_monitor` on plain series (``energy`` is E_k or Ecal_k)."""
    V = V if viscous else [0.0] * len(energy)
    lhs = [a + v + w for a, v, w in zip(energy, V, W)]
    rhs = [energy[0] + w * math.sqrt(s) for w, s in zip(W, tilde)] if energy else []
    tag = "viscous" if viscous else "inviscid"
    ineq = make_fit(f"apriori_{tag}", times, lhs, rhs, ceilings[0])
    if epsilon is None:
        return ineq, None
    if not epsilon > 0:
        raise ValueError("theorem-constant fit needs epsilon > 0")
    thm = make_fit(f"theorem_{tag}", times, lhs, [epsilon] * len(lhs), ceilings[1])
    return ineq, thm


# --- weighted pressure bounds -----------------------------------------------

PRESSURE_LEMMAS = ("P0", "P1", "P2", "P3", "L32")


def _pressure_derivative_sums(P: np.ndarray, grid: Grid, k: int):
    """``T_j = sum_{|a|=j} |d^a p|^2`` (j <= k) and
    ``G_j = sum_{|a|=j} |grad d^a p|^2`` (j <= k-1)."""
    kd = grid.derivative_wavenumbers
    T = [np.zeros(grid.shape) for _ in range(k + 1)]
    G = [np.zeros(grid.shape) for _ in range(k)]
    for order in range(k + 1):
        for b in multi_indices(grid.n_dims, order):
            mult = 1.0
            for kk, p in zip(kd, b):
                if p:
                    mult = mult * (1j * kk) ** p
            d2 = to_physical(P * mult, grid) ** 2
            T[order] += d2
            if order >= 1:
                # grad d^a p over |a| = order-1 hits d^b once per nonzero entry of b
                G[order - 1] += sum(1 for p in b if p) * d2
    return T, G


def pressure_lemma_integrands(state: ElsasserState, spec: WeightSpec) -> dict[str, float]:
    """Instantaneous spatial quantities behind the weighted pressure bounds.

    ``P0`` is ``||p||_2`` (integrated in time as an L1 norm).  The others are
    squared weighted L2 norms summed over both signs and all admissible
    multi-indices: ``<x+-et>^{mu} d^a p`` for ``|a| <= k`` (P1), and
    ``grad d^a p`` for ``|a| <= k-1`` weighted by
    ``<x+-et>^{2mu-1}<x-+et>^{mu}`` (P2), ``<x+-et>^{3mu-1}`` (P3) and
    ``<x+-et>^{2mu}`` (L32).
    """
    grid, mu, k, e, t = state.grid, spec.mu, spec.k, spec.e, state.time
    P = pressure_hat(state.lambda_plus, state.lambda_minus, grid)
    T, G = _pressure_derivative_sums(P, grid, k)
    Tsum, Gsum = sum(T), sum(G)
    dv = grid.cell_volume
    r2 = {s: weight_field(grid, t, s, 2.0, e) for s in (+1, -1)}
    w = lambda s, lam: r2[s] ** lam  # noqa: E731  (<x + s e t>^{2 lam})
    out = {"P0": math.sqrt(float(np.sum(T[0]) * dv))}
    out["P1"] = float(sum(np.sum(w(s, mu) * Tsum) for s in (1, -1)) * dv)
    out["P2"] = float(sum(np.sum(w(s, 2 * mu - 1) * w(-s, mu) * Gsum) for s in (1, -1)) * dv)
    out["P3"] = float(sum(np.sum(w(s, 3 * mu - 1) * Gsum) for s in (1, -1)) * dv)
    out["L32"] = float(sum(np.sum(w(s, 2 * mu) * Gsum) for s in (1, -1)) * dv)
    return out


def pressure_lemma_check(state: ElsasserState, spec: WeightSpec, which: str) -> float:
    """One entry of :func:`pressure_lemma_integrands`."""
    if which not in PRESSURE_LEMMAS:
        raise ValueError(f"unknown pressure bound {which!r}; choose from {PRESSURE_LEMMAS}")
    return pressure_lemma_integrands(state, spec)[which]


class PressureLemmaMonitor:
    """Observer accumulating the time-integrated pressure bounds.

    Must be called after the :class:`EnergyTracker` it reads ``W_k`` and
    ``Etilde_k`` from, on the same states.
    """

    def __init__(self, spec: WeightSpec, tracker: EnergyTracker, ceilings: dict | None = None):
        self.spec = spec
        self.tracker = tracker
        self.ceilings = dict(ceilings or {})
        self.times: list[float] = []
        self.acc = {w: [] for w in PRESSURE_LEMMAS}
        self.rhs = {w: [] for w in PRESSURE_LEMMAS}
        self._prev: dict[str, float] = {}

    def __call__(self, state: ElsasserState) -> None:
        rep = self.tracker.latest
        if rep.time != state.time:
            raise RuntimeError("PressureLemmaMonitor must run after its EnergyTracker")
        cur = pressure_lemma_integrands(state, self.spec)
        dt = state.time - self.times[-1] if self.times else 0.0
        for w in PRESSURE_LEMMAS:
            prev = self.acc[w][-1] if self.acc[w] else 0.0
            self.acc[w].append(prev + 0.5 * dt * (self._prev.get(w, 0.0) + cur[w]))
        self._prev = cur
        self.times.append(state.time)
        self.rhs["P0"].append(rep.W_k)
        both = math.sqrt(rep.E_tilde * rep.W_k)
        for w in PRESSURE_LEMMAS[1:]:
            self.rhs[w].append(both)

    def lhs(self, which: str) -> list[float]:
        if which == "P0":
            return list(self.acc["P0"])
        return [math.sqrt(v) for v in self.acc[which]]

    def fits(self) -> dict[str, MonitorFit]:
        return {
            w: make_fit(f"pressure_{w}", self.times, self.lhs(w), self.rhs[w], self.ceilings.get(w))
            for w in PRESSURE_LEMMAS
        }


# --- A2 characteristic --------------------------------------------------------


@dataclass(frozen=True)
class A2Estimate:
    """Running supremum of ``avg(w) avg(1/w)`` over probed cubes.

    ``running_sup[i]`` is the supremum over all cubes with side at most
    ``cube_scales[i]``.  A finite probe can show growth but only give
    evidence of boundedness.
    """

    exponent: float
    n_dims: int
    sup_over_cubes: float
    cube_scales: tuple
    running_sup: tuple = field(default=())


def _axis_rule(lo: float, hi: float, nodes: int):
    """Gauss-Legendre nodes on ``[lo, hi]`` with panels graded toward 0."""
    cuts = {lo, hi}
    if lo < 0 < hi:
        cuts.add(0.0)
    p = 0.25
    while p < max(abs(lo), abs(hi)):
        for c in (p, -p):
            if lo < c < hi:
                cuts.add(c)
        p *= 2
    cuts = np.array(sorted(cuts))
    x, w = np.polynomial.legendre.leggauss(nodes)
    a, b = cuts[:-1, None], cuts[1:, None]
    return (0.5 * (a + b) + 0.5 * (b - a) * x).ravel(), (0.5 * (b - a) * w).ravel()


def _cube_averages(exponent: float, lo: np.ndarray, hi: np.ndarray, nodes: int):
    xs, ws = zip(*(_axis_rule(l, h, nodes) for l, h in zip(lo, hi)))
    grids = np.meshgrid(*xs, indexing="ij", sparse=True)
    wts = ws[0]
    for w in ws[1:]:
        wts = np.multiply.outer(wts, w)
    r2 = sum(g**2 for g in grids)
    f = (1.0 + r2) ** (exponent / 2.0)
    total = wts.sum()
    return float((wts * f).sum() / total), float((wts / f).sum() / total)


def a2_constant_estimate(
    exponent: float,
    n_dims: int,
    scales,
    offsets=(0.0, 0.25, 0.5, 1.0, 2.0),
    nodes: int | None = None,
) -> A2Estimate:
    """Estimate the A2 characteristic of ``w = <x>^exponent`` in ``R^n``.

    Cubes of side ``s`` (for each ``s`` in ``scales``) are centred at
    ``s * c`` for ``c`` in ``offsets^n``.  Averages use tensor Gauss-Legendre
    rules graded toward the origin.
    """
    scales = sorted(float(s) for s in scales)
    if not scales or scales[0] <= 0:
        raise ValueError("scales must be positive")
    nodes = nodes or (8 if n_dims == 2 else 4)
    best = 0.0
    running = []
    for s in scales:
        for off in product(offsets, repeat=n_dims):
            c = s * np.asarray(off)
            aw, awi = _cube_averages(exponent, c - s / 2, c + s / 2, nodes)
            best = max(best, aw * awi)
        running.append(best)
    return A2Estimate(exponent, n_dims, best, tuple(scales), tuple(running))


def doubling_scales(start: float = 1.0, stop: float = 1e4) -> list[float]:
    out = [start]
    while out[-1] * 2 < stop:
        out.append(out[-1] * 2)
    if out[-1] < stop:
        out.append(stop)
    return out


def a2_plateaus(est: A2Estimate, last: int = 4, rtol: float = 0.01) -> bool:
    """True when each of the last ``last`` refinements grows by < ``rtol``."""
    r = est.running_sup
    if len(r) < last + 1:
        return False
    return all(r[i + 1] <= r[i] * (1 + rtol) for i in range(len(r) - last - 1, len(r) - 1))


def a2_diverges(est: A2Estimate, min_factor: float = 1.2) -> bool:
    """True when every doubling of the scale multiplies the estimate by > ``min_factor``."""
    r, s = est.running_sup, est.cube_scales
    steps = [(r[i + 1] / r[i], s[i + 1] / s[i]) for i in range(len(r) - 1)]
    return all(g > min_factor ** math.log2(q) for g, q in steps)


# --- ghost damping ----------------------------------------------------------


def ghost_damping_exponent(times, W, T_values=(2.0, 4.0, 8.0)) -> float:
    """Least-squares slope of ``log(W(2T) - W(T))`` against ``log T``.

    ``W`` is linearly interpolated between samples.  For transported data
    the increments decay like ``T^{1 - 2 mu}``.
    """
    times = np.asarray(times, float)
    W = np.asarray(W, float)
    T = np.asarray(T_values, float)
    if 2 * T.max() > times[-1] + 1e-12:
        raise ValueError(f"series ends at t = {times[-1]:g}, need t >= {2 * T.max():g}")
    D = np.interp(2 * T, times, W) - np.interp(T, times, W)
    if np.any(D <= 0):
        raise ValueError("ghost energy increments must be positive")
    return float(np.polyfit(np.log(T), np.log(D), 1)[0])

"""Experiment orchestration and report emission.

:func:`run_experiment` wires initial data, the integrator and the
observers for each viscosity of a config.  :func:`emit_report` writes
``series.csv`` (fixed columns, 17 significant digits) and ``summary.json``
(stable key order).  Wall-clock time goes to a separate ``timing.json`` so
that the first two files are byte-identical across repeated runs.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .config import SimConfig, config_to_dict, validate_config
from .dynamics import ElsasserState
from .energies import EnergyTracker, WeightSpec
from .initial_data import (
    InitialDataReport,
    alfven_exact,
    linear_alfven_profile,
    measure_epsilon,
    sample_localized_divfree,
)
from .integrator import HorizonError, StepControl, integrate, max_horizon
from .spectral import make_grid
from .verification import (
    PRESSURE_LEMMAS,
    ConservationMonitor,
    MonitorFit,
    PressureLemmaMonitor,
    apriori_from_series,
    apriori_monitor,
    conservation_check,
    make_fit,
)

__all__ = [
    "RunReport",
    "run_experiment",
    "run_single",
    "epsilon_sweep",
    "largest_passing_epsilon",
    "refinement_study",
    "emit_report",
    "series_columns",
    "render_summary",
    "read_series",
    "summary_from_series",
]

log = logging.getLogger(__name__)


@dataclass
class RunReport:
    config: dict
    nu: float
    columns: list
    rows: list
    monitors: list
    initial: InitialDataReport
    steps: int
    reprojections: int
    t_horizon: float
    viscous: bool = False
    extras: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def failing(self) -> list[str]:
        return [m.name for m in self.monitors if not m.passed]

    @property
    def passed(self) -> bool:
        return not self.failing

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows], dtype=float)


def series_columns(k: int, pressure: bool) -> list[str]:
    cols = ["t", "E_k", "Ecal_k", "E_tilde", "Ecal_tilde", "V_k", "W_k"]
    cols += [f"share_{j}" for j in range(k + 1)]
    cols += ["energy_plus", "energy_minus", "drift_plus", "drift_minus", "div_max", "transport_err"]
    if pressure:
        for w in PRESSURE_LEMMAS:
            cols += [f"{w}_lhs", f"{w}_rhs"]
    return cols


class _TransportError:
    """Max deviation of ``Lambda+`` from the closed-form profile, per sample."""

    def __init__(self, shape, amplitude, width, nu, e):
        self.args = (shape, amplitude, width, nu, e)
        self.values: list[float] = []
        self.minus: list[float] = []

    def __call__(self, state: ElsasserState) -> None:
        shape, amp, width, nu, e = self.args
        exact = alfven_exact(state.grid, shape, amp, state.time, nu, e, width)
        self.values.append(float(np.max(np.abs(state.lambda_plus - exact))))
        self.minus.append(float(np.max(np.abs(state.lambda_minus))))


def _initial_state(cfg: SimConfig, grid, spec, viscous):
    d = cfg.initial_data
    if d.kind == "generic":
        return sample_localized_divfree(
            grid, d.target_eps, d.correlation_length, d.seed, spec, d.mask_radius, viscous
        )
    shape = "gaussian_ring" if d.kind == "linear-alfven" else "single_mode"
    return linear_alfven_profile(grid, shape, d.amplitude, cfg.background, d.width)


def _horizon(cfg: SimConfig, grid, state, R0) -> tuple[float, bool]:
    """Return ``(t_horizon, enforce)`` for the run."""
    if cfg.initial_data.kind == "single-mode":
        # periodic in x1: the closed form is exact on the torus
        return (grid.half_length if cfg.t_horizon is None else cfg.t_horizon), False
    limit = max_horizon(grid, R0, state.max_speed())
    if cfg.t_horizon is None:
        return limit, True
    if cfg.t_horizon > limit:
        log.warning("t_horizon %g exceeds box-validity limit %g; continuing", cfg.t_horizon, limit)
    return cfg.t_horizon, False


def run_single(cfg: SimConfig, nu: float) -> RunReport:
    """One run of ``cfg`` at viscosity ``nu``."""
    t0 = time.perf_counter()
    g = cfg.grid
    grid = make_grid(g.n_dims, g.points_per_dim, g.half_length)
    spec = WeightSpec(grid, cfg.mu, cfg.order, cfg.background, cfg.literal_minus_weight)
    # sweep points share one data set and the viscous functional
    viscous = nu > 0 or cfg.is_sweep
    state = _initial_state(cfg, grid, spec, viscous)
    initial = replace(measure_epsilon(state, spec, viscous), seed=cfg.initial_data.seed
                      if cfg.initial_data.kind == "generic" else None)
    t_end, enforce = _horizon(cfg, grid, state, initial.concentration_radius)

    tracker = EnergyTracker(spec, nu)
    cons = ConservationMonitor(nu)
    observers = [tracker, cons]
    pressure = PressureLemmaMonitor(spec, tracker, cfg.ceilings.pressure) if cfg.pressure_monitor else None
    if pressure is not None:
        observers.append(pressure)
    transport = None
    if cfg.initial_data.kind != "generic":
        shape = "gaussian_ring" if cfg.initial_data.kind == "linear-alfven" else "single_mode"
        transport = _TransportError(shape, cfg.initial_data.amplitude, cfg.initial_data.width, nu, cfg.background)
        observers.append(transport)

    control = StepControl(t_end, cfg.cfl_safety, cfg.dt_max, cfg.scheme)
    try:
        result = integrate(
            state, control, nu, cfg.background, observers, cfg.observe_every,
            initial.concentration_radius if enforce else None,
        )
    except HorizonError as exc:
        raise HorizonError(f"nu = {nu:g}: {exc}") from exc

    ceil = cfg.ceilings
    monitors: list[MonitorFit] = list(conservation_check(cons, ceil.balance))
    ineq, thm = apriori_monitor(
        tracker, viscous, initial.epsilon if initial.epsilon > 0 else None,
        (ceil.apriori, ceil.theorem),
    )
    monitors.append(ineq)
    if thm is not None:
        monitors.append(thm)
    if pressure is not None:
        monitors.extend(pressure.fits().values())
    if transport is not None:
        monitors.append(
            make_fit("transport", cons.times, transport.values, [1.0] * len(transport.values), ceil.transport)
        )

    columns = series_columns(spec.k, pressure is not None)
    rows = []
    res_p, res_m = cons.residuals(+1), cons.residuals(-1)
    for i, rep in enumerate(tracker.reports):
        E = rep.E_k
        shares = [rep.per_order.get(j, 0.0) / E if E > 0 else 0.0 for j in range(spec.k + 1)]
        row = [rep.time, E, rep.Ecal_k, rep.E_tilde, rep.Ecal_tilde, rep.V_k, rep.W_k, *shares,
               cons.energy[+1][i], cons.energy[-1][i], res_p[i], res_m[i], cons.divergence[i],
               transport.values[i] if transport else math.nan]
        if pressure is not None:
            for w in PRESSURE_LEMMAS:
                row += [pressure.lhs(w)[i], pressure.rhs[w][i]]
        rows.append(row)

    extras = {}
    if transport is not None:
        extras["transport_max_error"] = max(transport.values)
        extras["lambda_minus_max"] = max(transport.minus)
    return RunReport(
        config=config_to_dict(cfg), nu=nu, columns=columns, rows=rows, monitors=monitors,
        initial=initial, steps=result.steps, reprojections=result.reprojections,
        t_horizon=t_end, viscous=viscous, extras=extras, wall_clock=time.perf_counter() - t0,
    )


def run_experiment(cfg: SimConfig, threads: int = 1) -> list[RunReport]:
    """One :class:`RunReport` per viscosity in ``cfg.nu``.

    Sweep points are independent; with ``threads > 1`` they run in worker
    processes.  Results are ordered as in ``cfg.nu`` either way.
    """
    if threads > 1 and len(cfg.nu) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run_single, [cfg] * len(cfg.nu), cfg.nu))
    return [run_single(cfg, nu) for nu in cfg.nu]


def epsilon_sweep(cfg: SimConfig, eps_values, threads: int = 1) -> list[RunReport]:
    """One run per target epsilon (first viscosity of ``cfg``), same seed."""
    cfgs = [replace(cfg, nu=cfg.nu[:1], initial_data=replace(cfg.initial_data, target_eps=float(v)))
            for v in eps_values]
    return _map_single(cfgs, threads)


def largest_passing_epsilon(reports) -> float | None:
    """Largest measured epsilon such that every run up to it passes its theorem fit.

    Runs are ordered by measured epsilon.  ``None`` when the smallest fails.
    """
    best = None
    for rep in sorted(reports, key=lambda r: r.initial.epsilon):
        thm = [m for m in rep.monitors if m.name.startswith("theorem_")]
        if not thm or not thm[0].passed:
            break
        best = rep.initial.epsilon
    return best


def refinement_study(cfg: SimConfig, sizes, threads: int = 1) -> list[RunReport]:
    """The same physical scenario at several ``points_per_dim`` (first viscosity)."""
    cfgs = [replace(cfg, nu=cfg.nu[:1], grid=replace(cfg.grid, points_per_dim=int(n))) for n in sizes]
    return _map_single(cfgs, threads)


def _map_single(cfgs, threads):
    for c in cfgs:
        validate_config(c)
    if threads > 1 and len(cfgs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run_single, cfgs, [c.nu[0] for c in cfgs]))
    return [run_single(c, c.nu[0]) for c in cfgs]


# --- emission -------------------------------------------------------------


def _fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _jsonable(x):
    if isinstance(x, float):
        return None if math.isnan(x) else float(format(x, ".17g"))
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def render_summary(report: RunReport) -> dict:
    ini = report.initial
    return {
        "config": report.config,
        "nu": report.nu,
        "viscous": report.viscous,
        "t_horizon": report.t_horizon,
        "steps": report.steps,
        "reprojections": report.reprojections,
        "initial_data": {
            "epsilon_inviscid": ini.epsilon_inviscid,
            "epsilon_viscous": ini.epsilon_viscous,
            "concentration_radius": ini.concentration_radius,
            "seed": ini.seed,
        },
        "monitors": [
            {"name": m.name, "fitted_C": m.fitted_C, "ceiling": m.ceiling, "passed": m.passed}
            for m in report.monitors
        ],
        "extras": report.extras,
        "failing": report.failing,
        "passed": report.passed,
    }


def _series_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report file {path}: {exc.strerror}") from exc


def emit_report(report: RunReport, out_dir: str) -> int:
    """Write ``series.csv``, ``summary.json`` and ``timing.json`` to ``out_dir``.

    Returns the exit status: 1 if any monitor exceeds its ceiling, else 0.
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc.strerror}") from exc
    _write(os.path.join(out_dir, "series.csv"), _series_text(report.columns, report.rows))
    summary = json.dumps(_jsonable(render_summary(report)), indent=2, allow_nan=False) + "\n"
    _write(os.path.join(out_dir, "summary.json"), summary)
    timing = {"wall_clock_seconds": report.wall_clock, "steps": report.steps}
    _write(os.path.join(out_dir, "timing.json"), json.dumps(timing, indent=2) + "\n")
    return 0 if report.passed else 1


def read_series(path: str) -> tuple[list[str], list[list[float]]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            data = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"cannot read series file {path}: {exc.strerror}") from exc
    if not data:
        raise ValueError(f"{path}: missing header")
    return data[0], [[float(v) for v in r] for r in data[1:]]


def summary_from_series(run_dir: str) -> dict:
    """Recompute the monitor fits of a run from its ``series.csv``.

    Ceilings and the viscous flag come from ``summary.json`` when it is
    present; otherwise no ceilings are applied and the run counts as viscous
    when ``V_k`` is ever positive.
    """
    columns, rows = read_series(os.path.join(run_dir, "series.csv"))
    col = {c: [r[i] for r in rows] for i, c in enumerate(columns)}
    prior = {}
    sp = os.path.join(run_dir, "summary.json")
    if os.path.exists(sp):
        with open(sp, encoding="utf-8") as fh:
            prior = json.load(fh)
    ceilings = {m["name"]: m["ceiling"] for m in prior.get("monitors", [])}
    viscous = prior.get("viscous")
    if viscous is None:
        viscous = any(v > 0 for v in col.get("V_k", []))
    t = col.get("t", [])
    monitors = []
    for sign in ("plus", "minus"):
        name = f"balance_{sign}"
        monitors.append(make_fit(name, t, col[f"drift_{sign}"], [max(x, 1.0) for x in t], ceilings.get(name)))
    energy = col["Ecal_k" if viscous else "E_k"]
    tilde = col["Ecal_tilde" if viscous else "E_tilde"]
    eps = energy[0] if rows and energy[0] > 0 else None
    tag = "viscous" if viscous else "inviscid"
    ineq, thm = apriori_from_series(
        t, energy, tilde, col["V_k"], col["W_k"], viscous, eps,
        (ceilings.get(f"apriori_{tag}"), ceilings.get(f"theorem_{tag}")),
    )
    monitors += [ineq] + ([thm] if thm else [])
    for w in PRESSURE_LEMMAS:
        if f"{w}_lhs" in col:
            name = f"pressure_{w}"
            monitors.append(make_fit(name, t, col[f"{w}_lhs"], col[f"{w}_rhs"], ceilings.get(name)))
    if rows and not any(math.isnan(v) for v in col["transport_err"]):
        monitors.append(make_fit("transport", t, col["transport_err"], [1.0] * len(t), ceilings.get("transport")))
    failing = [m.name for m in monitors if not m.passed]
    return _jsonable({
        "source": os.path.join(run_dir, "series.csv"),
        "rows": len(rows),
        "viscous": viscous,
        "monitors": [
            {"name": m.name, "fitted_C": m.fitted_C, "ceiling": m.ceiling, "passed": m.passed}
            for m in monitors
        ],
        "failing": failing,
        "passed": not failing,
    })

"""Run configuration: JSON documents parsed into a validated :class:`SimConfig`.

Every key is optional.  Unknown keys are rejected.  Range checks happen at
parse time, before any array is allocated, and name the hypothesis they
enforce.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

from .integrator import SCHEMES

__all__ = [
    "ConfigError",
    "SCENARIOS",
    "GridConfig",
    "InitialDataConfig",
    "Ceilings",
    "SimConfig",
    "parse_config",
    "validate_config",
    "load_config",
    "config_to_dict",
]

SCENARIOS = ("generic", "linear-alfven", "single-mode")


class ConfigError(ValueError):
    """Invalid configuration document."""


@dataclass(frozen=True)
class GridConfig:
    n_dims: int = 2
    points_per_dim: int = 256
    half_length: float = 64.0


@dataclass(frozen=True)
class InitialDataConfig:
    """Initial-data block.

    ``generic`` uses ``target_eps``, ``correlation_length``, ``seed`` and
    ``mask_radius``; the two transport scenarios use ``amplitude`` and
    ``width`` (Gaussian-ring scale).
    """

    kind: str = "generic"
    target_eps: float = 1e-4
    correlation_length: float = 4.0
    seed: int = 20240601
    mask_radius: float | None = None
    amplitude: float = 1e-2
    width: float = 1.4


@dataclass(frozen=True)
class Ceilings:
    """Monitor ceilings; ``None`` disables the check."""

    apriori: float | None = 10.0
    theorem: float | None = 30.0
    balance: float | None = 1e-6
    pressure: dict = field(
        default_factory=lambda: {"P0": None, "P1": 0.1, "P2": 0.1, "P3": 0.1, "L32": 0.1}
    )
    transport: float | None = 1e-8


@dataclass(frozen=True)
class SimConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    mu: float = 0.6
    k: int | None = None
    nu: tuple = (0.0,)
    e: tuple | None = None
    scheme: str = "rk4_integrating_factor"
    cfl_safety: float = 0.4
    dt_max: float = 1.0
    t_horizon: float | None = None
    initial_data: InitialDataConfig = field(default_factory=InitialDataConfig)
    observe_every: int = 1
    pressure_monitor: bool = True
    ceilings: Ceilings = field(default_factory=Ceilings)
    output_dir: str = "out"
    literal_minus_weight: bool = False

    @property
    def order(self) -> int:
        return self.grid.n_dims + 3 if self.k is None else self.k

    @property
    def background(self) -> tuple:
        if self.e is None:
            return (1.0,) + (0.0,) * (self.grid.n_dims - 1)
        return self.e

    @property
    def is_sweep(self) -> bool:
        return len(self.nu) > 1


def _take(block: dict, cls, where: str, convert=None):
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be an object")
    names = set(cls.__dataclass_fields__)
    unknown = sorted(set(block) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    kw = dict(block)
    if convert:
        kw = convert(kw)
    return cls(**kw)


def _positive(name, v):
    if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
        raise ConfigError(f"{name} must be a positive number, got {v!r}")


def validate_config(c: SimConfig) -> None:
    """Raise :class:`ConfigError` unless every range and hypothesis check holds."""
    g = c.grid
    if g.n_dims not in (2, 3):
        raise ConfigError(f"grid.n_dims must be 2 or 3 (the theorems cover n = 2, 3), got {g.n_dims}")
    N = g.points_per_dim
    if not (isinstance(N, int) and N >= 16 and N & (N - 1) == 0):
        raise ConfigError(f"grid.points_per_dim must be a power of two >= 16, got {N!r}")
    _positive("grid.half_length", g.half_length)
    if not 0.5 < c.mu < 2.0 / 3.0:
        raise ConfigError(f"mu must lie in (1/2, 2/3) as the existence theorems require, got {c.mu}")
    if c.order < g.n_dims + 3:
        raise ConfigError(f"k must satisfy k >= n + 3 = {g.n_dims + 3}, got {c.order}")
    if not c.nu:
        raise ConfigError("nu list must not be empty")
    for v in c.nu:
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
            raise ConfigError(f"viscosity must satisfy nu >= 0, got {v!r}")
    e = c.background
    if len(e) != g.n_dims:
        raise ConfigError(f"e must have {g.n_dims} components, got {len(e)}")
    if abs(math.sqrt(sum(x * x for x in e)) - 1.0) > 1e-12:
        raise ConfigError("e must be a unit vector (|e| = 1)")
    if c.scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {c.scheme!r}; choose from {SCHEMES}")
    if not 0 < c.cfl_safety <= 1:
        raise ConfigError(f"cfl_safety must lie in (0, 1], got {c.cfl_safety}")
    _positive("dt_max", c.dt_max)
    if c.t_horizon is not None and not (math.isfinite(c.t_horizon) and c.t_horizon >= 0):
        raise ConfigError(f"t_horizon must be >= 0, got {c.t_horizon}")
    if not (isinstance(c.observe_every, int) and c.observe_every >= 1):
        raise ConfigError("observe_every must be an integer >= 1")
    d = c.initial_data
    if d.kind not in SCENARIOS:
        raise ConfigError(f"unknown initial_data.kind {d.kind!r}; choose from {SCENARIOS}")
    if not (math.isfinite(d.target_eps) and d.target_eps >= 0):
        raise ConfigError("initial_data.target_eps must be >= 0")
    _positive("initial_data.correlation_length", d.correlation_length)
    if d.correlation_length < 4 * 2 * g.half_length / N:
        raise ConfigError("initial_data.correlation_length must be at least 4 grid spacings")
    _positive("initial_data.amplitude", d.amplitude)
    _positive("initial_data.width", d.width)
    if d.mask_radius is not None:
        _positive("initial_data.mask_radius", d.mask_radius)
    unknown = set(c.ceilings.pressure) - {"P0", "P1", "P2", "P3", "L32"}
    if unknown:
        raise ConfigError(f"unknown key(s) in ceilings.pressure: {', '.join(sorted(unknown))}")


def parse_config(text: str) -> SimConfig:
    """Parse and validate a JSON configuration document (empty text = defaults)."""
    doc = json.loads(text) if text.strip() else {}
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    top = dict(doc)
    unknown = sorted(set(top) - set(SimConfig.__dataclass_fields__))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    if "grid" in top:
        top["grid"] = _take(top["grid"], GridConfig, "grid")
    if "initial_data" in top:
        top["initial_data"] = _take(top["initial_data"], InitialDataConfig, "initial_data")
    if "ceilings" in top:
        def fill(kw):
            if "pressure" in kw:
                kw["pressure"] = {**Ceilings().pressure, **kw["pressure"]}
            return kw

        top["ceilings"] = _take(top["ceilings"], Ceilings, "ceilings", fill)
    if "nu" in top:
        nu = top["nu"]
        top["nu"] = tuple(nu) if isinstance(nu, list) else (nu,)
    if top.get("e") is not None:
        top["e"] = tuple(float(x) for x in top["e"])
    cfg = SimConfig(**top)
    validate_config(cfg)
    return cfg


def load_config(path) -> SimConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_to_dict(cfg: SimConfig) -> dict:
    """Plain-dict echo with resolved defaults (``k``, ``e``)."""
    d = asdict(replace(cfg, k=cfg.order, e=cfg.background))
    d["nu"] = list(cfg.nu)
    d["e"] = list(d["e"])
    return d

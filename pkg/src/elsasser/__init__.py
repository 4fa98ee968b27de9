"""Pseudo-spectral Elsasser MHD solver with weighted-energy diagnostics.

Incompressible MHD near the constant field ``e`` is written in Elsasser
variables ``L+- = v +- (H - e)`` on a periodic box ``[-L, L)^n``.  The
package integrates the system, tracks the moving-weight energies ``E_k``,
``Ecal_k``, the ghost energy ``W_k`` and the dissipation ``V_k``, and fits
the constants of the associated a priori inequalities.
"""

from .dynamics import ElsasserState, PhysicalState, pressure_solve, rhs
from .energies import EnergyTracker, WeightSpec, energy_E_k, energy_modified, ghost_q, ghost_q_infinity
from .initial_data import linear_alfven_profile, measure_epsilon, sample_localized_divfree
from .integrator import StepControl, integrate, step
from .spectral import Grid, make_grid
from .verification import MonitorFit, a2_constant_estimate, apriori_monitor, conservation_check

__all__ = [
    "ElsasserState",
    "PhysicalState",
    "pressure_solve",
    "rhs",
    "EnergyTracker",
    "WeightSpec",
    "energy_E_k",
    "energy_modified",
    "ghost_q",
    "ghost_q_infinity",
    "linear_alfven_profile",
    "measure_epsilon",
    "sample_localized_divfree",
    "StepControl",
    "integrate",
    "step",
    "Grid",
    "make_grid",
    "MonitorFit",
    "a2_constant_estimate",
    "apriori_monitor",
    "conservation_check",
]

__version__ = "0.1.0"

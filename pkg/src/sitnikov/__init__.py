"""Action minimizers for the planar Sitnikov problem with a collision drive.

The primaries move on a line and collide at every integer time; the third
body moves on the perpendicular axis.  Periodic orbits are found by
minimizing the discrete action over symbol classes, connections between
them by minimizing a renormalized action over growing windows.
"""

from .action import Grid, Trajectory, action_eval, action_gradient, action_hessian, unit_actions
from .config import DEFAULT_OPTIONS, SolverOptions, Tolerances
from .connection import ConnectingOrbit, WindowDivergence, connect
from .kepler import KeplerDrive, sample_x, solve_radial_kepler, x_of_t, xdot_of_t
from .periodic import PeriodicOrbit, gamma, minimize_periodic, multistart, rho
from .symbolic import ConnectionSpec, PeriodicSymbols, SymbolError, block_lengths, in_M, in_S
from .verification import VerificationReport, verify_connection, verify_periodic

__version__ = "0.1.0"

__all__ = [
    "ConnectingOrbit",
    "ConnectionSpec",
    "DEFAULT_OPTIONS",
    "Grid",
    "KeplerDrive",
    "PeriodicOrbit",
    "PeriodicSymbols",
    "SolverOptions",
    "SymbolError",
    "Tolerances",
    "Trajectory",
    "VerificationReport",
    "WindowDivergence",
    "action_eval",
    "action_gradient",
    "action_hessian",
    "block_lengths",
    "connect",
    "gamma",
    "in_M",
    "in_S",
    "minimize_periodic",
    "multistart",
    "rho",
    "sample_x",
    "solve_radial_kepler",
    "unit_actions",
    "verify_connection",
    "verify_periodic",
    "x_of_t",
    "xdot_of_t",
]

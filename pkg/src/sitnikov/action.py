"""
Discrete Lagrangian action on piecewise-linear trajectories.

A trajectory is a list of nodal values on a uniform grid with M nodes per
unit time; every integer time is a node.  The action over the span is

    A = sum_i (y_{i+1} - y_i)**2 / (2 h)  +  sum_i w_i / sqrt(x_i**2 + y_i**2)

i.e. the exact kinetic energy of the linear interpolant plus a trapezoid
rule for the potential (w_i = h, halved at the ends of a non-periodic span).
At integer nodes x_i = 0 exactly, so the potential is 1/|y_i| there.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .kepler import DEFAULT_DRIVE

BC_KINDS = ("periodic", "fixed", "free")


class CollisionError(ValueError):
    """Total collision: y = 0 at an integer time, where the action is infinite."""


@dataclass(frozen=True)
class Grid:
    M: int
    t_start: int
    t_end: int

    def __post_init__(self):
        if self.M < 8:
            raise ValueError("nodes_per_unit M must be >= 8")
        if int(self.t_start) != self.t_start or int(self.t_end) != self.t_end:
            raise ValueError("grid endpoints must be integers")
        if self.t_end <= self.t_start:
            raise ValueError("need t_end > t_start")

    @property
    def h(self) -> float:
        return 1.0 / self.M

    @property
    def span(self) -> int:
        return self.t_end - self.t_start

    @property
    def n_segments(self) -> int:
        return self.span * self.M

    def node_index(self, t: int) -> int:
        """Index of the node at integer time t."""
        return (t - self.t_start) * self.M

    def times(self, periodic: bool = False) -> np.ndarray:
        n = self.n_segments if periodic else self.n_segments + 1
        k = np.arange(n)
        return self.t_start + k / self.M

    def x_values(self, periodic: bool = False) -> np.ndarray:
        n = self.n_segments if periodic else self.n_segments + 1
        unit = unit_x(self.M)
        return unit[np.arange(n) % self.M]


@lru_cache(maxsize=64)
def unit_x(M: int) -> np.ndarray:
    """x(j/M) for j = 0..M-1; read-only."""
    xs = DEFAULT_DRIVE.x(np.arange(M) / M)
    xs[0] = 0.0
    xs.setflags(write=False)
    return xs


@dataclass
class Trajectory:
    grid: Grid
    values: np.ndarray
    bc: str = "free"

    def __post_init__(self):
        if self.bc not in BC_KINDS:
            raise ValueError(f"bc must be one of {BC_KINDS}, got {self.bc!r}")
        self.values = np.asarray(self.values)
        if self.values.dtype.kind != "f":
            self.values = self.values.astype(float)
        expected = self.grid.n_segments if self.periodic else self.grid.n_segments + 1
        if self.values.shape != (expected,):
            raise ValueError(f"expected {expected} nodal values for bc={self.bc}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("trajectory values must be finite")

    @property
    def periodic(self) -> bool:
        return self.bc == "periodic"

    @property
    def h(self) -> float:
        return self.grid.h

    def times(self) -> np.ndarray:
        return self.grid.times(self.periodic)

    def closed_values(self) -> np.ndarray:
        """Values including the node at t_end (repeated for periodic)."""
        if self.periodic:
            return np.append(self.values, self.values[0])
        return self.values

    def closed_times(self) -> np.ndarray:
        return self.grid.times(False)

    def integer_values(self) -> dict[int, float]:
        y = self.closed_values()
        last = self.grid.t_end - 1 if self.periodic else self.grid.t_end
        return {n: float(y[self.grid.node_index(n)]) for n in range(self.grid.t_start, last + 1)}

    def with_values(self, values) -> "Trajectory":
        return Trajectory(self.grid, np.asarray(values, dtype=float), self.bc)

    def at(self, t):
        """Piecewise-linear interpolant (periodic wrap for periodic bc)."""
        t = np.asarray(t, dtype=float)
        if self.periodic:
            span = self.grid.span
            t = self.grid.t_start + np.mod(t - self.grid.t_start, span)
        return np.interp(t, self.closed_times(), self.closed_values())

    def refined(self, factor: int = 2) -> "Trajectory":
        """Same piecewise-linear curve on a grid with factor*M nodes per unit."""
        g = Grid(self.grid.M * factor, self.grid.t_start, self.grid.t_end)
        fine = np.interp(g.times(False), self.closed_times(), self.closed_values())
        if self.periodic:
            fine = fine[:-1]
        return Trajectory(g, fine, self.bc)

    def to_dict(self) -> dict:
        return {
            "grid": {"M": self.grid.M, "t_start": self.grid.t_start, "t_end": self.grid.t_end},
            "bc": self.bc,
            "values": [float(v) for v in self.values],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        g = d["grid"]
        return cls(Grid(int(g["M"]), int(g["t_start"]), int(g["t_end"])), np.array(d["values"], dtype=float), d["bc"])


def lagrangian(t, y, ydot):
    """L = ydot**2 / 2 + 1 / sqrt(x(t)**2 + y**2)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    x = DEFAULT_DRIVE.x(t)
    r = np.hypot(x, y)
    if np.any(r == 0.0):
        raise CollisionError("total collision: y = 0 at an integer time")
    out = 0.5 * np.asarray(ydot, dtype=float) ** 2 + 1.0 / r
    return float(out) if out.ndim == 0 else out


def _weights(traj: Trajectory, dtype=float) -> np.ndarray:
    n = traj.values.shape[0]
    w = np.full(n, traj.h, dtype=dtype)
    if not traj.periodic:
        w[0] *= 0.5
        w[-1] *= 0.5
    return w


def _differences(traj: Trajectory, y: np.ndarray) -> np.ndarray:
    if traj.periodic:
        return np.diff(np.append(y, y[0]))
    return np.diff(y)


def _radius(traj: Trajectory, y: np.ndarray) -> np.ndarray:
    x = traj.grid.x_values(traj.periodic).astype(y.dtype)
    r = np.sqrt(x * x + y * y)
    if np.any(r == 0):
        raise CollisionError("total collision: y = 0 at an integer node")
    return r


def kinetic(traj: Trajectory, y=None):
    y = traj.values if y is None else y
    d = _differences(traj, y)
    return np.sum(d * d) / (2 * traj.h)


def action_eval(traj: Trajectory, y=None):
    """Discrete action of the trajectory (or of alternative nodal values y).

    Works in the dtype of the values, so extended-precision arrays give an
    extended-precision action.
    """
    y = traj.values if y is None else np.asarray(y)
    r = _radius(traj, y)
    w = _weights(traj, y.dtype)
    val = kinetic(traj, y) + np.sum(w / r)
    if not np.isfinite(val):
        raise FloatingPointError("non-finite action")
    return val


def action_gradient(traj: Trajectory, y=None) -> np.ndarray:
    """Exact gradient of ``action_eval`` w.r.t. nodal values.

    Entries for clamped end nodes (bc='fixed') are zero.
    """
    y = traj.values if y is None else np.asarray(y)
    h = traj.h
    r = _radius(traj, y)
    w = _weights(traj, y.dtype)
    g = -w * y / r**3
    if traj.periodic:
        g += (2 * y - np.roll(y, 1) - np.roll(y, -1)) / h
    else:
        d = np.diff(y) / h
        g[:-1] -= d
        g[1:] += d
    if traj.bc == "fixed":
        g[0] = 0.0
        g[-1] = 0.0
    return g


def action_hessian(traj: Trajectory, y=None) -> sp.csc_matrix:
    """Sparse Hessian of the discrete action (tridiagonal, cyclic if periodic)."""
    y = traj.values if y is None else np.asarray(y, dtype=float)
    n = y.shape[0]
    h = traj.h
    x = traj.grid.x_values(traj.periodic)
    r2 = x * x + y * y
    pot = _weights(traj) * (2 * y * y - x * x) / r2**2.5
    main = np.full(n, 2.0 / h) + pot
    off = np.full(n - 1, -1.0 / h)
    H = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    if traj.periodic:
        H[0, n - 1] = -1.0 / h
        H[n - 1, 0] = -1.0 / h
    else:
        H[0, 0] -= 1.0 / h
        H[n - 1, n - 1] -= 1.0 / h
    return H.tocsc()


def unit_actions(traj: Trajectory, y=None) -> np.ndarray:
    """A_{p,p+1} for each unit interval p = t_start .. t_end-1.

    Integer nodes split their trapezoid weight between neighbouring intervals,
    so the entries sum to ``action_eval``.
    """
    y = traj.values if y is None else np.asarray(y)
    yc = np.append(y, y[0]) if traj.periodic else y
    M = traj.grid.M
    h = traj.h
    x = traj.grid.x_values(False)
    pot = 1.0 / np.sqrt(x * x + yc * yc)
    kin = np.diff(yc) ** 2 / (2 * h)
    span = traj.grid.span
    kin_u = kin.reshape(span, M).sum(axis=1)
    body = pot[:-1].reshape(span, M)
    pot_u = h * (body.sum(axis=1) - 0.5 * body[:, 0] + 0.5 * pot[M::M])
    return kin_u + pot_u


def admissible(traj: Trajectory, a) -> bool:
    """a_n * y(n) > 0 at every integer node in the span."""
    return all(a(n) * v > 0 for n, v in traj.integer_values().items())


def sign_violations(traj: Trajectory, a) -> list[int]:
    return [n for n, v in traj.integer_values().items() if not a(n) * v > 0]

"""
Connecting orbits between periodic minimizers.

The renormalized functional J charges each unit interval its action minus
the mean action per unit time of the periodic orbit it should shadow
(b- for p < 0, b+ for p >= 0).  We minimize it on a finite window whose
ends are clamped to gamma- and gamma+, then keep widening the window by a
tail period on each side until the tails have settled.  Outside the window
the orbit is taken to coincide with gamma+- , so with windows aligned to
whole periods and containing 0 the windowed sum is the full J.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .action import Grid, Trajectory, action_gradient, admissible, unit_actions
from .config import DEFAULT_OPTIONS, SolverOptions
from .optimize import minimize_trajectory
from .periodic import PeriodicOrbit, blend, gamma, minimize_periodic
from .symbolic import ConnectionSpec
from .verification import el_residual, tail_distances

logger = logging.getLogger(__name__)


class WindowDivergence(RuntimeError):
    """The window loop hit max_windows without the tails settling."""

    def __init__(self, message, orbit=None):
        super().__init__(message)
        self.orbit = orbit


def gamma_choice(spec: ConnectionSpec) -> tuple[str, str]:
    """Which minimizer ('max' / 'min') to use for gamma- and gamma+.

    Follows the case analysis of the existence proof: the maximal minimizer
    when a and the tail disagree with a = +1, b = -1 at the offset, the
    minimal one in the opposite case.
    """
    km, kp = spec.kpm_offsets()

    def pick(n, b):
        return "max" if spec(n) == 1 and b(n) == -1 else "min"

    return pick(km, spec.b_minus), pick(kp, spec.b_plus)


@dataclass
class ConnectionProblem:
    spec: ConnectionSpec
    gamma_minus: PeriodicOrbit
    gamma_plus: PeriodicOrbit
    window: tuple[int, int]

    @property
    def M(self) -> int:
        return self.gamma_plus.M

    @property
    def rho_minus(self) -> float:
        return self.gamma_minus.rho_hat

    @property
    def rho_plus(self) -> float:
        return self.gamma_plus.rho_hat

    @property
    def offsets(self) -> tuple[int, int]:
        return self.spec.offsets()

    def grid(self, window=None) -> Grid:
        lo, hi = window or self.window
        return Grid(self.M, lo, hi)

    def gamma_values(self, side: str, grid: Grid) -> np.ndarray:
        orbit = self.gamma_minus if side == "-" else self.gamma_plus
        k = grid.t_start * grid.M + np.arange(grid.n_segments + 1)
        return orbit.value_at_nodes(k)

    def normalization(self, p) -> np.ndarray:
        """rho(b-)/N- for p < 0, rho(b+)/N+ for p >= 0."""
        p = np.asarray(p)
        return np.where(
            p < 0,
            self.rho_minus / self.gamma_minus.N,
            self.rho_plus / self.gamma_plus.N,
        )

    def extended(self, periods: int = 1) -> "ConnectionProblem":
        lo, hi = self.window
        return ConnectionProblem(
            self.spec,
            self.gamma_minus,
            self.gamma_plus,
            (lo - periods * self.gamma_minus.N, hi + periods * self.gamma_plus.N),
        )


def initial_window(spec: ConnectionSpec, periods: int = 2) -> tuple[int, int]:
    """[K- - 2N-, K+ + 2N+] widened to whole tail periods and to contain 0."""
    km, kp = spec.offsets()
    nm, np_ = spec.b_minus.N, spec.b_plus.N
    lo = math.floor((km - periods * nm) / nm) * nm
    hi = math.ceil((kp + periods * np_) / np_) * np_
    return min(lo, 0), max(hi, 0)


def build_problem(
    spec: ConnectionSpec,
    M: int = 64,
    opts: Optional[SolverOptions] = None,
    refine: Optional[int] = None,
) -> ConnectionProblem:
    opts = opts or DEFAULT_OPTIONS
    which_minus, which_plus = gamma_choice(spec)
    gm = gamma(spec.b_minus, which_minus, M, opts, refine)
    gp = gamma(spec.b_plus, which_plus, M, opts, refine)
    # continuation may stop at different levels; bring both to the finer grid
    while gm.M < gp.M:
        gm = minimize_periodic(gm.symbols, opts=opts, refine=0, seed_traj=gm.traj.refined(2), y0=gm.seed)
    while gp.M < gm.M:
        gp = minimize_periodic(gp.symbols, opts=opts, refine=0, seed_traj=gp.traj.refined(2), y0=gp.seed)
    return ConnectionProblem(spec, gm, gp, initial_window(spec))


def defect(u: Trajectory, p: int, problem: ConnectionProblem) -> float:
    """a_p(u) = A_{p,p+1}(u) - rho(b+-)/N+- ."""
    g = u.grid
    if not g.t_start <= p < g.t_end:
        raise ValueError(f"interval [{p}, {p + 1}] is outside the window")
    return float(unit_actions(u)[p - g.t_start] - problem.normalization(p))


def defects(u: Trajectory, problem: ConnectionProblem) -> np.ndarray:
    p = np.arange(u.grid.t_start, u.grid.t_end)
    return unit_actions(u) - problem.normalization(p)


def j_windowed(u: Trajectory, problem: ConnectionProblem) -> float:
    return float(np.sum(defects(u, problem)))


def seed_connection(problem: ConnectionProblem, window=None) -> Trajectory:
    """gamma- up to K- - 1, gamma+ from K+ + 1, signed blend in between.

    Integer targets inside are a_n times the mean of |gamma-(n)| and
    |gamma+(n)|; consecutive integers are joined by a cosine blend, which
    has exactly one zero where the signs differ and none otherwise.
    """
    grid = problem.grid(window)
    km, kp = problem.offsets
    left, right = km - 1, kp + 1
    gm = problem.gamma_values("-", grid)
    gp = problem.gamma_values("+", grid)
    t = grid.times(False)
    y = np.where(t <= left, gm, gp)
    M = grid.M

    def node(n):
        return grid.node_index(n)

    targets = {left: gm[node(left)], right: gp[node(right)]}
    for n in range(left + 1, right):
        amp = 0.5 * (abs(gm[node(n)]) + abs(gp[node(n)]))
        targets[n] = problem.spec(n) * amp
    s = np.arange(M) / M
    for n in range(left, right):
        i = node(n)
        y[i : i + M] = blend(1, 1, s, targets[n], targets[n + 1])
    y[node(right)] = targets[right]
    return Trajectory(grid, y, "fixed")


def _carry_over(prev: Trajectory, problem: ConnectionProblem) -> Trajectory:
    """Previous solution on a wider window, padded with gamma+- ."""
    grid = problem.grid()
    gm = problem.gamma_values("-", grid)
    gp = problem.gamma_values("+", grid)
    t = grid.times(False)
    y = np.where(t < prev.grid.t_start, gm, gp)
    i0 = (prev.grid.t_start - grid.t_start) * grid.M
    y[i0 : i0 + prev.values.shape[0]] = prev.values
    return Trajectory(grid, y, "fixed")


@dataclass
class ConnectingOrbit:
    spec: ConnectionSpec
    traj: Trajectory
    j_hat: float
    defects: np.ndarray
    tail_minus: dict          # interval start -> L2 distance to gamma-
    tail_plus: dict           # interval start -> L2 distance to gamma+
    el_residual: float
    grad_norm: float
    converged: bool
    rho_minus: float
    rho_plus: float
    gamma_choice: tuple
    log: list = field(default_factory=list)
    gamma_minus: Optional[PeriodicOrbit] = None
    gamma_plus: Optional[PeriodicOrbit] = None

    def gamma_values(self, side: str) -> np.ndarray:
        orbit = self.gamma_minus if side == "-" else self.gamma_plus
        g = self.traj.grid
        return orbit.value_at_nodes(g.t_start * g.M + np.arange(g.n_segments + 1))

    @property
    def window(self) -> tuple[int, int]:
        return self.traj.grid.t_start, self.traj.grid.t_end

    def outer_tail_residual(self, periods: int = 2) -> tuple[float, float]:
        lo, hi = self.window
        nm, np_ = self.spec.b_minus.N, self.spec.b_plus.N
        left = [v for i, v in self.tail_minus.items() if i < lo + periods * nm]
        right = [v for i, v in self.tail_plus.items() if i >= hi - periods * np_]
        return max(left, default=0.0), max(right, default=0.0)

    def to_dict(self) -> dict:
        return {
            "kind": "connection",
            "spec": self.spec.to_dict(),
            "window": list(self.window),
            "j_hat": self.j_hat,
            "rho_minus": self.rho_minus,
            "rho_plus": self.rho_plus,
            "gamma_choice": list(self.gamma_choice),
            "defects": [float(v) for v in self.defects],
            "tail_residuals": {
                "minus": {str(k): float(v) for k, v in self.tail_minus.items()},
                "plus": {str(k): float(v) for k, v in self.tail_plus.items()},
            },
            "el_residual": self.el_residual,
            "grad_norm": self.grad_norm,
            "converged": self.converged,
            "log": self.log,
            "traj": self.traj.to_dict(),
            "gamma_minus": self.gamma_minus.to_dict() if self.gamma_minus else None,
            "gamma_plus": self.gamma_plus.to_dict() if self.gamma_plus else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConnectingOrbit":
        tails = d["tail_residuals"]
        return cls(
            spec=ConnectionSpec.from_dict(d["spec"]),
            traj=Trajectory.from_dict(d["traj"]),
            j_hat=float(d["j_hat"]),
            defects=np.array(d["defects"], dtype=float),
            tail_minus={int(k): float(v) for k, v in tails["minus"].items()},
            tail_plus={int(k): float(v) for k, v in tails["plus"].items()},
            el_residual=float(d["el_residual"]),
            grad_norm=float(d["grad_norm"]),
            converged=bool(d["converged"]),
            rho_minus=float(d["rho_minus"]),
            rho_plus=float(d["rho_plus"]),
            gamma_choice=tuple(d["gamma_choice"]),
            log=list(d.get("log", [])),
            gamma_minus=PeriodicOrbit.from_dict(d["gamma_minus"]) if d.get("gamma_minus") else None,
            gamma_plus=PeriodicOrbit.from_dict(d["gamma_plus"]) if d.get("gamma_plus") else None,
        )


def tail_residuals(u: Trajectory, problem: ConnectionProblem) -> tuple[dict, dict]:
    """Per-interval L2 distance to gamma- left of K- and to gamma+ right of K+."""
    km, kp = problem.offsets
    g = u.grid
    dm = tail_distances(u.values, problem.gamma_values("-", g), g.M)
    dp = tail_distances(u.values, problem.gamma_values("+", g), g.M)
    minus = {p: float(dm[p - g.t_start]) for p in range(g.t_start, km)}
    plus = {p: float(dp[p - g.t_start]) for p in range(kp, g.t_end)}
    return minus, plus


def tail_residuals_for(orbit: "ConnectingOrbit") -> tuple[dict, dict]:
    """Same as ``tail_residuals`` from the gamma orbits stored on the result."""
    km, kp = orbit.spec.offsets()
    g = orbit.traj.grid
    dm = tail_distances(orbit.traj.values, orbit.gamma_values("-"), g.M)
    dp = tail_distances(orbit.traj.values, orbit.gamma_values("+"), g.M)
    minus = {p: float(dm[p - g.t_start]) for p in range(g.t_start, km)}
    plus = {p: float(dp[p - g.t_start]) for p in range(kp, g.t_end)}
    return minus, plus


def _package(u, problem, res, log, converged):
    minus, plus = tail_residuals(u, problem)
    return ConnectingOrbit(
        spec=problem.spec,
        traj=u,
        j_hat=j_windowed(u, problem),
        defects=defects(u, problem),
        tail_minus=minus,
        tail_plus=plus,
        el_residual=el_residual(u),
        grad_norm=float(np.max(np.abs(action_gradient(u)))),
        converged=converged,
        rho_minus=problem.rho_minus,
        rho_plus=problem.rho_plus,
        gamma_choice=gamma_choice(problem.spec),
        log=log,
        gamma_minus=problem.gamma_minus,
        gamma_plus=problem.gamma_plus,
    )


def minimize_connection(problem: ConnectionProblem, opts: Optional[SolverOptions] = None) -> ConnectingOrbit:
    """Window-extension loop around clamped-end minimization of J."""
    opts = opts or DEFAULT_OPTIONS
    tol = opts.tol
    u = seed_connection(problem)
    if not admissible(u, problem.spec):
        raise RuntimeError("connection seed is not admissible")
    log = []
    j_prev = None
    orbit = None
    for k in range(opts.max_windows):
        if k > 0:
            problem = problem.extended(1)
            u = _carry_over(u, problem)
        u, res = minimize_trajectory(u, problem.spec, opts)
        orbit = _package(u, problem, res, log, False)
        left, right = orbit.outer_tail_residual()
        change = None if j_prev is None else abs(orbit.j_hat - j_prev)
        entry = {
            "window": list(problem.window),
            "j_hat": orbit.j_hat,
            "j_change": change,
            "tail_left": left,
            "tail_right": right,
            "grad_norm": res.gsup,
            "optimizer": res.message,
        }
        log.append(entry)
        logger.info("window %s J=%.15g dJ=%s tails=(%.2e, %.2e)", problem.window, orbit.j_hat, change, left, right)
        j_prev = orbit.j_hat
        if res.converged and change is not None and change <= tol.j_tol and max(left, right) <= tol.tail_tol:
            orbit.converged = True
            return orbit
    raise WindowDivergence(
        f"window loop did not settle after {opts.max_windows} extensions (last: {log[-1]})", orbit
    )


def connect(spec: ConnectionSpec, M: int = 64, opts: Optional[SolverOptions] = None, refine: Optional[int] = None):
    """Build the problem (periodic minimizers included) and solve it."""
    problem = build_problem(spec, M, opts, refine)
    return minimize_connection(problem, opts), problem

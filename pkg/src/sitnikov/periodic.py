"""Periodic action minimizers over the symbol class of a periodic word b."""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .action import Grid, Trajectory, action_eval, action_gradient, admissible
from .config import DEFAULT_OPTIONS, SolverOptions
from .optimize import minimize_trajectory
from .symbolic import PeriodicSymbols

logger = logging.getLogger(__name__)


@dataclass
class PeriodicOrbit:
    symbols: PeriodicSymbols
    traj: Trajectory
    rho_hat: float
    grad_norm: float
    el_residual: float
    converged: bool
    seed: float = 0.5
    refinement: list = field(default_factory=list)  # (M, rho_hat, grad_norm) per level

    @property
    def N(self) -> int:
        return self.symbols.N

    @property
    def M(self) -> int:
        return self.traj.grid.M

    def value_at_nodes(self, k):
        """y at global node indices k (time k/M), using periodicity."""
        return self.traj.values[np.mod(k, self.traj.values.shape[0])]

    def to_dict(self) -> dict:
        return {
            "kind": "periodic",
            "symbols": str(self.symbols),
            "rho_hat": self.rho_hat,
            "grad_norm": self.grad_norm,
            "el_residual": self.el_residual,
            "converged": self.converged,
            "seed": self.seed,
            "refinement": [list(r) for r in self.refinement],
            "traj": self.traj.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PeriodicOrbit":
        return cls(
            symbols=PeriodicSymbols.parse(d["symbols"]),
            traj=Trajectory.from_dict(d["traj"]),
            rho_hat=float(d["rho_hat"]),
            grad_norm=float(d["grad_norm"]),
            el_residual=float(d["el_residual"]),
            converged=bool(d["converged"]),
            seed=float(d.get("seed", 0.5)),
            refinement=[tuple(r) for r in d.get("refinement", [])],
        )


def blend(a_n: int, a_next: int, s, amp_n: float = 1.0, amp_next: float = 1.0):
    """Cosine blend from a_n*amp_n at s=0 to a_next*amp_next at s=1.

    Constant on same-sign intervals of equal amplitude; exactly one zero
    otherwise.
    """
    c = 0.5 * (1.0 + np.cos(np.pi * s))
    return a_n * amp_n * c + a_next * amp_next * (1.0 - c)


def seed_periodic(b: PeriodicSymbols, grid: Grid, y0: float = 0.5) -> Trajectory:
    if grid.t_start != 0 or grid.span != b.N:
        raise ValueError("periodic seed needs a grid spanning [0, N]")
    k = np.arange(grid.n_segments)
    n = k // grid.M
    s = (k % grid.M) / grid.M
    an = np.array([b(int(i)) for i in n])
    an1 = np.array([b(int(i) + 1) for i in n])
    return Trajectory(grid, blend(an, an1, s) * y0, "periodic")


def minimize_periodic(
    b: PeriodicSymbols,
    M: int = 64,
    opts: Optional[SolverOptions] = None,
    *,
    y0: float = 0.5,
    refine: Optional[int] = None,
    seed_traj: Optional[Trajectory] = None,
) -> PeriodicOrbit:
    """Minimize A_{0,N} over periodic trajectories with signs b at integers.

    Continuation over grid doubling: M, 2M, ... (``refine`` doublings),
    stopping early once rho_hat moves by less than rho_tol.
    """
    opts = opts or DEFAULT_OPTIONS
    refine = opts.refine if refine is None else refine
    traj = seed_traj if seed_traj is not None else seed_periodic(b, Grid(M, 0, b.N), y0)
    history = []
    res = None
    for level in range(refine + 1):
        if level > 0:
            traj = traj.refined(2)
        traj, res = minimize_trajectory(traj, b, opts)
        rho_hat = float(action_eval(traj))
        history.append((traj.grid.M, rho_hat, res.gsup))
        logger.info("periodic %s M=%d rho=%.15g |g|=%.2e (%s)", b, traj.grid.M, rho_hat, res.gsup, res.message)
        if level > 0 and abs(history[-1][1] - history[-2][1]) <= opts.tol.rho_tol:
            break

    from .verification import el_residual

    return PeriodicOrbit(
        symbols=b,
        traj=traj,
        rho_hat=history[-1][1],
        grad_norm=float(np.max(np.abs(action_gradient(traj)))),
        el_residual=el_residual(traj),
        converged=bool(res.converged and admissible(traj, b)),
        seed=y0,
        refinement=history,
    )


_cache: dict = {}
_cache_lock = threading.Lock()


def _cache_key(b, M, refine, opts):
    return (str(b), M, refine, tuple(opts.seeds), opts.tol.grad_tol)


def multistart(b: PeriodicSymbols, M: int = 64, opts: Optional[SolverOptions] = None, refine: Optional[int] = None):
    """Minimizers from every seed amplitude in opts.seeds (cached)."""
    opts = opts or DEFAULT_OPTIONS
    refine = opts.refine if refine is None else refine
    key = _cache_key(b, M, refine, opts)
    with _cache_lock:
        if key in _cache:
            return _cache[key]

    def run(y0):
        return minimize_periodic(b, M, opts, y0=y0, refine=refine)

    if opts.jobs > 1:
        with ThreadPoolExecutor(max_workers=opts.jobs) as ex:
            orbits = list(ex.map(run, opts.seeds))
    else:
        orbits = [run(y0) for y0 in opts.seeds]
    with _cache_lock:
        _cache.setdefault(key, orbits)
    return orbits


def clear_cache():
    with _cache_lock:
        _cache.clear()


def rho(b: PeriodicSymbols, M: int = 64, opts: Optional[SolverOptions] = None, refine: Optional[int] = None) -> float:
    """Numerical rho(b): least action over the multi-start minimizers."""
    orbits = multistart(b, M, opts, refine)
    return min(o.rho_hat for o in orbits if o.converged) if any(o.converged for o in orbits) else min(
        o.rho_hat for o in orbits
    )


def _reflection_defect(orbit: PeriodicOrbit) -> float:
    y = orbit.traj.values
    return float(np.max(np.abs(y - np.roll(y[::-1], 1))))


def best_orbit(orbits, tol: float = 1e-8, which: str = "best") -> PeriodicOrbit:
    """Pick from a multi-start set.

    'best' is the least action; 'max' / 'min' take, among orbits within tol
    of the least action, the one with the largest / smallest y(0).  Ties are
    broken in favour of the most symmetric orbit.
    """
    pool = [o for o in orbits if o.converged] or list(orbits)
    top = min(o.rho_hat for o in pool)
    near = [o for o in pool if o.rho_hat <= top + tol]
    if which == "best":
        return min(near, key=lambda o: (o.rho_hat, _reflection_defect(o)))
    sign = 1.0 if which == "max" else -1.0
    ext = max(sign * o.traj.values[0] for o in near)
    ties = [o for o in near if sign * o.traj.values[0] >= ext - tol]
    return min(ties, key=_reflection_defect)


def gamma(b: PeriodicSymbols, which: str, M: int = 64, opts: Optional[SolverOptions] = None, refine: Optional[int] = None):
    opts = opts or DEFAULT_OPTIONS
    return best_orbit(multistart(b, M, opts, refine), opts.tol.rho_tol, which)

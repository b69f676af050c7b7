"""
Period-1 rectilinear Kepler motion of the primaries.

The primaries sit at (+x, 0) and (-x, 0), where x(t) solves

    x'' = -mu / x**2,    mu = 1/8,

with binary collisions at every integer time, regularized as elastic bounces.
We never integrate this ODE.  The collision orbit is a degenerate (e = 1)
ellipse, so with the eccentric anomaly E

    x = a (1 - cos E),      E - sin E = 2 pi t,

and the period equation 2 pi sqrt(a**3 / mu) = 1 fixes a.  Collisions land
exactly on E = 0, i.e. on integer t, with no stiffness to fight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MU = 1.0 / 8.0
TWO_PI = 2.0 * math.pi

# Below this fraction of a period we seed Newton with the cube-root asymptote.
_SMALL_TAU = 0.05


class KeplerConvergenceError(RuntimeError):
    pass


def e_minus_sin(E):
    """E - sin(E) without cancellation for small E (vectorized)."""
    E0 = np.asarray(E, dtype=float)
    E = np.atleast_1d(E0)
    out = E - np.sin(E)
    small = np.abs(E) < 1.0
    if np.any(small):
        e = E[small]
        e2 = e * e
        # Taylor series: E^3/3! - E^5/5! + ...; 10 terms is below eps for |E| < 1
        term = e * e2 / 6.0
        acc = term.copy()
        for k in range(2, 12):
            term = -term * e2 / ((2 * k) * (2 * k + 1))
            acc += term
        out[small] = acc
    return out.reshape(E0.shape) if E0.ndim else float(out[0])


def one_minus_cos(E):
    s = np.sin(0.5 * np.asarray(E, dtype=float))
    return 2.0 * s * s


@dataclass(frozen=True)
class KeplerDrive:
    """Collision solution x(t) of x'' = -1/(8 x^2) with period 1.

    Immutable; every method is a pure function of its arguments.
    """

    mu: float = MU
    period: float = 1.0
    newton_tol: float = 1e-14
    newton_max_iter: int = 50
    amplitude: float = field(init=False)

    def __post_init__(self):
        if not (self.mu > 0 and self.period > 0):
            raise ValueError("mu and period must be positive")
        a = (self.mu * self.period**2 / (4.0 * math.pi**2)) ** (1.0 / 3.0)
        object.__setattr__(self, "amplitude", a)
        rel = abs(TWO_PI * math.sqrt(a**3 / self.mu) - self.period) / self.period
        if rel > 1e-14:
            raise ValueError(f"period equation violated: relative error {rel:.3e}")

    @property
    def a(self) -> float:
        return self.amplitude

    def solve_radial_kepler(self, tau):
        """Eccentric anomaly E in [0, 2 pi) with E - sin E = 2 pi tau.

        Safeguarded Newton: every iterate is kept inside a bracket on which
        the residual changes sign, and any step leaving the bracket is
        replaced by bisection.  The derivative 1 - cos E vanishes at
        collisions, so near tau = 0 the seed is the cube-root asymptote
        (12 pi tau)^(1/3).
        """
        tau_arr = np.asarray(tau, dtype=float)
        scalar = tau_arr.ndim == 0
        tau_arr = np.atleast_1d(tau_arr)
        if np.any((tau_arr < 0.0) | (tau_arr >= 1.0)) or not np.all(np.isfinite(tau_arr)):
            raise ValueError("tau must lie in [0, 1)")

        target = TWO_PI * tau_arr
        E = np.where(tau_arr < _SMALL_TAU, np.cbrt(12.0 * math.pi * tau_arr), target)
        lo = np.zeros_like(E)
        hi = np.full_like(E, TWO_PI)

        for _ in range(self.newton_max_iter):
            f = e_minus_sin(E) - target
            active = np.abs(f) > self.newton_tol
            if not np.any(active):
                break
            lo = np.where(f < 0.0, np.maximum(lo, E), lo)
            hi = np.where(f > 0.0, np.minimum(hi, E), hi)
            d = one_minus_cos(E)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = E - f / d
            bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
            step = np.where(bad, 0.5 * (lo + hi), step)
            E = np.where(active, step, E)
        else:
            f = e_minus_sin(E) - target
            worst = float(np.max(np.abs(f)))
            if worst > self.newton_tol:
                raise KeplerConvergenceError(
                    f"Kepler solve stalled after {self.newton_max_iter} iterations "
                    f"(residual {worst:.3e})"
                )

        E = np.clip(E, 0.0, np.nextafter(TWO_PI, 0.0))
        return float(E[0]) if scalar else E

    def _anomaly(self, t):
        t = np.asarray(t, dtype=float)
        tau = t - np.floor(t)
        # floor can round a tiny negative t up to tau == 1.0
        tau = np.where(tau >= 1.0, 0.0, tau)
        return self.solve_radial_kepler(tau)

    def x(self, t):
        """Height x(t) >= 0 of the primary; exactly 0 at integer t."""
        E = self._anomaly(t)
        return self.amplitude * one_minus_cos(E)

    def xdot(self, t):
        """Velocity of the primary.  Undefined at the collision times."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr == np.round(t_arr)):
            raise ValueError("xdot is undefined at integer (collision) times")
        E = self._anomaly(t_arr)
        v = math.sqrt(self.mu / self.amplitude)
        return v * np.sin(E) / one_minus_cos(E)

    def energy(self, t):
        v = self.xdot(t)
        return 0.5 * v * v - self.mu / self.x(t)

    @property
    def energy_level(self) -> float:
        return -self.mu / (2.0 * self.amplitude)

    def collision_coefficient(self) -> float:
        """Limit of x(eps) / eps^(2/3) as eps -> 0."""
        return (4.5 * self.mu) ** (1.0 / 3.0)


DEFAULT_DRIVE = KeplerDrive()


def x_of_t(t):
    return DEFAULT_DRIVE.x(t)


def xdot_of_t(t):
    return DEFAULT_DRIVE.xdot(t)


def solve_radial_kepler(tau):
    return DEFAULT_DRIVE.solve_radial_kepler(tau)


def sample_x(t0: float, t1: float, step: float):
    """Rows (t, x, xdot) on [t0, t1]; xdot is None at collision times."""
    if step <= 0:
        raise ValueError("step must be positive")
    n = int(math.floor((t1 - t0) / step + 1e-9))
    ts = t0 + step * np.arange(n + 1)
    near = np.abs(ts - np.round(ts)) < 1e-12
    ts[near] = np.round(ts[near])
    xs = DEFAULT_DRIVE.x(ts)
    rows = []
    for t, xv in zip(ts, xs):
        t = float(t)
        if t == round(t):
            rows.append((t, float(xv), None))
        else:
            rows.append((t, float(xv), float(DEFAULT_DRIVE.xdot(t))))
    return rows

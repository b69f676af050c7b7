"""
Unconstrained descent for the discrete action.

L-BFGS (two-loop recursion) with a strong-Wolfe line search does the bulk of
the work.  The objective may return +inf to mark points outside the open
admissible set; the line search treats those like overshoots, so iterates
never leave the set.  Close to a minimizer the discrete action is very
ill-conditioned (kinetic stiffness ~ 1/h against potential curvature ~ h),
so when a sparse Hessian is available we finish with Newton steps.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

logger = logging.getLogger(__name__)

C1 = 1e-4
C2 = 0.9


@dataclass
class DescentResult:
    x: np.ndarray
    f: float
    gsup: float
    iterations: int
    converged: bool
    message: str
    newton_steps: int = 0
    history: list = field(default_factory=list)


class _LineFunction:
    def __init__(self, fg, x, p):
        self.fg, self.x, self.p = fg, x, p
        self.cache = {}

    def __call__(self, a):
        if a not in self.cache:
            f, g = self.fg(self.x + a * self.p)
            d = float(g @ self.p) if np.isfinite(f) else np.nan
            self.cache[a] = (f, g, d)
        return self.cache[a]


def _interpolate(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi):
    """Cubic minimizer on [a_lo, a_hi], safeguarded; bisection if unusable."""
    lo, hi = min(a_lo, a_hi), max(a_lo, a_hi)
    mid = 0.5 * (lo + hi)
    if not (np.isfinite(f_hi) and np.isfinite(d_hi)):
        # overshoot into an inadmissible region: back off geometrically
        return a_lo + 0.25 * (a_hi - a_lo)
    d1 = d_lo + d_hi - 3 * (f_lo - f_hi) / (a_lo - a_hi)
    rad = d1 * d1 - d_lo * d_hi
    if rad < 0:
        return mid
    d2 = np.sign(a_hi - a_lo) * np.sqrt(rad)
    denom = d_hi - d_lo + 2 * d2
    if denom == 0:
        return mid
    a = a_hi - (a_hi - a_lo) * (d_hi + d2 - d1) / denom
    margin = 0.1 * (hi - lo)
    if not (lo + margin <= a <= hi - margin):
        return mid
    return a


def strong_wolfe(phi: _LineFunction, f0: float, d0: float, a1: float = 1.0, max_eval: int = 40):
    """Step length satisfying the strong Wolfe conditions, or None."""

    def zoom(a_lo, a_hi, evals):
        f_lo, _, d_lo = phi(a_lo)
        while evals < max_eval:
            f_hi, _, d_hi = phi(a_hi)
            a = _interpolate(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi)
            f, _, d = phi(a)
            evals += 1
            if not np.isfinite(f) or f > f0 + C1 * a * d0 or f >= f_lo:
                a_hi = a
            else:
                if abs(d) <= -C2 * d0:
                    return a
                if d * (a_hi - a_lo) >= 0:
                    a_hi = a_lo
                a_lo, f_lo, d_lo = a, f, d
            if abs(a_hi - a_lo) < 1e-16 * max(1.0, abs(a_lo)):
                break
        # Wolfe curvature not reached; a_lo still gives sufficient decrease
        return a_lo if a_lo > 0 else None

    a_prev, f_prev = 0.0, f0
    a = a1
    for i in range(max_eval):
        f, _, d = phi(a)
        if not np.isfinite(f) or f > f0 + C1 * a * d0 or (i > 0 and f >= f_prev):
            return zoom(a_prev, a, i)
        if abs(d) <= -C2 * d0:
            return a
        if d >= 0:
            return zoom(a, a_prev, i)
        a_prev, f_prev = a, f
        a *= 2.0
    return None


def _newton_polish(fg, hess, x, f, g, gtol, max_iter):
    steps = 0
    for _ in range(max_iter):
        gsup = float(np.max(np.abs(g)))
        if gsup <= gtol:
            break
        try:
            p = spla.spsolve(sp.csc_matrix(hess(x)), -g)
        except RuntimeError:
            break
        if not np.all(np.isfinite(p)) or g @ p >= 0:
            break
        accepted = False
        a = 1.0
        for _ in range(30):
            xn = x + a * p
            fn, gn = fg(xn)
            if np.isfinite(fn):
                gn_sup = float(np.max(np.abs(gn)))
                # below float resolution of f, judge progress by the gradient
                if fn <= f + C1 * a * (g @ p) or (
                    fn <= f + 64 * np.finfo(float).eps * max(1.0, abs(f)) and gn_sup < gsup
                ):
                    accepted = True
                    break
            a *= 0.5
        if not accepted:
            break
        x, f, g = xn, fn, gn
        steps += 1
    return x, f, g, steps


def minimize(
    fg: Callable[[np.ndarray], tuple],
    x0: np.ndarray,
    *,
    gtol: float = 1e-10,
    max_iter: int = 5000,
    memory: int = 20,
    hess: Optional[Callable] = None,
    newton_switch: float = 1e-6,
    newton_max_iter: int = 60,
) -> DescentResult:
    """Minimize f from x0.  ``fg(x)`` returns (f, grad); f = inf marks infeasible x."""
    x = np.array(x0, dtype=float)
    f, g = fg(x)
    if not np.isfinite(f):
        raise ValueError("starting point is infeasible")
    S: deque = deque(maxlen=memory)
    Y: deque = deque(maxlen=memory)
    it = 0
    newton_steps = 0
    history = []
    message = "max iterations"
    next_newton = 0

    def gsup_of(g):
        return float(np.max(np.abs(g))) if g.size else 0.0

    while it < max_iter:
        gsup = gsup_of(g)
        if gsup <= gtol:
            message = "gradient tolerance"
            break
        if hess is not None and gsup <= newton_switch and it >= next_newton:
            # aim below gtol: Newton steps are cheap and sharpen reproducibility
            x, f, g, k = _newton_polish(fg, hess, x, f, g, 1e-2 * gtol, newton_max_iter)
            newton_steps += k
            it += k
            if gsup_of(g) <= gtol:
                message = "gradient tolerance"
                break
            # Newton stalled (indefinite Hessian or noise); more quasi-Newton first
            next_newton = it + 50
            S.clear()
            Y.clear()

        # two-loop recursion
        q = -g.copy()
        alphas = []
        for s, y in zip(reversed(S), reversed(Y)):
            r = 1.0 / (y @ s)
            al = r * (s @ q)
            q -= al * y
            alphas.append((r, al, s, y))
        if S:
            q *= (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1])
        else:
            q /= max(1.0, float(np.linalg.norm(g)))
        for r, al, s, y in reversed(alphas):
            be = r * (y @ q)
            q += (al - be) * s
        p = q
        d0 = float(g @ p)
        if d0 >= 0:
            S.clear()
            Y.clear()
            p = -g / max(1.0, float(np.linalg.norm(g)))
            d0 = float(g @ p)

        phi = _LineFunction(fg, x, p)
        a = strong_wolfe(phi, f, d0)
        if a is None:
            if S:
                S.clear()
                Y.clear()
                continue
            message = "line search failed"
            break
        fn, gn, _ = phi(a)
        s = a * p
        y = gn - g
        if s @ y > 1e-14 * np.linalg.norm(s) * np.linalg.norm(y):
            S.append(s)
            Y.append(y)
        x, f, g = x + s, fn, gn
        it += 1
        if it % 200 == 0:
            history.append((it, f, gsup_of(g)))
            logger.debug("iter %d f=%.15g |g|=%.3e", it, f, gsup_of(g))

    gsup = gsup_of(g)
    converged = gsup <= gtol
    if converged:
        message = "gradient tolerance"
    return DescentResult(x, float(f), gsup, it, converged, message, newton_steps, history)


class AdmissibilityError(RuntimeError):
    """Descent could not produce a trajectory with the prescribed signs."""


def _softplus(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def minimize_trajectory(traj, a, opts=None, *, penalty_mu: float = 0.0):
    """Minimize the discrete action over the trajectory's free nodes.

    ``a`` maps integer times to required signs.  Iterates stay admissible;
    a seed that violates the signs is first pushed into the admissible set
    by the annealed penalty mu * sum softplus(-a_n y_n / eps).
    Returns (trajectory, DescentResult).
    """
    from .action import action_eval, action_gradient, action_hessian, admissible
    from .config import DEFAULT_OPTIONS

    opts = opts or DEFAULT_OPTIONS
    g0 = traj.grid
    last = g0.t_end - 1 if traj.periodic else g0.t_end
    ints = np.arange(g0.t_start, last + 1)
    idx = (ints - g0.t_start) * g0.M
    signs = np.array([a(int(n)) for n in ints], dtype=float)

    free = np.ones(traj.values.shape[0], dtype=bool)
    if traj.bc == "fixed":
        free[0] = free[-1] = False
    base = traj.values.copy()

    def full(z):
        y = base.copy()
        y[free] = z
        return y

    def make_fg(mu):
        eps = opts.penalty_eps

        def fg(z):
            y = full(z)
            if mu == 0.0 and not np.all(signs * y[idx] > 0):
                return np.inf, None
            with np.errstate(divide="ignore", invalid="ignore"):
                try:
                    f = float(action_eval(traj, y))
                except (FloatingPointError, ValueError):
                    return np.inf, None
                g = action_gradient(traj, y)
            if mu > 0.0:
                arg = -signs * y[idx] / eps
                f += mu * float(np.sum(_softplus(arg)))
                g = g.copy()
                g[idx] += -mu * signs / eps * _sigmoid(arg)
            return f, g[free]

        return fg

    def hess(z):
        H = action_hessian(traj, full(z))
        return H[free][:, free]

    z = base[free]
    if not admissible(traj, a):
        mu = penalty_mu or opts.penalty_mu
        for _ in range(opts.penalty_stages):
            res = minimize(make_fg(mu), z, gtol=1e-6, max_iter=opts.max_iter, memory=opts.memory)
            z = res.x
            if np.all(signs * full(z)[idx] > 0):
                break
            mu *= 10.0
        if not np.all(signs * full(z)[idx] > 0):
            raise AdmissibilityError("penalty phase failed to restore the sign pattern")

    res = minimize(
        make_fg(0.0),
        z,
        gtol=opts.tol.grad_tol,
        max_iter=opts.max_iter,
        memory=opts.memory,
        hess=hess,
        newton_switch=opts.newton_switch,
        newton_max_iter=opts.newton_max_iter,
    )
    out = traj.with_values(full(res.x))
    if not admissible(out, a):
        raise AdmissibilityError("minimizer lost admissibility")
    return out, res

import numpy as np
import pytest
from scipy.optimize import rosen, rosen_der, rosen_hess

from sitnikov.action import Grid, Trajectory, admissible
from sitnikov.optimize import C1, C2, _LineFunction, minimize, minimize_trajectory, strong_wolfe
from sitnikov.periodic import seed_periodic
from sitnikov.symbolic import PeriodicSymbols


def rosen_fg(x):
    return rosen(x), rosen_der(x)


def test_lbfgs_on_rosenbrock():
    res = minimize(rosen_fg, np.full(6, -1.2), gtol=1e-10, newton_switch=0.0)
    assert res.converged
    assert np.allclose(res.x, 1.0, atol=1e-8)


def test_newton_polish_on_rosenbrock():
    res = minimize(rosen_fg, np.full(6, -1.2), gtol=1e-10, hess=rosen_hess, newton_switch=1e-2)
    assert res.converged and res.newton_steps > 0
    assert np.allclose(res.x, 1.0, atol=1e-9)


def test_strong_wolfe_conditions():
    x = np.array([-1.2, 1.0])
    f0, g0 = rosen_fg(x)
    p = -g0
    phi = _LineFunction(rosen_fg, x, p)
    d0 = float(g0 @ p)
    a = strong_wolfe(phi, f0, d0)
    fa, _, da = phi(a)
    assert fa <= f0 + C1 * a * d0
    assert abs(da) <= C2 * abs(d0)


def test_infeasible_points_are_never_accepted():
    # f = inf for x < 0.5 in any coordinate; minimum of the quadratic lies outside
    def fg(x):
        if np.any(x < 0.5):
            return np.inf, None
        return float(np.sum(x**2)), 2 * x

    res = minimize(fg, np.full(3, 2.0), gtol=1e-10, max_iter=200)
    assert np.all(res.x >= 0.5)
    assert np.isfinite(res.f)


def test_infeasible_start_rejected():
    with pytest.raises(ValueError):
        minimize(lambda x: (np.inf, None), np.zeros(2))


def test_penalty_phase_restores_signs():
    b = PeriodicSymbols.parse("+++---++")
    grid = Grid(16, 0, 8)
    traj = seed_periodic(b, grid, 0.5)
    bad = traj.values.copy()
    bad[3 * 16] = 0.3  # should be negative at n = 3
    bad_traj = Trajectory(grid, bad, "periodic")
    assert not admissible(bad_traj, b)
    out, res = minimize_trajectory(bad_traj, b)
    assert admissible(out, b)
    assert res.converged

"""Acceptance gate: one test per criterion, at the stated tolerances.

Run alone with ``pytest -v tests/test_acceptance.py``; each criterion prints
a single PASSED / FAILED line.
"""

import dataclasses
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from sitnikov.action import Grid, Trajectory, action_eval, action_gradient, admissible
from sitnikov.config import SolverOptions
from sitnikov.connection import connect
from sitnikov.kepler import MU, DEFAULT_DRIVE, solve_radial_kepler, x_of_t, xdot_of_t
from sitnikov.optimize import minimize_trajectory
from sitnikov.periodic import minimize_periodic
from sitnikov.symbolic import ConnectionSpec, PeriodicSymbols
from sitnikov.verification import (
    crossing_mismatches,
    el_residual,
    expected_crossings,
    lower_bound_violations,
    scaling_check,
    symmetry_defect,
    verify_connection,
    verify_periodic,
    zero_crossings,
)

from conftest import HET, INSERT, WORD

M_ACCEPT = 256


@pytest.fixture(scope="module")
def b():
    return PeriodicSymbols.parse(WORD)


@pytest.fixture(scope="module")
def ladder(b):
    """Periodic minimizers at M = 64, 128, 256, each seeded from the previous."""
    out = [minimize_periodic(b, 64, refine=0, y0=1.0)]
    while out[-1].M < M_ACCEPT:
        prev = out[-1]
        out.append(minimize_periodic(b, refine=0, seed_traj=prev.traj.refined(2), y0=prev.seed))
    return out


@pytest.fixture(scope="module")
def homoclinic():
    return connect(ConnectionSpec.build(**INSERT), 64, refine=2)[0]


@pytest.fixture(scope="module")
def heteroclinic():
    return connect(ConnectionSpec.build(**HET), 64, refine=2)[0]


def test_criterion_1_kepler_drive():
    a = (1.0 / (32.0 * math.pi**2)) ** (1.0 / 3.0)
    tau = np.linspace(0.0, 1.0, 4001, endpoint=False)
    E = solve_radial_kepler(tau)
    assert np.max(np.abs(E - np.sin(E) - 2 * math.pi * tau)) <= 1e-14
    assert all(x_of_t(float(n)) == 0.0 for n in range(-10, 11))
    assert abs(x_of_t(0.5) - 2 * a) <= 1e-14
    assert DEFAULT_DRIVE.amplitude == pytest.approx(a, rel=1e-15)
    # independent oracle: integrate x'' = -mu/x^2 from the apex
    sol = solve_ivp(lambda t, u: [u[1], -MU / u[0] ** 2], (0.5, 0.98), [2 * a, 0.0],
                    rtol=1e-13, atol=1e-15, dense_output=True, method="DOP853")
    ts = np.linspace(0.5, 0.98, 49)
    assert np.max(np.abs(sol.sol(ts)[0] - x_of_t(ts))) <= 1e-10
    assert np.max(np.abs(sol.sol(ts)[1] - xdot_of_t(ts))) <= 1e-8
    h = 1e-5
    t = np.linspace(0.02, 0.98, 97)
    d2 = (x_of_t(t + h) - 2 * x_of_t(t) + x_of_t(t - h)) / h**2
    assert np.max(np.abs(d2 + MU / x_of_t(t) ** 2)) <= 1e-4


def _fd_gradient(traj, step=1e-6):
    y = traj.values.astype(np.longdouble)
    g = np.empty(y.shape, dtype=np.longdouble)
    for i in range(y.size):
        yp, ym = y.copy(), y.copy()
        yp[i] += step
        ym[i] -= step
        g[i] = (action_eval(traj, yp) - action_eval(traj, ym)) / (2 * step)
    return g.astype(float)


def test_criterion_2_gradient_matches_finite_differences():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for M in (16, 64, 256):
        for k in range(20):
            bc = ("periodic", "free", "fixed")[k % 3]
            span = 2 if M == 256 else 3
            g = Grid(M, 0, span)
            n = g.n_segments if bc == "periodic" else g.n_segments + 1
            t = np.arange(n) / M
            y = rng.choice([-1, 1]) * (0.5 + 0.3 * np.sin(2 * np.pi * t / span + rng.uniform(0, 6))
                                       + 0.1 * rng.uniform(0, 1) * np.cos(7 * np.pi * t)
                                       + rng.normal(0, 0.02, n))
            traj = Trajectory(g, y, bc)
            ga = action_gradient(traj)
            fd = _fd_gradient(traj)
            sl = slice(1, -1) if bc == "fixed" else slice(None)
            rel = np.abs(ga[sl] - fd[sl]) / np.abs(fd[sl])
            worst = max(worst, float(rel.max()))
    assert worst <= 1e-6, f"worst relative error {worst:.2e}"


def test_criterion_3_periodic_orbit(ladder, b):
    orbit = ladder[-1]
    assert orbit.M == M_ACCEPT
    assert orbit.converged
    assert float(np.max(np.abs(action_gradient(orbit.traj)))) <= 1e-10
    el = [el_residual(o.traj) for o in ladder]
    orders = [math.log2(el[i] / el[i + 1]) for i in range(len(el) - 1)]
    assert all(e1 < e0 for e0, e1 in zip(el, el[1:])), el
    assert min(orders) >= 1.0, orders
    counts, hits = zero_crossings(orbit.traj)
    assert hits == []
    assert counts == expected_crossings(b, 0, b.N)
    assert admissible(orbit.traj, b)
    assert b.symmetric and symmetry_defect(orbit.traj) <= 1e-6


def test_criterion_4_scaling(b):
    defect, per = scaling_check(b, 2, 64, SolverOptions(refine=0))
    assert defect <= 2e-8, defect
    assert per <= 1e-6, per


def test_criterion_5_lower_bound(ladder, b):
    orbit = ladder[-1]
    count, worst = lower_bound_violations(b, orbit.M, orbit.rho_hat, n_samples=1000, tol=1e-6)
    assert count == 0, f"{count} samples below rho_hat (worst margin {worst:.3e})"
    # random samples stay far from the bound; probe it closely as well
    free = Trajectory(Grid(orbit.M, 0, b.N), orbit.traj.closed_values(), "free")
    rng = np.random.default_rng(0)
    s = np.arange(free.values.size) / (free.values.size - 1)
    for _ in range(200):
        bump = rng.normal(0, 1e-2) * np.sin(np.pi * rng.integers(1, 9) * s) + rng.normal(0, 1e-3)
        y = free.values * (1 + bump)
        if admissible(free.with_values(y), b):
            assert float(action_eval(free, y)) >= orbit.rho_hat - 1e-6
    # the free-end minimum over [0, N] is the bound itself
    best, res = minimize_trajectory(free, b)
    assert res.converged and float(action_eval(best)) >= orbit.rho_hat - 1e-6


def test_criterion_6_homoclinic(homoclinic):
    orbit = homoclinic
    spec = orbit.spec
    assert spec.homoclinic
    assert orbit.traj.grid.M == M_ACCEPT
    assert orbit.converged and len(orbit.log) <= 20
    left, right = orbit.outer_tail_residual(periods=2)
    assert left <= 1e-6 and right <= 1e-6
    assert crossing_mismatches(orbit.traj, spec) == []
    assert zero_crossings(orbit.traj)[1] == []
    # y*(K+) < 0 < gamma+(K+): the orbit stays below gamma+ on every node beyond K+
    _, kp = spec.kpm_offsets()
    assert spec(kp) == -1 and spec.b_plus(kp) == 1
    g = orbit.traj.grid
    t = g.times(False)
    beyond = (t >= kp) & (t < g.t_end)  # the right end is clamped onto gamma+
    assert np.all(orbit.traj.values[beyond] < orbit.gamma_values("+")[beyond])
    assert verify_connection(orbit).passed


def test_criterion_7_heteroclinic(heteroclinic):
    orbit = heteroclinic
    spec = orbit.spec
    assert not spec.homoclinic and spec.b_minus.symmetric and spec.b_plus.symmetric
    assert orbit.traj.grid.M == M_ACCEPT
    assert orbit.converged and len(orbit.log) <= 20
    left, right = orbit.outer_tail_residual(periods=2)
    assert left <= 1e-6 and right <= 1e-6
    # each tail is close to its own orbit and far from the other one
    y = orbit.traj.values
    gm, gp = orbit.gamma_values("-"), orbit.gamma_values("+")
    M = orbit.traj.grid.M
    assert np.max(np.abs(y[: 2 * M] - gm[: 2 * M])) < 1e-5 < np.max(np.abs(y[: 2 * M] - gp[: 2 * M]))
    assert np.max(np.abs(y[-2 * M :] - gp[-2 * M :])) < 1e-5 < np.max(np.abs(y[-2 * M :] - gm[-2 * M :]))
    assert crossing_mismatches(orbit.traj, spec) == []
    assert verify_connection(orbit).passed


def test_criterion_8_mutation(ladder, homoclinic):
    periodic = ladder[-1]
    assert verify_periodic(periodic, samples=0).passed
    assert verify_connection(homoclinic).passed
    for orbit, check, kw in ((periodic, verify_periodic, {"samples": 0}), (homoclinic, verify_connection, {})):
        n = orbit.traj.values.size
        M = orbit.traj.grid.M
        for k in (0, 3 * M, M + M // 3, n // 2 + 5, n - 2):
            y = orbit.traj.values.copy()
            y[k] = -y[k]
            mutated = dataclasses.replace(orbit, traj=orbit.traj.with_values(y))
            assert not check(mutated, **kw).passed, f"flip at node {k} went unnoticed"

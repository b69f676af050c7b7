import json

import numpy as np
import pytest

from sitnikov.action import Grid, action_eval, action_gradient, action_hessian, admissible
from sitnikov.config import SolverOptions
from sitnikov.optimize import minimize
from sitnikov.periodic import (
    PeriodicOrbit,
    best_orbit,
    blend,
    clear_cache,
    gamma,
    minimize_periodic,
    multistart,
    rho,
    seed_periodic,
)
from sitnikov.symbolic import PeriodicSymbols
from sitnikov.verification import ordering_verdict, scaling_check, symmetry_defect, zero_crossings

FAST = SolverOptions(seeds=(0.5, 1.0, 2.0), refine=0)


def test_blend_endpoints_and_single_zero():
    s = np.linspace(0, 1, 101)
    y = blend(1, -1, s, 0.7, 1.3)
    assert y[0] == pytest.approx(0.7) and y[-1] == pytest.approx(-1.3)
    assert np.count_nonzero(np.diff(np.sign(y))) == 1
    assert np.allclose(blend(1, 1, s), 1.0)


def test_seed_is_admissible(word):
    traj = seed_periodic(word, Grid(16, 0, word.N), 0.5)
    assert admissible(traj, word)


def test_converged_orbit(orbit64, word):
    assert orbit64.converged
    assert orbit64.grad_norm <= 1e-10
    assert admissible(orbit64.traj, word)
    assert orbit64.rho_hat == pytest.approx(12.334215688, abs=1e-8)
    counts, hits = zero_crossings(orbit64.traj)
    assert hits == []
    assert [n for n, c in counts.items() if c] == [2, 5]


def test_symmetric_orbit(orbit64):
    assert symmetry_defect(orbit64.traj) <= 1e-6


def test_sign_flip_invariance(orbit64, word):
    neg = minimize_periodic(word.negated(), 64, refine=0, y0=1.0)
    assert neg.rho_hat == pytest.approx(orbit64.rho_hat, abs=1e-10)
    assert np.max(np.abs(neg.traj.values + orbit64.traj.values)) <= 1e-8


@pytest.mark.parametrize("shift", [1, 3])
def test_shift_invariance(orbit64, word, shift):
    sh = minimize_periodic(word.shifted(shift), 64, refine=0, y0=1.0)
    assert sh.rho_hat == pytest.approx(orbit64.rho_hat, abs=1e-8)
    assert np.max(np.abs(sh.traj.values - np.roll(orbit64.traj.values, -shift * 64))) <= 1e-6


def test_seeds_agree_and_are_ordered(word):
    orbits = multistart(word, 64, FAST)
    vals = [o.rho_hat for o in orbits]
    assert max(vals) - min(vals) <= 1e-8
    assert ordering_verdict([o.traj for o in orbits], 1e-6) != "violated"
    assert rho(word, 64, FAST) == pytest.approx(min(vals))
    assert multistart(word, 64, FAST) is orbits  # cached
    clear_cache()
    assert multistart(word, 64, FAST) is not orbits


def test_parallel_multistart_matches_serial(word):
    clear_cache()
    serial = multistart(word, 32, FAST)
    clear_cache()
    par = multistart(word, 32, SolverOptions(seeds=FAST.seeds, refine=0, jobs=3))
    for a, b in zip(serial, par):
        assert np.array_equal(a.traj.values, b.traj.values)


def test_gamma_extremes_coincide_for_singleton(word):
    g_max = gamma(word, "max", 64, FAST)
    g_min = gamma(word, "min", 64, FAST)
    assert np.max(np.abs(g_max.traj.values - g_min.traj.values)) <= 1e-6


def test_best_orbit_prefers_extremes():
    b = PeriodicSymbols.parse("+++---++")
    base = minimize_periodic(b, 16, refine=0)

    def fake(y0_shift, rho_hat):
        return PeriodicOrbit(b, base.traj.with_values(base.traj.values + y0_shift), rho_hat, 0.0, 0.0, True)

    lo, mid, hi, bad = fake(-0.01, 1.0), fake(0.0, 1.0), fake(0.01, 1.0), fake(0.5, 2.0)
    pool = [mid, lo, hi, bad]
    assert best_orbit(pool, 1e-8, "max") is hi
    assert best_orbit(pool, 1e-8, "min") is lo
    assert any(best_orbit(pool, 1e-8, "best") is o for o in (lo, mid, hi))


def test_two_point_minimality(orbit64):
    # freeze two nodes inside (1, 2) and (4, 5), perturb the nodes between them
    # and re-minimize: the orbit values come back
    traj = orbit64.traj
    y = traj.values
    i, j = 64 + 20, 4 * 64 + 40
    free = np.zeros(y.shape, dtype=bool)
    free[i + 1 : j] = True
    ints = np.arange(0, y.size, 64)
    need = np.sign(y[ints])

    def full(z):
        out = y.copy()
        out[free] = z
        return out

    def fg(z):
        v = full(z)
        if np.any(need * v[ints] <= 0):
            return np.inf, None
        return float(action_eval(traj, v)), action_gradient(traj, v)[free]

    def hess(z):
        H = action_hessian(traj, full(z))
        return H[free][:, free]

    rng = np.random.default_rng(0)
    z0 = y[free] * (1 + 0.2 * rng.uniform(-1, 1, free.sum()))
    res = minimize(fg, z0, gtol=1e-12, hess=hess, newton_switch=0.1)
    assert np.max(np.abs(res.x - y[free])) <= 1e-8


def test_k_fold_scaling(word):
    defect, per = scaling_check(word, 2, 32, FAST)
    assert defect <= 2e-8
    assert per <= 1e-6


def test_refinement_continuation_second_order(word):
    orbit = minimize_periodic(word, 32, refine=2, y0=1.0)
    Ms = [m for m, _, _ in orbit.refinement]
    rhos = [r for _, r, _ in orbit.refinement]
    assert Ms == [32, 64, 128]
    ratio = (rhos[0] - rhos[1]) / (rhos[1] - rhos[2])
    assert 3.0 < ratio < 5.0


def test_json_round_trip(orbit64):
    text = json.dumps(orbit64.to_dict())
    again = PeriodicOrbit.from_dict(json.loads(text))
    assert json.dumps(again.to_dict()) == text
    assert np.array_equal(again.traj.values, orbit64.traj.values)


def test_asymmetric_word():
    b = PeriodicSymbols.parse("++++---+++---")
    orbit = minimize_periodic(b, 32, refine=0)
    assert orbit.converged
    assert admissible(orbit.traj, b)

import dataclasses
import json

import numpy as np
import pytest

from sitnikov.action import Grid, admissible
from sitnikov.verification import (
    el_residual,
    expected_crossings,
    lower_bound_violations,
    ordering_verdict,
    random_admissible,
    tail_monotone,
    verify_connection,
    verify_periodic,
    zero_crossings,
)


def mutate(orbit, k, factor=-1.0):
    y = orbit.traj.values.copy()
    y[k] *= factor
    return dataclasses.replace(orbit, traj=orbit.traj.with_values(y))


def test_periodic_report_passes(orbit64):
    r = verify_periodic(orbit64, samples=200)
    assert r.passed, r.summary()
    assert r.lower_bound_violations == 0
    json.dumps(r.to_dict())


@pytest.mark.parametrize("k", [0, 64 * 3, 64 * 3 + 17, 101])
def test_periodic_mutation_fails(orbit64, k):
    assert not verify_periodic(mutate(orbit64, k), samples=0).passed


def test_small_perturbation_fails_gradient(orbit64):
    r = verify_periodic(mutate(orbit64, 40, 1 + 1e-6), samples=0)
    assert not r.grad_ok and not r.passed


@pytest.mark.parametrize("name", ["insert64", "flip64", "het64"])
def test_connection_report_passes(name, request):
    orbit, _ = request.getfixturevalue(name)
    r = verify_connection(orbit)
    assert r.passed, r.summary()
    json.dumps(r.to_dict())


@pytest.mark.parametrize("offset", [0, 37])
def test_connection_mutation_fails(insert64, offset):
    orbit, _ = insert64
    k = orbit.traj.grid.node_index(15) + offset
    assert not verify_connection(mutate(orbit, k)).passed


def test_wrong_spec_fails(insert64, flip_spec):
    orbit, _ = insert64
    assert not verify_connection(dataclasses.replace(orbit, spec=flip_spec)).passed


def test_el_residual_decreases_under_refinement(word):
    from sitnikov.periodic import minimize_periodic

    res = [el_residual(minimize_periodic(word, M, refine=0, y0=1.0).traj) for M in (32, 64, 128)]
    assert res[0] > res[1] > res[2]
    assert np.log2(res[1] / res[2]) >= 1.0


def test_expected_crossings(insert_spec):
    exp = expected_crossings(insert_spec, 0, 8)
    assert exp == {n: int(insert_spec(n) != insert_spec(n + 1)) for n in range(8)}


def test_zero_crossings_counts_and_node_hits():
    from sitnikov.action import Trajectory

    g = Grid(8, 0, 2)
    t = g.times()
    y = np.cos(np.pi * t) + 0.0  # zero at t = 0.5 and 1.5, both nodes
    y[4] = 0.0
    counts, hits = zero_crossings(Trajectory(g, y, "free"))
    assert hits == [0.5]
    assert counts[0] == 1 and counts[1] == 1


def test_ordering_verdicts(orbit64):
    y = orbit64.traj
    assert ordering_verdict([y], 1e-8) == "single_sample"
    assert ordering_verdict([y, y], 1e-8) == "identical"
    up = y.with_values(y.values + 1e-3)
    assert ordering_verdict([y, up], 1e-8) == "strictly_ordered"
    wiggle = y.with_values(y.values + 1e-3 * np.sin(np.arange(y.values.size)))
    assert ordering_verdict([y, wiggle], 1e-8) == "violated"


def test_random_samples_are_admissible(word):
    rng = np.random.default_rng(4)
    g = Grid(32, 0, word.N)
    assert all(admissible(s, word) for s in random_admissible(word, g, rng, 50))


def test_lower_bound_catches_a_too_large_rho(orbit64, word):
    count, worst = lower_bound_violations(word, 64, orbit64.rho_hat + 5.0, 100)
    assert count > 0 and worst < 0


def test_tail_monotone():
    assert tail_monotone({1: 1e-1, 2: 1e-3, 3: 1e-5}, +1, 1e-9)
    assert not tail_monotone({1: 1e-3, 2: 1e-1}, +1, 1e-9)
    assert tail_monotone({-3: 1e-5, -2: 1e-3, -1: 1e-1}, -1, 1e-9)

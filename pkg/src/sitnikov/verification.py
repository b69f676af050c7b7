"""
Property checks for computed orbits.

Each check restates a property of exact minimizers at the level of the
discrete trajectories we actually produce, so every one of them can fail.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .action import Trajectory, action_eval, action_gradient, admissible, sign_violations
from .config import Tolerances

NOT_APPLICABLE = "n/a"


def el_residual(traj: Trajectory) -> float:
    """Sup-norm defect of y'' = -y / (x^2 + y^2)^(3/2) on the nodes.

    The second difference is taken with step 2h.  A discrete minimizer
    satisfies the h-stencil equation exactly (that is its gradient), so the
    2h stencil is what exposes the truncation error against the ODE; it
    decays like h^2 away from collisions and like h^(4/3) next to them.
    """
    y = traj.values
    h = traj.h
    x = traj.grid.x_values(traj.periodic)
    force = -y / (x * x + y * y) ** 1.5
    if traj.periodic:
        d2 = (np.roll(y, -2) - 2 * y + np.roll(y, 2)) / (4 * h * h)
        res = d2 - force
    else:
        if y.shape[0] < 5:
            return 0.0
        d2 = (y[4:] - 2 * y[2:-2] + y[:-4]) / (4 * h * h)
        res = d2 - force[2:-2]
    return float(np.max(np.abs(res)))


def zero_crossings(traj: Trajectory) -> tuple[dict[int, int], list[float]]:
    """Sign changes of the nodal values inside each unit interval (n, n+1).

    Returns ({n: count}, times of nodes sitting exactly on zero).  A zero
    node is skipped when counting, so a touch-and-return counts as 0 and a
    pass-through as 1; it is still reported.
    """
    y = traj.closed_values()
    t = traj.closed_times()
    M = traj.grid.M
    counts = {}
    node_hits = []
    for j, n in enumerate(range(traj.grid.t_start, traj.grid.t_end)):
        seg = y[j * M : (j + 1) * M + 1]
        inner_zero = np.nonzero(seg[1:-1] == 0.0)[0]
        node_hits.extend(float(t[j * M + 1 + i]) for i in inner_zero)
        s = np.sign(seg)
        s = s[s != 0]
        counts[n] = int(np.count_nonzero(s[1:] != s[:-1]))
    return counts, node_hits


def expected_crossings(a, t_start: int, t_end: int) -> dict[int, int]:
    return {n: (1 if a(n) * a(n + 1) < 0 else 0) for n in range(t_start, t_end)}


def crossing_mismatches(traj: Trajectory, a) -> list[int]:
    counts, _ = zero_crossings(traj)
    want = expected_crossings(a, traj.grid.t_start, traj.grid.t_end)
    return [n for n in counts if counts[n] != want[n]]


def symmetry_defect(traj: Trajectory) -> float:
    """max_j |y(j h) - y(-j h)| for a periodic trajectory on [0, N]."""
    if not traj.periodic or traj.grid.t_start != 0:
        raise ValueError("symmetry defect needs a periodic trajectory on [0, N]")
    y = traj.values
    return float(np.max(np.abs(y - np.roll(y[::-1], 1))))


def ordering_verdict(trajs, tol: float) -> str:
    """Pairwise: identical (to tol), strictly ordered at every node, or violated."""
    if len(trajs) < 2:
        return "single_sample"
    verdict = "identical"
    for i in range(len(trajs)):
        for j in range(i + 1, len(trajs)):
            d = trajs[i].values - trajs[j].values
            if np.max(np.abs(d)) <= tol:
                continue
            if np.all(d > 0) or np.all(d < 0):
                verdict = "strictly_ordered"
            else:
                return "violated"
    return verdict


def random_admissible(b, grid, rng, n_samples: int, scale: float = 1.0):
    """Random trajectories on [0, N] (free ends) with the signs of b at integers.

    Mixes smooth curves (random Fourier modes around a signed blend) with
    rough node-level noise, so both regimes of the action are sampled.
    """
    from .periodic import blend

    k = np.arange(grid.n_segments + 1)
    t = k / grid.M
    n = k // grid.M
    s = (k % grid.M) / grid.M
    an = np.array([b(int(i)) for i in n])
    an1 = np.array([b(int(i) + 1) for i in n])
    ints = np.arange(0, grid.n_segments + 1, grid.M)
    out = []
    for _ in range(n_samples):
        amps = rng.uniform(0.1, 2.5, size=grid.span + 2) * scale
        y = blend(an, an1, s, amps[n], amps[np.minimum(n + 1, grid.span)])
        for m in range(1, 6):
            y = y + rng.normal(0, 0.3 / m) * np.sin(2 * np.pi * m * t / grid.span + rng.uniform(0, 2 * np.pi))
        if rng.random() < 0.3:
            y = y + rng.normal(0, 0.05, size=y.shape)
        # enforce the strict signs at integers
        need = np.array([b(int(i // grid.M)) for i in ints])
        bad = need * y[ints] <= 0.05
        y[ints[bad]] = need[bad] * rng.uniform(0.05, 1.0, size=int(bad.sum()))
        out.append(Trajectory(grid, y, "free"))
    return out


def lower_bound_violations(b, M: int, rho_hat: float, n_samples: int = 1000, tol: float = 1e-6, seed: int = 0):
    """Count random admissible y on [0, N] with A_{0,N}(y) < rho_hat - tol."""
    from .action import Grid

    rng = np.random.default_rng(seed)
    grid = Grid(M, 0, b.N)
    worst = np.inf
    count = 0
    for traj in random_admissible(b, grid, rng, n_samples):
        A = float(action_eval(traj))
        worst = min(worst, A - rho_hat)
        if A < rho_hat - tol:
            count += 1
    return count, worst


def tail_distances(y: np.ndarray, ref: np.ndarray, M: int) -> np.ndarray:
    """Discrete L2 distance per unit interval (trapezoid in t)."""
    d2 = (y - ref) ** 2
    span = (len(y) - 1) // M
    body = d2[:-1].reshape(span, M)
    h = 1.0 / M
    per = h * (body.sum(axis=1) - 0.5 * body[:, 0] + 0.5 * d2[M::M])
    return np.sqrt(per)


@dataclass
class VerificationReport:
    kind: str
    admissible: bool
    grad_sup: float
    grad_ok: bool
    el_residual_sup: float
    el_ok: bool
    crossing_counts: dict
    crossing_mismatches: list
    crossing_node_hits: list
    symmetry_defect: object = NOT_APPLICABLE
    scaling_defect: object = NOT_APPLICABLE
    ordering_verdict: str = "single_sample"
    tail_decay: object = NOT_APPLICABLE
    tail_ok: object = NOT_APPLICABLE
    comparison: object = NOT_APPLICABLE
    lower_bound_violations: object = NOT_APPLICABLE
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        d = asdict(self)
        d["crossing_counts"] = {str(k): v for k, v in self.crossing_counts.items()}
        d["passed"] = self.passed
        return d

    def summary(self) -> str:
        lines = [f"{self.kind} orbit: {'PASS' if self.passed else 'FAIL'}"]
        lines.append(f"  admissible             {self.admissible}")
        lines.append(f"  gradient sup-norm      {self.grad_sup:.3e}")
        lines.append(f"  EL residual (2h)       {self.el_residual_sup:.3e}")
        lines.append(f"  crossing mismatches    {self.crossing_mismatches or 'none'}")
        if self.crossing_node_hits:
            lines.append(f"  zero on a node at      {self.crossing_node_hits}")
        for name, label in (
            ("symmetry_defect", "symmetry defect"),
            ("scaling_defect", "scaling defect"),
            ("ordering_verdict", "ordering"),
            ("lower_bound_violations", "lower-bound violations"),
        ):
            v = getattr(self, name)
            if v != NOT_APPLICABLE:
                lines.append(f"  {label:<23}{v:.3e}" if isinstance(v, float) else f"  {label:<23}{v}")
        if self.tail_ok != NOT_APPLICABLE:
            outer = self.tail_decay["outer"]
            lines.append(f"  outer tail residuals   {outer[0]:.3e} {outer[1]:.3e} (ok: {self.tail_ok})")
        if self.comparison != NOT_APPLICABLE:
            for side, c in self.comparison.items():
                lines.append(
                    f"  comparison {side:<12}{c['relation']} from n={c['offset']}, "
                    f"min margin {c['min_margin']:.2e} (ok: {c['ok']})"
                )
        for f in self.failures:
            lines.append(f"  failed: {f}")
        return "\n".join(lines)


def _grad_limit(traj: Trajectory, tol: Tolerances) -> float:
    # serialized orbits are re-verified after a JSON round trip; allow the
    # gradient to be recomputed with a little headroom over the solver target
    return 100.0 * tol.grad_tol


def verify_periodic(orbit, tol: Optional[Tolerances] = None, *, samples: int = 1000, others=()) -> VerificationReport:
    tol = tol or Tolerances()
    traj = orbit.traj
    b = orbit.symbols
    failures = []
    ok_adm = admissible(traj, b)
    if not ok_adm:
        failures.append(f"admissibility: wrong sign at n={sign_violations(traj, b)}")
    gsup = float(np.max(np.abs(action_gradient(traj)))) if ok_adm else np.inf
    grad_ok = gsup <= _grad_limit(traj, tol)
    if not grad_ok:
        failures.append(f"gradient sup-norm {gsup:.3e} above {_grad_limit(traj, tol):.1e}")
    el = el_residual(traj) if ok_adm else np.inf
    el_ok = el <= tol.el_limit(traj.h)
    if not el_ok:
        failures.append(f"EL residual {el:.3e} above {tol.el_limit(traj.h):.1e}")
    counts, hits = zero_crossings(traj)
    mism = crossing_mismatches(traj, b)
    if mism:
        failures.append(f"crossing pattern differs on intervals {mism}")
    if hits:
        failures.append(f"zero exactly on nodes {hits}; re-run at doubled M")
    sym = NOT_APPLICABLE
    if b.symmetric:
        sym = symmetry_defect(traj)
        if sym > tol.sym_tol:
            failures.append(f"symmetry defect {sym:.3e} above {tol.sym_tol:.1e}")
    lbv = NOT_APPLICABLE
    if b.symmetric and samples and ok_adm:
        lbv, _ = lower_bound_violations(b, traj.grid.M, float(action_eval(traj)), samples, tol.lower_bound_tol)
        if lbv:
            failures.append(f"{lbv} random admissible trajectories beat rho_hat")
    verdict = ordering_verdict([traj] + [o.traj for o in others], tol.sym_tol)
    if verdict == "violated":
        failures.append("ordering violated between minimizers")
    return VerificationReport(
        kind="periodic",
        admissible=ok_adm,
        grad_sup=gsup,
        grad_ok=grad_ok,
        el_residual_sup=el,
        el_ok=el_ok,
        crossing_counts=counts,
        crossing_mismatches=mism,
        crossing_node_hits=hits,
        symmetry_defect=sym,
        ordering_verdict=verdict,
        lower_bound_violations=lbv,
        failures=failures,
    )


def scaling_check(b, k: int, M: int = 64, opts=None, refine: Optional[int] = None):
    """(|rho(kb) - k rho(b)|, max deviation of the kb-minimizer from N-periodicity)."""
    from .periodic import gamma

    if k == 1:
        return 0.0, 0.0
    base = gamma(b, "best", M, opts, refine)
    multi = gamma(b.repeat(k), "best", M, opts, refine)
    defect = abs(multi.rho_hat - k * base.rho_hat)
    y = multi.traj.values
    n = base.traj.values.shape[0]
    per = float(np.max(np.abs(y - np.roll(y, -n))))
    return defect, per


def comparison_check(orbit, tol: float = 1e-8) -> dict:
    """Does the connection stay on one side of gamma+ beyond K+ (and gamma- before K-)?

    At the tight offset the orbit carries the sign of a while gamma
    carries the opposite one, so the orbit must stay on the side of a:
    sign(a_K) * (y - gamma) > -tol on every node of the tail.
    """
    spec = orbit.spec
    km, kp = spec.kpm_offsets()
    g = orbit.traj.grid
    t = g.times(False)
    y = orbit.traj.values
    out = {}
    # the clamped window ends coincide with gamma by construction
    for side, k, ref, mask in (
        ("plus", kp, orbit.gamma_values("+"), (t >= kp) & (t < g.t_end)),
        ("minus", km, orbit.gamma_values("-"), (t <= km) & (t > g.t_start)),
    ):
        s = spec(k)
        b = spec.b_plus(k) if side == "plus" else spec.b_minus(k)
        margin = s * (y[mask] - ref[mask])
        out[side] = {
            "offset": k,
            "a": s,
            "b": b,
            "relation": ("y > gamma" if s > 0 else "y < gamma"),
            "min_margin": float(np.min(margin)),
            "ok": bool(np.all(margin > -tol)),
        }
    return out


def tail_monotone(tails: dict, outward: int, tol: float) -> bool:
    """Residuals shrink (within tol) moving outward from the defect region."""
    keys = sorted(tails, reverse=outward < 0)
    vals = [tails[k] for k in keys]
    return all(b <= a + tol for a, b in zip(vals, vals[1:]))


def verify_connection(orbit, tol: Optional[Tolerances] = None) -> VerificationReport:
    from .connection import tail_residuals_for

    tol = tol or Tolerances()
    traj = orbit.traj
    spec = orbit.spec
    failures = []
    ok_adm = admissible(traj, spec)
    if not ok_adm:
        failures.append(f"admissibility: wrong sign at n={sign_violations(traj, spec)}")
    gsup = float(np.max(np.abs(action_gradient(traj)))) if ok_adm else np.inf
    grad_ok = gsup <= _grad_limit(traj, tol)
    if not grad_ok:
        failures.append(f"gradient sup-norm {gsup:.3e} above {_grad_limit(traj, tol):.1e}")
    el = el_residual(traj) if ok_adm else np.inf
    el_ok = el <= tol.el_limit(traj.h)
    if not el_ok:
        failures.append(f"EL residual {el:.3e} above {tol.el_limit(traj.h):.1e}")
    counts, hits = zero_crossings(traj)
    mism = crossing_mismatches(traj, spec)
    if mism:
        failures.append(f"crossing pattern differs on intervals {mism}")
    if hits:
        failures.append(f"zero exactly on nodes {hits}; re-run at doubled M")

    tail_decay = NOT_APPLICABLE
    tail_ok = NOT_APPLICABLE
    comparison = NOT_APPLICABLE
    if orbit.gamma_minus is not None and orbit.gamma_plus is not None:
        minus, plus = tail_residuals_for(orbit)
        lo, hi = orbit.window
        nm, np_ = spec.b_minus.N, spec.b_plus.N
        outer_l = max((v for i, v in minus.items() if i < lo + 2 * nm), default=0.0)
        outer_r = max((v for i, v in plus.items() if i >= hi - 2 * np_), default=0.0)
        tail_decay = {"minus": minus, "plus": plus, "outer": [outer_l, outer_r]}
        tail_ok = max(outer_l, outer_r) <= tol.tail_tol
        if not tail_ok:
            failures.append(f"outer tail residuals {outer_l:.2e}, {outer_r:.2e} above {tol.tail_tol:.0e}")
        mono = tail_monotone(plus, +1, tol.tail_tol) and tail_monotone(minus, -1, tol.tail_tol)
        if not mono:
            failures.append("tail residuals do not decay monotonically")
        comparison = comparison_check(orbit, tol.comparison_tol)
        for side, c in comparison.items():
            if not c["ok"]:
                failures.append(f"comparison with gamma{'+' if side == 'plus' else '-'} fails ({c['relation']})")

    return VerificationReport(
        kind="connection",
        admissible=ok_adm,
        grad_sup=gsup,
        grad_ok=grad_ok,
        el_residual_sup=el,
        el_ok=el_ok,
        crossing_counts=counts,
        crossing_mismatches=mism,
        crossing_node_hits=hits,
        ordering_verdict=NOT_APPLICABLE,
        tail_decay=tail_decay,
        tail_ok=tail_ok,
        comparison=comparison,
        failures=failures,
    )

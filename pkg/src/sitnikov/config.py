"""Tolerances and solver defaults, in one place."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    grad_tol: float = 1e-10      # sup-norm of the action gradient at convergence
    rho_tol: float = 1e-8        # agreement of action values across seeds / refinements
    sym_tol: float = 1e-6        # max |y(t) - y(-t)| for symmetric symbols
    tail_tol: float = 1e-6       # per-interval L2 distance of a connection to gamma+-
    j_tol: float = 1e-8          # change of windowed J between window extensions
    lower_bound_tol: float = 1e-6
    periodicity_tol: float = 1e-6
    comparison_tol: float = 1e-8
    el_scale: float = 50.0       # 2h-stencil EL residual must stay below el_scale * h**(4/3)
    two_point_tol: float = 1e-8

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"tolerance {f.name} must be > 0")


    def el_limit(self, h: float) -> float:
        return self.el_scale * h ** (4.0 / 3.0)


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 5000
    memory: int = 20
    newton_switch: float = 1e-1   # hand over from L-BFGS to Newton below this gradient sup-norm
    newton_max_iter: int = 60
    seeds: tuple = (0.25, 0.5, 1.0, 1.5, 2.0)
    refine: int = 2               # grid doublings after the base grid
    max_windows: int = 20
    penalty_mu: float = 1.0
    penalty_eps: float = 0.05
    penalty_stages: int = 6
    jobs: int = 1
    tol: Tolerances = Tolerances()

    def with_tol(self, **kw) -> "SolverOptions":
        return replace(self, tol=replace(self.tol, **kw))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        return d


DEFAULT_OPTIONS = SolverOptions()

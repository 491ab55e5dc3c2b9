"""Preconditioned SDC sweeps over the collocation nodes of one step.

The sweep solves, node by node, the rows of

    (I - dt QD F)(u^{k+1}) = u_0 + dt (Q - QD) F(u^k) [+ tau]

with one lower-triangular ``QD`` per right-hand side part. Node values are
kept cumulatively (integrals from the step start), node 0 is the initial
value of the step.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .kernel import SolverError, max_norm
from .quadrature import NodeFamily, NodeKind, QDeltaKind, collocation_rule


class SweepMode(str, enum.Enum):
    IMPLICIT = "implicit"
    IMEX = "imex"
    MULTI_IMPLICIT = "multi-implicit"


MODE_LAYOUT = {
    SweepMode.IMPLICIT: ("full",),
    SweepMode.IMEX: ("impl", "expl"),
    SweepMode.MULTI_IMPLICIT: ("impl1", "impl2"),
}


def mode_for_layout(layout) -> SweepMode:
    for mode, lay in MODE_LAYOUT.items():
        if lay == tuple(layout):
            return mode
    raise ValueError(f"no sweep mode for right-hand side layout {layout}")


class SweepError(SolverError):
    def __init__(self, node, cause):
        super().__init__(f"implicit solve failed at node {node}: {cause}")
        self.node = node
        self.cause = cause


@dataclass(frozen=True)
class SweeperConfig:
    node_kind: NodeKind = NodeKind.RADAU_RIGHT
    num_nodes: int = 3
    qdelta_implicit: QDeltaKind = QDeltaKind.LU
    qdelta_explicit: QDeltaKind = QDeltaKind.EXPLICIT_EULER
    qdelta_implicit2: QDeltaKind = QDeltaKind.LU
    mode: SweepMode | None = None  # derived from the problem layout when None

    def __post_init__(self):
        object.__setattr__(self, "node_kind", NodeKind(self.node_kind))
        object.__setattr__(self, "qdelta_implicit", QDeltaKind(self.qdelta_implicit))
        object.__setattr__(self, "qdelta_explicit", QDeltaKind(self.qdelta_explicit))
        object.__setattr__(self, "qdelta_implicit2", QDeltaKind(self.qdelta_implicit2))
        if self.mode is not None:
            object.__setattr__(self, "mode", SweepMode(self.mode))
        if self.qdelta_explicit is not QDeltaKind.EXPLICIT_EULER:
            raise ValueError("explicit parts need a strictly lower-triangular QDelta (EE)")
        if QDeltaKind.EXPLICIT_EULER in (self.qdelta_implicit, self.qdelta_implicit2):
            raise ValueError("implicit parts need IE or LU")

    @property
    def family(self) -> NodeFamily:
        return NodeFamily(self.node_kind, self.num_nodes)


@dataclass
class NodeValues:
    """Values ``u[0..M]`` and right-hand sides ``f[0..M]`` of one step on one level."""

    u: list
    f: list
    residual: float = float("nan")
    converged: bool = False

    def copy(self) -> "NodeValues":
        return NodeValues([x.copy() for x in self.u], [x.copy() for x in self.f],
                          self.residual, self.converged)


@dataclass
class Sweeper:
    cfg: SweeperConfig
    layout: tuple[str, ...] = ("full",)
    qd: dict = field(init=False)

    def __post_init__(self):
        self.coll = collocation_rule(self.cfg.node_kind, self.cfg.num_nodes)
        mode = mode_for_layout(self.layout)
        if self.cfg.mode is not None and self.cfg.mode is not mode:
            raise ValueError(f"sweep mode {self.cfg.mode.value} does not match problem layout {self.layout}")
        self.mode = mode
        kinds = {
            "full": self.cfg.qdelta_implicit,
            "impl": self.cfg.qdelta_implicit,
            "expl": self.cfg.qdelta_explicit,
            "impl1": self.cfg.qdelta_implicit,
            "impl2": self.cfg.qdelta_implicit2,
        }
        self.qd = {p: self.coll.qdelta(kinds[p]) for p in self.layout}

    @property
    def num_nodes(self) -> int:
        return self.coll.num_nodes

    def node_times(self, t0, dt):
        return t0 + dt * self.coll.nodes

    def predict_spread(self, u0, problem, t0, dt) -> NodeValues:
        times = self.node_times(t0, dt)
        u = [u0.copy() for _ in range(self.num_nodes + 1)]
        f = [problem.eval_f(u[0], t0)] + [problem.eval_f(u[m + 1], times[m]) for m in range(self.num_nodes)]
        return NodeValues(u, f)

    def integrate(self, values: NodeValues, dt) -> list:
        """``dt * sum_j q[m, j] f(u_j)`` for every node, cumulative from the step start."""
        full = [values.f[j + 1].full() for j in range(self.num_nodes)]
        return [_combine(dt * self.coll.q[m], full) for m in range(self.num_nodes)]

    def sweep(self, values: NodeValues, problem, dt, t0, tau=None) -> NodeValues:
        M = self.num_nodes
        times = self.node_times(t0, dt)
        integral = self.integrate(values, dt)
        old = values.f
        new_f = [values.f[0]]
        new_u = [values.u[0]]
        parts = self.layout
        for i in range(M):
            rhs = values.u[0] + integral[i]
            if tau is not None:
                rhs = rhs + tau[i]
            try:
                if self.mode is SweepMode.MULTI_IMPLICIT:
                    # each stage carries only its own part's corrections, so the
                    # second solve returns the first stage value at the fixed point
                    ustar = problem.solve_system(self._stage_rhs(rhs, "impl1", i, old, new_f, dt),
                                                 dt * self.qd["impl1"][i, i], values.u[i + 1],
                                                 times[i], part="impl1")
                    unew = problem.solve_system(self._stage_rhs(ustar, "impl2", i, old, new_f, dt),
                                                dt * self.qd["impl2"][i, i], ustar,
                                                times[i], part="impl2")
                else:
                    for p in parts:
                        rhs = self._stage_rhs(rhs, p, i, old, new_f, dt)
                    part = parts[0]
                    unew = problem.solve_system(rhs, dt * self.qd[part][i, i], values.u[i + 1],
                                                times[i], part=part)
            except SolverError as exc:
                raise SweepError(i + 1, exc) from exc
            new_u.append(unew)
            new_f.append(problem.eval_f(unew, times[i]))
        return NodeValues(new_u, new_f)

    def _stage_rhs(self, rhs, part, i, old, new_f, dt):
        """``rhs - dt QD[i] f_old + dt QD[i, :i] f_new`` for one part."""
        D = self.qd[part]
        M = self.num_nodes
        rhs = rhs - _combine(dt * D[i], [old[j + 1][part] for j in range(M)])
        if i:
            rhs = rhs + _combine(dt * D[i, :i], [new_f[j + 1][part] for j in range(i)])
        return rhs

    def residuals(self, values: NodeValues, dt, tau=None) -> list:
        integral = self.integrate(values, dt)
        out = []
        for m in range(self.num_nodes):
            r = values.u[0] + integral[m] - values.u[m + 1]
            if tau is not None:
                r = r + tau[m]
            out.append(max_norm(r))
        return out

    def compute_residual(self, values: NodeValues, dt, tau=None) -> float:
        return max(self.residuals(values, dt, tau))

    def compute_end_point(self, values: NodeValues):
        if self.coll.nodes[-1] != 1.0:
            raise ValueError("end point needs the right interval boundary as last node")
        return values.u[-1].copy()


def _combine(weights, vectors):
    """``sum_j weights[j] * vectors[j]`` skipping zero weights."""
    out = None
    for w, v in zip(weights, vectors):
        if w == 0.0:
            continue
        out = w * v if out is None else out + w * v
    if out is None:
        return np.zeros_like(vectors[0]) if vectors else 0.0
    return out


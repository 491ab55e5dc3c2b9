"""Levels, steps, transfer operators and the FAS tau-correction.

Grid nesting per boundary type (counts are stored unknowns per dimension):

* Dirichlet, interior points only: ``n_fine = 2 n_coarse + 1``
* periodic: ``n_fine = 2 n_coarse``
* Neumann, boundary points included: ``n_fine = 2 n_coarse - 1``

Restriction is injection, prolongation is linear interpolation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .kernel import Boundary, MeshMeta, StateVector
from .quadrature import interpolation_matrix
from .sweeper import NodeValues, Sweeper


class TransferError(ValueError):
    pass


class StageTag(str, enum.Enum):
    PREDICT = "predict"
    FINE_SWEEP = "fine-sweep"
    CONVERGENCE_CHECK = "convergence-check"
    DOWN = "down"
    COARSE_SWEEP = "coarse-sweep"
    UP = "up"
    DONE = "done"


def coarse_size(n_fine: int, boundary: Boundary) -> int:
    if boundary is Boundary.DIRICHLET0:
        ok, n = n_fine % 2 == 1, (n_fine - 1) // 2
    elif boundary is Boundary.PERIODIC:
        ok, n = n_fine % 2 == 0, n_fine // 2
    else:
        ok, n = n_fine % 2 == 1, (n_fine + 1) // 2
    if not ok or n < 1:
        raise TransferError(f"{n_fine} points cannot be coarsened with {boundary.value} boundaries")
    return n


def _restrict_axis(a, axis, boundary):
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(1, None, 2) if boundary is Boundary.DIRICHLET0 else slice(0, None, 2)
    return a[tuple(idx)]


def _prolong_axis(a, axis, n_fine, boundary):
    a = np.moveaxis(a, axis, 0)
    nc = a.shape[0]
    out = np.empty((n_fine,) + a.shape[1:], dtype=a.dtype)
    if boundary is Boundary.DIRICHLET0:
        out[1::2] = a
        padded = np.concatenate((np.zeros_like(a[:1]), a, np.zeros_like(a[:1])))
        out[0::2] = 0.5 * (padded[:-1] + padded[1:])
    elif boundary is Boundary.PERIODIC:
        out[0::2] = a
        out[1::2] = 0.5 * (a + np.roll(a, -1, axis=0))
    else:
        out[0::2] = a
        out[1::2] = 0.5 * (a[:-1] + a[1:])
    assert out.shape[0] == n_fine and nc >= 1
    return np.moveaxis(out, 0, axis)


class SpaceTransfer:
    """Injection / linear interpolation between two nested meshes."""

    def __init__(self, fine: MeshMeta, coarse: MeshMeta):
        if fine.boundary is not coarse.boundary or fine.ncomp != coarse.ncomp:
            raise TransferError("meshes differ in boundary type or components")
        if len(fine.shape) != len(coarse.shape):
            raise TransferError("meshes differ in dimension")
        self.fine, self.coarse = fine, coarse
        self.identity = fine.shape == coarse.shape
        if not self.identity:
            for nf, nc in zip(fine.shape, coarse.shape):
                if coarse_size(nf, fine.boundary) != nc:
                    raise TransferError(f"{nf} and {nc} points are not nested for "
                                        f"{fine.boundary.value} boundaries")

    def _grid(self, u, meta):
        return np.asarray(u).reshape((meta.ncomp,) + meta.shape)

    def restrict(self, u):
        if self.identity:
            return StateVector(u, self.coarse)
        a = self._grid(u, self.fine)
        for ax in range(1, a.ndim):
            a = _restrict_axis(a, ax, self.fine.boundary)
        return StateVector(a, self.coarse)

    def prolong(self, u):
        if self.identity:
            return StateVector(u, self.fine)
        a = self._grid(u, self.coarse)
        for ax, nf in enumerate(self.fine.shape, start=1):
            a = _prolong_axis(a, ax, nf, self.fine.boundary)
        return StateVector(a, self.fine)


@dataclass
class TransferPair:
    space: SpaceTransfer
    node_restrict: np.ndarray
    node_prolong: np.ndarray

    def restrict_nodes(self, values):
        """Restrict a list of per-node fine vectors to the coarse nodes."""
        reduced = [self.space.restrict(v) for v in values]
        return [_apply_row(row, reduced) for row in self.node_restrict]

    def prolong_nodes(self, values):
        spread = [_apply_row(row, values) for row in self.node_prolong]
        return [self.space.prolong(v) for v in spread]


def _apply_row(row, vectors):
    out = None
    for w, v in zip(row, vectors):
        if w == 0.0:
            continue
        out = w * v if out is None else out + w * v
    return out if out is not None else np.zeros_like(vectors[0])


def build_node_transfer(fine_nodes, coarse_nodes):
    """``(restrict, prolong)`` Lagrange interpolation matrices between node sets."""
    restrict = interpolation_matrix(fine_nodes, coarse_nodes)
    prolong = interpolation_matrix(coarse_nodes, fine_nodes)
    return restrict, prolong


def build_transfer(fine: "Level", coarse: "Level") -> TransferPair:
    R, P = build_node_transfer(fine.sweeper.coll.nodes, coarse.sweeper.coll.nodes)
    return TransferPair(SpaceTransfer(fine.problem.meta, coarse.problem.meta), R, P)


@dataclass
class LevelParams:
    dt: float
    restol: float
    nsweeps: int = 1

    def __post_init__(self):
        if self.dt <= 0 or self.restol < 0 or self.nsweeps < 1:
            raise ValueError(f"invalid level parameters {self}")


@dataclass
class Level:
    index: int
    problem: object
    sweeper: Sweeper
    params: LevelParams
    values: NodeValues | None = None
    tau: list | None = None
    u_restricted: list | None = None
    time: float = 0.0

    @property
    def dt(self):
        return self.params.dt

    def sweep(self):
        for _ in range(self.params.nsweeps):
            self.values = self.sweeper.sweep(self.values, self.problem, self.dt, self.time, self.tau)

    def spread(self, u0):
        self.values = self.sweeper.predict_spread(u0, self.problem, self.time, self.dt)
        self.tau = None
        self.u_restricted = None

    def set_u0(self, u0):
        self.values.u[0] = u0.copy()
        self.values.f[0] = self.problem.eval_f(self.values.u[0], self.time)

    def refresh_f(self):
        times = self.sweeper.node_times(self.time, self.dt)
        self.values.f[1:] = [self.problem.eval_f(u, t) for u, t in zip(self.values.u[1:], times)]

    def residual(self):
        r = self.sweeper.compute_residual(self.values, self.dt, self.tau)
        self.values.residual = r
        return r

    @property
    def uend(self):
        return self.values.u[-1]

    def integral(self):
        return self.sweeper.integrate(self.values, self.dt)


@dataclass
class Step:
    index: int
    slot: int
    time: float
    levels: list
    transfers: list = field(default_factory=list)
    iteration: int = 0
    stage: StageTag = StageTag.PREDICT
    done: bool = False
    block: int = 0

    def __post_init__(self):
        if not self.transfers:
            self.transfers = [build_transfer(f, c) for f, c in zip(self.levels, self.levels[1:])]
        if len(self.transfers) != len(self.levels) - 1:
            raise TransferError("consecutive levels need exactly one transfer pair")
        self.set_time(self.time)

    @property
    def fine(self) -> Level:
        return self.levels[0]

    @property
    def dt(self):
        return self.fine.dt

    def set_time(self, t):
        self.time = t
        for lvl in self.levels:
            lvl.time = t

    def restrict_chain(self, u, to_level):
        """Restrict a fine-level state down to ``to_level`` in space only."""
        for tr in self.transfers[:to_level]:
            u = tr.space.restrict(u)
        return u


def fas_tau(fine: Level, coarse: Level, pair: TransferPair):
    """Per-node FAS correction so the coarse sweep sees fine-level accuracy.

    ``tau_m = R[dt Q_f F_f(u)]_m - [dt Q_c F_c(R u)]_m (+ R tau_f)``, added to
    the coarse right-hand side. The coarse level must already hold the
    restricted values.
    """
    fine_int = pair.restrict_nodes(fine.integral())
    coarse_int = coarse.integral()
    tau = [fi - ci for fi, ci in zip(fine_int, coarse_int)]
    if fine.tau is not None:
        tau = [t + r for t, r in zip(tau, pair.restrict_nodes(fine.tau))]
    return tau


def restrict_step(step: Step, to_level: int):
    """Restrict node values from ``to_level - 1`` onto ``to_level`` and set the tau-correction."""
    if to_level < 1:
        raise ValueError("can only restrict onto a coarser level")
    fine, coarse = step.levels[to_level - 1], step.levels[to_level]
    pair = step.transfers[to_level - 1]
    u_c = pair.restrict_nodes(fine.values.u[1:])
    u0_c = pair.space.restrict(fine.values.u[0])
    times = coarse.sweeper.node_times(coarse.time, coarse.dt)
    f_c = [coarse.problem.eval_f(u0_c, coarse.time)] + [
        coarse.problem.eval_f(u, t) for u, t in zip(u_c, times)]
    coarse.values = NodeValues([u0_c] + u_c, f_c)
    coarse.u_restricted = [u.copy() for u in u_c]
    coarse.tau = fas_tau(fine, coarse, pair)


def coarse_correction(step: Step, from_level: int):
    """Add the interpolated coarse change onto level ``from_level - 1``."""
    fine, coarse = step.levels[from_level - 1], step.levels[from_level]
    pair = step.transfers[from_level - 1]
    if coarse.u_restricted is None:
        raise ValueError("coarse level holds no stored restriction")
    delta = [u - r for u, r in zip(coarse.values.u[1:], coarse.u_restricted)]
    corr = pair.prolong_nodes(delta)
    fine.values.u[1:] = [u + c for u, c in zip(fine.values.u[1:], corr)]
    fine.refresh_f()

"""Emulated hard faults and interpolation-based restart of a lost time step."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .hierarchy import Step, coarse_correction, restrict_step


class Recovery(str, enum.Enum):
    INTERPOLATION_RESTART = "interpolation"


@dataclass(frozen=True)
class FaultConfig:
    probability: float = 0.03
    rng_seed: int = 0
    recovery: Recovery = Recovery.INTERPOLATION_RESTART
    coarse_correction_sweeps: int = 0

    def __post_init__(self):
        object.__setattr__(self, "recovery", Recovery(self.recovery))
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("fault probability must lie in [0, 1]")
        if self.coarse_correction_sweeps < 0:
            raise ValueError("coarse_correction_sweeps must be non-negative")

    def pattern(self, nblocks: int, nprocs: int, maxiter: int) -> np.ndarray:
        """Boolean ``[block, slot, iteration-1]`` array drawn up front from the seed."""
        rng = np.random.default_rng(self.rng_seed)
        return rng.random((nblocks, nprocs, maxiter)) < self.probability


def fault_schedule(pattern: np.ndarray, reference_iterations: dict) -> set:
    """Faults restricted to iterations the fault-free run actually performed.

    ``reference_iterations`` maps ``(block, slot)`` to the iteration count of
    that step without faults.
    """
    out = set()
    for b, s, k in zip(*np.nonzero(pattern)):
        it = int(k) + 1
        if it <= reference_iterations.get((int(b), int(s)), 0):
            out.add((int(b), int(s), it))
    return out


class RecoveryError(RuntimeError):
    pass


def wipe_step(step: Step):
    """Lose all node data of a step, as after a node crash."""
    for lvl in step.levels:
        vals = lvl.values
        vals.u = [np.zeros_like(u) for u in vals.u]
        vals.f = [f.zeros_like() for f in vals.f]
        vals.residual = float("nan")
        lvl.tau = None
        lvl.u_restricted = None


def recover_step(step: Step, left_end, right: Step | None, coarse_sweeps: int = 0):
    """Rebuild the fine node values of ``step`` by linear interpolation in time.

    ``left_end`` is the end value of the previous step (or the block's
    initial value), ``right`` the following step or ``None``. Each node takes
    ``(1 - theta) * left_end + theta * right.u[m]`` with ``theta`` the relative
    position of the node between the left end time and the matching node of
    the right step.
    """
    if left_end is None and right is None:
        raise RecoveryError(f"step {step.index} has no neighbour to recover from")
    fine = step.fine
    nodes = fine.sweeper.coll.nodes
    dt = step.dt
    if left_end is None:
        # without a left datum copy the right step's initial value
        left_end = right.fine.values.u[0]
    fine.values.u[0] = left_end.copy()
    if right is None:
        fine.values.u[1:] = [left_end.copy() for _ in nodes]
    else:
        t_left = step.time
        t_nodes = step.time + dt * nodes
        t_right = right.time + right.dt * nodes
        theta = (t_nodes - t_left) / (t_right - t_left)
        fine.values.u[1:] = [(1.0 - th) * left_end + th * ur
                             for th, ur in zip(theta, right.fine.values.u[1:])]
    fine.set_u0(fine.values.u[0])
    fine.refresh_f()
    nlev = len(step.levels)
    for lvl in step.levels[1:]:
        lvl.spread(step.restrict_chain(fine.values.u[0], lvl.index))
    for _ in range(coarse_sweeps if nlev > 1 else 0):
        for l in range(1, nlev):
            restrict_step(step, l)
        coarse = step.levels[-1]
        coarse.set_u0(step.restrict_chain(fine.values.u[0], nlev - 1))
        coarse.sweep()
        for l in range(nlev - 1, 0, -1):
            coarse_correction(step, l)

from __future__ import annotations

from collections import Counter

import numpy as np

from ..kernel import MeshMeta, RhsParts, SolverCaps, StateVector


class Problem:
    """Contract every concrete problem implements.

    ``solve_system(rhs, factor, guess, t, part)`` returns ``u`` with
    ``u - factor * f_part(u) = rhs``, where ``part`` names one of the implicit
    right-hand side parts (``"full"``, ``"impl"``, ``"impl1"`` or ``"impl2"``).
    """

    layout: tuple[str, ...] = ("full",)
    meta: MeshMeta
    caps: SolverCaps = SolverCaps()
    params: dict

    def __init__(self):
        self.counts = Counter()

    def eval_f(self, u, t) -> RhsParts:
        raise NotImplementedError

    def solve_system(self, rhs, factor, guess, t, part=None):
        raise NotImplementedError

    def u_init(self, t=0.0) -> StateVector:
        return self.exact(t)

    def exact(self, t) -> StateVector:
        raise NotImplementedError(f"{type(self).__name__} has no exact solution")

    @property
    def has_exact(self) -> bool:
        return type(self).exact is not Problem.exact

    def zeros(self) -> StateVector:
        return StateVector.zeros(self.meta)

    def _vec(self, values) -> StateVector:
        return StateVector(values, self.meta)

    def _tally(self, newton=0, linear=0):
        self.counts["solves"] += 1
        self.counts["newton"] += newton
        self.counts["linear"] += linear

    def describe(self) -> str:
        items = ", ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{type(self).__name__}({items})"


def grid_points(n: int, lo: float, hi: float, include_boundary: bool) -> np.ndarray:
    if include_boundary:
        return np.linspace(lo, hi, n)
    dx = (hi - lo) / (n + 1)
    return lo + dx * np.arange(1, n + 1)

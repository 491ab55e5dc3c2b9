import numpy as np

from ..kernel import MeshMeta, RhsParts, StateVector
from .base import Problem


class Dahlquist(Problem):
    """Scalar test equation ``u' = lambda * u``."""

    layout = ("full",)

    def __init__(self, lam=-1.0, u0=1.0):
        super().__init__()
        self.lam = lam
        self.u0 = u0
        self.dtype = complex if np.iscomplexobj(lam) else float
        self.meta = MeshMeta((1,), (1.0,))
        self.params = {"lam": lam, "u0": u0}

    def eval_f(self, u, t):
        return RhsParts(full=self.lam * u)

    def solve_system(self, rhs, factor, guess, t, part="full"):
        self._tally()
        return rhs / (1.0 - factor * self.lam)

    def exact(self, t):
        return StateVector(np.array([self.u0 * np.exp(self.lam * t)], dtype=self.dtype), self.meta)

    def zeros(self):
        return StateVector(np.zeros(1, dtype=self.dtype), self.meta)


def dahlquist(lam=-1.0, u0=1.0) -> Dahlquist:
    return Dahlquist(lam, u0)

"""Periodic 2D Allen-Cahn equation with five right-hand side splittings."""

from __future__ import annotations

import enum

import numpy as np

from ..kernel import Boundary, MeshMeta, RhsParts, SolverCaps, cg_solve, newton_solve
from .base import Problem
from .stencils import laplacian_2d


class Splitting(str, enum.Enum):
    FULLY_IMPLICIT = "fully-implicit"
    SEMI_IMPLICIT = "semi-implicit"
    MULTI_IMPLICIT = "multi-implicit"
    SEMI_IMPLICIT_WEIRD = "semi-implicit-weird"
    MULTI_IMPLICIT_WEIRD = "multi-implicit-weird"


LAYOUTS = {
    Splitting.FULLY_IMPLICIT: ("full",),
    Splitting.SEMI_IMPLICIT: ("impl", "expl"),
    Splitting.MULTI_IMPLICIT: ("impl1", "impl2"),
    Splitting.SEMI_IMPLICIT_WEIRD: ("impl", "expl"),
    Splitting.MULTI_IMPLICIT_WEIRD: ("impl1", "impl2"),
}

EXACT_CAPS = SolverCaps(newton_tol=1e-9, newton_maxiter=100, lin_tol=1e-10, lin_maxiter=1000)
INEXACT_CAPS = SolverCaps(newton_tol=1e-9, newton_maxiter=1, lin_tol=1e-10, lin_maxiter=10)


def _diag_solve(J, b, caps):
    return b / J, 0


class AllenCahn2D(Problem):
    """``u_t = Lap(u) + eps**-2 u (1 - u**2)`` on [-0.5, 0.5)**2, periodic.

    The initial condition is a circle of radius ``radius`` around the origin
    with a tanh interface profile.
    """

    def __init__(self, nvars=128, eps=0.04, splitting="fully-implicit", caps=None, radius=0.25):
        super().__init__()
        self.splitting = Splitting(splitting)
        self.layout = LAYOUTS[self.splitting]
        self.eps, self.nvars, self.radius = eps, nvars, radius
        self.caps = caps or EXACT_CAPS
        self.dx = 1.0 / nvars
        x = -0.5 + self.dx * np.arange(nvars)
        X, Y = np.meshgrid(x, x, indexing="ij")
        self.dist = np.sqrt(X**2 + Y**2).reshape(-1)
        self.meta = MeshMeta((nvars, nvars), (self.dx, self.dx), Boundary.PERIODIC)
        self.A = laplacian_2d(nvars, self.dx, Boundary.PERIODIC)
        self.params = {"nvars": nvars, "eps": eps, "splitting": self.splitting.value, "radius": radius}

    @property
    def inv_eps2(self):
        return 1.0 / self.eps**2

    def u_init(self, t=0.0):
        return self._vec(np.tanh((self.radius - self.dist) / (np.sqrt(2.0) * self.eps)))

    def eval_f(self, u, t):
        lap = self.A @ u
        c = self.inv_eps2
        s = self.splitting
        if s is Splitting.FULLY_IMPLICIT:
            return RhsParts(full=self._vec(lap + c * u * (1.0 - u**2)))
        if s in (Splitting.SEMI_IMPLICIT, Splitting.MULTI_IMPLICIT):
            a, b = self._vec(lap), self._vec(c * u * (1.0 - u**2))
        else:
            a, b = self._vec(lap - c * u**3), self._vec(c * u)
        names = self.layout
        return RhsParts(**{names[0]: a, names[1]: b})

    def solve_system(self, rhs, factor, guess, t, part=None):
        part = part or self.layout[0]
        rhs = np.asarray(rhs)
        guess = np.asarray(guess)
        c = self.inv_eps2
        A = self.A
        s = self.splitting
        if s is Splitting.FULLY_IMPLICIT:
            u, kn, kl = newton_solve(
                lambda v: v - factor * (A @ v + c * v * (1.0 - v**2)) - rhs,
                lambda v: (lambda w: w - factor * (A @ w + c * (1.0 - 3.0 * v**2) * w)),
                guess, self.caps)
        elif part in ("impl", "impl1") and s in (Splitting.SEMI_IMPLICIT, Splitting.MULTI_IMPLICIT):
            u, kl = cg_solve(lambda w: w - factor * (A @ w), rhs, guess, self.caps)
            kn = 0
        elif part in ("impl", "impl1"):
            u, kn, kl = newton_solve(
                lambda v: v - factor * (A @ v - c * v**3) - rhs,
                lambda v: (lambda w: w - factor * (A @ w - 3.0 * c * v**2 * w)),
                guess, self.caps)
        elif s is Splitting.MULTI_IMPLICIT:
            # pointwise reaction, the Jacobian is diagonal
            u, kn, kl = newton_solve(
                lambda v: v - factor * c * v * (1.0 - v**2) - rhs,
                lambda v: 1.0 - factor * c * (1.0 - 3.0 * v**2),
                guess, self.caps, lin_solver=_diag_solve)
        elif s is Splitting.MULTI_IMPLICIT_WEIRD:
            u, kn, kl = rhs / (1.0 - factor * c), 0, 0
        else:
            raise ValueError(f"part {part!r} is not implicit for splitting {s.value}")
        self._tally(newton=kn, linear=kl)
        return self._vec(u)

"""Forced heat equations with homogeneous Dirichlet boundaries.

The solution vector holds interior points only. Both problems can be run
split (diffusion implicit, forcing explicit) or fully implicit.
"""

import numpy as np

from ..kernel import Boundary, MeshMeta, RhsParts, SolverCaps, StateVector, cg_solve, thomas_solve
from .base import Problem, grid_points
from .stencils import laplacian_1d, laplacian_2d

SPLITTINGS = ("imex", "implicit")


def _layout(splitting):
    if splitting not in SPLITTINGS:
        raise ValueError(f"heat problems support splittings {SPLITTINGS}, got {splitting!r}")
    return ("impl", "expl") if splitting == "imex" else ("full",)


class Heat1DForced(Problem):
    """``u_t = nu u_xx + f`` on [0, 1] with exact solution ``sin(k pi x) cos(t)``."""

    def __init__(self, nu=0.1, freq=8, nvars=511, splitting="imex"):
        super().__init__()
        if nvars < 1 or nvars % 2 == 0:
            raise ValueError(f"nvars must be odd and positive, got {nvars}")
        if nu <= 0:
            raise ValueError("nu must be positive")
        self.nu, self.freq, self.nvars = nu, freq, nvars
        self.layout = _layout(splitting)
        self.x = grid_points(nvars, 0.0, 1.0, include_boundary=False)
        self.dx = 1.0 / (nvars + 1)
        self.meta = MeshMeta((nvars,), (self.dx,), Boundary.DIRICHLET0)
        self.A = nu * laplacian_1d(nvars, self.dx, Boundary.DIRICHLET0)
        self.params = {"nu": nu, "freq": freq, "nvars": nvars, "splitting": splitting}

    def forcing(self, t):
        k = self.freq * np.pi
        return np.sin(k * self.x) * (-np.sin(t) + self.nu * k**2 * np.cos(t))

    def eval_f(self, u, t):
        diffusion = self._vec(self.A @ u)
        force = self._vec(self.forcing(t))
        if self.layout == ("full",):
            return RhsParts(full=diffusion + force)
        return RhsParts(impl=diffusion, expl=force)

    def solve_system(self, rhs, factor, guess, t, part=None):
        if self.layout == ("full",):
            rhs = rhs + factor * self.forcing(t)
        off = -factor * self.nu / self.dx**2 * np.ones(self.nvars)
        diag = 1.0 + 2.0 * factor * self.nu / self.dx**2 * np.ones(self.nvars)
        self._tally()
        return self._vec(thomas_solve(off, diag, off, rhs))

    def exact(self, t):
        return self._vec(np.sin(self.freq * np.pi * self.x) * np.cos(t))


class Heat2DForced(Problem):
    """``u_t = nu Lap(u) + f`` on the unit square.

    ``nvars`` counts grid points per dimension including the two boundary
    points, so the state holds ``(nvars - 2)**2`` interior values.
    """

    def __init__(self, nvars=129, nu=1.0, freq=2, splitting="imex", caps=None):
        super().__init__()
        if nvars < 3 or nvars % 2 == 0:
            raise ValueError(f"nvars must be odd and at least 3, got {nvars}")
        self.nu, self.freq, self.nvars = nu, freq, nvars
        self.layout = _layout(splitting)
        self.caps = caps or SolverCaps(lin_tol=1e-12, lin_maxiter=10_000)
        n = nvars - 2
        self.n = n
        self.dx = 1.0 / (nvars - 1)
        x = grid_points(n, 0.0, 1.0, include_boundary=False)
        self.X, self.Y = (g.reshape(-1) for g in np.meshgrid(x, x, indexing="ij"))
        self.meta = MeshMeta((n, n), (self.dx, self.dx), Boundary.DIRICHLET0)
        self.A = nu * laplacian_2d(n, self.dx, Boundary.DIRICHLET0)
        self.params = {"nvars": nvars, "nu": nu, "freq": freq, "splitting": splitting}

    def _shape(self):
        k = self.freq * np.pi
        return np.sin(k * self.X) * np.sin(k * self.Y)

    def forcing(self, t):
        k = self.freq * np.pi
        return self._shape() * (-np.sin(t) + 2.0 * self.nu * k**2 * np.cos(t))

    def eval_f(self, u, t):
        diffusion = self._vec(self.A @ u)
        force = self._vec(self.forcing(t))
        if self.layout == ("full",):
            return RhsParts(full=diffusion + force)
        return RhsParts(impl=diffusion, expl=force)

    def solve_system(self, rhs, factor, guess, t, part=None):
        if self.layout == ("full",):
            rhs = rhs + factor * self.forcing(t)
        A = self.A
        u, k = cg_solve(lambda v: v - factor * (A @ v), np.asarray(rhs), np.asarray(guess), self.caps)
        self._tally(linear=k)
        return self._vec(u)

    def exact(self, t):
        return self._vec(self._shape() * np.cos(t))


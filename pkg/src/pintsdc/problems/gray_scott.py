"""1D Gray-Scott reaction-diffusion model on [0, L] with Neumann boundaries.

The state stacks both species, ``[u_0..u_{N-1}, v_0..v_{N-1}]``. The decay
term of the second species follows ``- B u`` unless ``standard_decay`` is
set, in which case the textbook ``-(A + B) v`` is used.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..kernel import Boundary, MeshMeta, RhsParts, SolverCaps, newton_solve
from .base import Problem
from .stencils import laplacian_1d


def _direct(J, b, caps):
    return spla.spsolve(J, b), 1


class GrayScott1D(Problem):
    layout = ("full",)

    def __init__(self, nvars=513, A=0.09, B=0.086, D=0.01, length=100.0, caps=None,
                 standard_decay=False):
        super().__init__()
        if nvars < 3:
            raise ValueError("need at least three grid points")
        self.nvars, self.A_feed, self.B, self.D, self.length = nvars, A, B, D, length
        self.standard_decay = standard_decay
        self.caps = caps or SolverCaps(newton_tol=1e-9, newton_maxiter=50)
        self.dx = length / (nvars - 1)
        self.x = np.linspace(0.0, length, nvars)
        self.meta = MeshMeta((nvars,), (self.dx,), Boundary.NEUMANN0, ncomp=2)
        self.L = laplacian_1d(nvars, self.dx, Boundary.NEUMANN0)
        self.eye = sp.identity(nvars, format="csr")
        self.params = {"nvars": nvars, "A": A, "B": B, "D": D, "length": length,
                       "standard_decay": standard_decay}

    def _split(self, w):
        n = self.nvars
        return w[:n], w[n:]

    def _rhs(self, w):
        u, v = self._split(w)
        uv2 = u * v**2
        fu = self.L @ u - uv2 + self.A_feed * (1.0 - u)
        if self.standard_decay:
            fv = self.D * (self.L @ v) + uv2 - (self.A_feed + self.B) * v
        else:
            fv = self.D * (self.L @ v) + uv2 - self.B * u
        return np.concatenate((fu, fv))

    def _jacobian(self, w):
        u, v = self._split(w)
        d = sp.diags
        Juu = self.L - d(v**2) - self.A_feed * self.eye
        Juv = d(-2.0 * u * v)
        if self.standard_decay:
            Jvu = d(v**2)
            Jvv = self.D * self.L + d(2.0 * u * v) - (self.A_feed + self.B) * self.eye
        else:
            Jvu = d(v**2 - self.B)
            Jvv = self.D * self.L + d(2.0 * u * v)
        return sp.bmat([[Juu, Juv], [Jvu, Jvv]], format="csr")

    def eval_f(self, w, t):
        return RhsParts(full=self._vec(self._rhs(w)))

    def solve_system(self, rhs, factor, guess, t, part=None):
        rhs = np.asarray(rhs)
        eye2 = sp.identity(2 * self.nvars, format="csr")
        w, kn, kl = newton_solve(
            lambda z: z - factor * self._rhs(z) - rhs,
            lambda z: (eye2 - factor * self._jacobian(z)).tocsc(),
            np.asarray(guess), self.caps, lin_solver=_direct)
        self._tally(newton=kn, linear=kl)
        return self._vec(w)

    def u_init(self, t=0.0):
        s = np.sin(np.pi * self.x / self.length) ** 100
        return self._vec(np.concatenate((1.0 - 0.5 * s, 0.25 * s)))

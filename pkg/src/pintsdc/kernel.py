"""State containers and the inner solver toolkit.

Every norm in here is the max-norm and every tolerance is absolute.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np


class Boundary(str, enum.Enum):
    DIRICHLET0 = "dirichlet0"
    PERIODIC = "periodic"
    NEUMANN0 = "neumann0"


@dataclass(frozen=True)
class MeshMeta:
    shape: tuple[int, ...]
    spacing: tuple[float, ...]
    boundary: Boundary = Boundary.DIRICHLET0
    ncomp: int = 1

    def __post_init__(self):
        if not 1 <= len(self.shape) <= 2 or any(n < 1 for n in self.shape):
            raise ValueError(f"invalid mesh shape {self.shape}")
        if len(self.spacing) != len(self.shape) or any(h <= 0 for h in self.spacing):
            raise ValueError(f"invalid mesh spacing {self.spacing}")

    @property
    def size(self) -> int:
        return self.ncomp * int(np.prod(self.shape))


class StateVector(np.ndarray):
    """Flat array of unknowns carrying its mesh metadata.

    Arithmetic is plain numpy; results of elementwise operations keep the
    metadata of the left operand.
    """

    def __new__(cls, values, meta: MeshMeta | None = None):
        obj = np.array(values, copy=True).reshape(-1).view(cls)
        obj.meta = meta
        if meta is not None and obj.size != meta.size:
            raise ValueError(f"{obj.size} values do not fit mesh of size {meta.size}")
        return obj

    def __array_finalize__(self, obj):
        self.meta = getattr(obj, "meta", None)

    @classmethod
    def zeros(cls, meta: MeshMeta, dtype=float) -> "StateVector":
        return cls(np.zeros(meta.size, dtype=dtype), meta)

    def axpy(self, a, x) -> "StateVector":
        """In-place ``self += a * x``."""
        self += a * x
        return self

    def norm(self) -> float:
        return max_norm(self)


def max_norm(x) -> float:
    x = np.asarray(x)
    return float(np.max(np.abs(x))) if x.size else 0.0


class RhsParts:
    """Right-hand side values split into named parts whose sum is the full ``f``.

    Layouts are ``("full",)``, ``("impl", "expl")`` or ``("impl1", "impl2")``.
    """

    LAYOUTS = {("full",), ("impl", "expl"), ("impl1", "impl2")}

    __slots__ = ("parts",)

    def __init__(self, **parts):
        if tuple(parts) not in self.LAYOUTS:
            raise ValueError(f"unknown right-hand side layout {tuple(parts)}")
        self.parts = parts

    @property
    def layout(self) -> tuple[str, ...]:
        return tuple(self.parts)

    def __getitem__(self, name):
        return self.parts[name]

    def full(self):
        it = iter(self.parts.values())
        out = next(it).copy()
        for p in it:
            out += p
        return out

    def copy(self) -> "RhsParts":
        return RhsParts(**{k: v.copy() for k, v in self.parts.items()})

    def zeros_like(self) -> "RhsParts":
        return RhsParts(**{k: np.zeros_like(v) for k, v in self.parts.items()})


@dataclass(frozen=True)
class SolverCaps:
    newton_tol: float = 1e-12
    newton_maxiter: int = 100
    lin_tol: float = 1e-12
    lin_maxiter: int = 1000

    def __post_init__(self):
        if self.newton_tol <= 0 or self.lin_tol <= 0:
            raise ValueError("solver tolerances must be positive")
        if self.newton_maxiter < 1 or self.lin_maxiter < 1:
            raise ValueError("solver iteration caps must be at least 1")


class SolverError(RuntimeError):
    pass


class ZeroPivot(SolverError):
    pass


class Breakdown(SolverError):
    pass


class Divergence(SolverError):
    pass


def thomas_solve(lower, diag, upper, rhs):
    """Solve a tridiagonal system; ``lower[0]`` and ``upper[-1]`` are ignored."""
    a = np.asarray(lower, dtype=float)
    b = np.asarray(diag, dtype=float)
    c = np.asarray(upper, dtype=float)
    d = np.asarray(rhs)
    n = b.size
    cp = np.empty(n)
    dp = np.empty(n, dtype=np.result_type(d, float))
    if b[0] == 0.0:
        raise ZeroPivot("zero pivot in row 0")
    cp[0] = c[0] / b[0] if n > 1 else 0.0
    dp[0] = d[0] / b[0]
    for i in range(1, n):
        denom = b[i] - a[i] * cp[i - 1]
        if denom == 0.0:
            raise ZeroPivot(f"zero pivot in row {i}")
        cp[i] = c[i] / denom if i < n - 1 else 0.0
        dp[i] = (d[i] - a[i] * dp[i - 1]) / denom
    x = np.empty_like(dp)
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    if isinstance(rhs, StateVector):
        return StateVector(x, rhs.meta)
    return x


def _as_operator(A) -> Callable:
    return A if callable(A) else (lambda v: A @ v)


def cg_solve(apply_A, rhs, x0, caps: SolverCaps):
    """Unpreconditioned conjugate gradients.

    Stops once the max-norm of ``rhs - A x`` is at most ``caps.lin_tol`` or
    after ``caps.lin_maxiter`` iterations; returns ``(x, iterations)``.
    Raises :class:`Breakdown` on a non-positive curvature direction.
    """
    A = _as_operator(apply_A)
    x = np.array(x0, dtype=float, copy=True)
    r = rhs - A(x)
    it = 0
    if max_norm(r) <= caps.lin_tol:
        return _like(x, rhs), 0
    p = r.copy()
    rr = float(np.dot(r, r))
    while it < caps.lin_maxiter:
        Ap = A(p)
        pAp = float(np.dot(p, Ap))
        if pAp <= 0.0:
            raise Breakdown(f"non-positive curvature {pAp:.3e} in CG iteration {it + 1}")
        alpha = rr / pAp
        x += alpha * p
        r -= alpha * Ap
        it += 1
        if max_norm(r) <= caps.lin_tol:
            break
        rr_new = float(np.dot(r, r))
        p *= rr_new / rr
        p += r
        rr = rr_new
    return _like(x, rhs), it


def _like(x, template):
    if isinstance(template, StateVector):
        return StateVector(x, template.meta)
    return np.asarray(x)


def newton_solve(residual_fn, jacobian_apply, u0, caps: SolverCaps, lin_solver=None):
    """Newton's method with an analytic Jacobian.

    ``jacobian_apply(u)`` returns the Jacobian at ``u`` as anything the linear
    solver accepts (a callable or a matrix for the default CG).
    ``lin_solver(J, rhs, caps)`` returns ``(correction, iterations)``.
    Returns ``(u, newton_iterations, linear_iterations)``.
    """
    if lin_solver is None:
        lin_solver = lambda J, b, c: cg_solve(J, b, np.zeros_like(b), c)
    u = np.array(u0, copy=True)
    n_newton = n_lin = 0
    growth = 0
    res = residual_fn(u)
    norm = max_norm(res)
    while n_newton < caps.newton_maxiter:
        if norm <= caps.newton_tol:
            break
        du, k = lin_solver(jacobian_apply(u), -res, caps)
        u = u + du
        n_newton += 1
        n_lin += k
        res = residual_fn(u)
        new_norm = max_norm(res)
        if not np.isfinite(new_norm):
            raise Divergence(f"Newton residual not finite after {n_newton} iterations")
        growth = growth + 1 if new_norm > norm else 0
        if growth >= 5:
            raise Divergence(f"Newton residual grew for 5 consecutive iterations ({new_norm:.3e})")
        norm = new_norm
    return _like(u, u0), n_newton, n_lin

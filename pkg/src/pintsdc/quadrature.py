"""Collocation nodes, quadrature matrices and SDC preconditioners.

All matrices live on the unit interval; callers scale by the step size.
Node sets always contain the right endpoint 1, which keeps the
step-coupling matrix trivial.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre


class NodeKind(str, enum.Enum):
    RADAU_RIGHT = "radau-right"
    LOBATTO = "lobatto"


class QDeltaKind(str, enum.Enum):
    IMPLICIT_EULER = "IE"
    EXPLICIT_EULER = "EE"
    LU = "LU"


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class NodeFamily:
    kind: NodeKind
    count: int

    def __post_init__(self):
        object.__setattr__(self, "kind", NodeKind(self.kind))
        if self.count < 1:
            raise QuadratureError("need at least one node")
        if self.kind is NodeKind.LOBATTO and self.count < 2:
            raise QuadratureError("Gauss-Lobatto needs at least two nodes")


def _polish(poly: np.ndarray, roots: np.ndarray) -> np.ndarray:
    # a few Newton steps on the Legendre-series polynomial, roots stay put
    # where the derivative vanishes numerically
    dpoly = legendre.legder(poly)
    for _ in range(3):
        d = legendre.legval(roots, dpoly)
        step = np.divide(legendre.legval(roots, poly), d, out=np.zeros_like(roots), where=d != 0)
        roots = roots - step
    return roots


def compute_nodes(family: NodeFamily) -> np.ndarray:
    """Collocation nodes on the unit interval, strictly increasing, last node 1."""
    M = family.count
    if family.kind is NodeKind.RADAU_RIGHT:
        if M == 1:
            return np.array([1.0])
        # right Radau points on [-1, 1] are the roots of P_M - P_{M-1}; x = 1 is one of them
        poly = np.zeros(M + 1)
        poly[M] = 1.0
        poly[M - 1] = -1.0
        # divide out the known root and solve for the interior ones
        interior, _ = legendre.legdiv(poly, legendre.poly2leg([-1.0, 1.0]))
        x = np.sort(legendre.legroots(interior).real)
        x = _polish(interior, x)
        x = np.append(x, 1.0)
    else:
        if M == 2:
            return np.array([0.0, 1.0])
        # interior Lobatto points are the roots of P'_{M-1}
        poly = legendre.legder(np.eye(M)[M - 1])
        x = np.sort(legendre.legroots(poly).real)
        x = _polish(poly, x)
        x = np.concatenate(([-1.0], x, [1.0]))
    nodes = (x + 1.0) / 2.0
    nodes[-1] = 1.0
    if family.kind is NodeKind.LOBATTO:
        nodes[0] = 0.0
    return nodes


def _check_nodes(nodes: np.ndarray) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.size == 0:
        raise QuadratureError("nodes must be a non-empty 1d array")
    if np.any(np.diff(nodes) <= 0):
        raise QuadratureError("nodes must be distinct and strictly increasing")
    return nodes


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    nodes = _check_nodes(nodes)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def interpolation_matrix(nodes: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Matrix mapping values at ``nodes`` to the Lagrange interpolant at ``points``.

    Points that coincide with a node give an exact unit row, so interpolation
    onto a subset of the nodes is plain injection.
    """
    nodes = _check_nodes(nodes)
    points = np.atleast_1d(np.asarray(points, dtype=float))
    w = barycentric_weights(nodes)
    out = np.zeros((points.size, nodes.size))
    for i, p in enumerate(points):
        d = p - nodes
        hit = np.flatnonzero(np.abs(d) < 1e-14)
        if hit.size:
            out[i, hit[0]] = 1.0
            continue
        terms = w / d
        out[i] = terms / terms.sum()
    return out


def compute_q(nodes: np.ndarray) -> np.ndarray:
    """q[m, j] = integral of the j-th Lagrange basis polynomial from 0 to nodes[m]."""
    nodes = _check_nodes(nodes)
    M = nodes.size
    # Gauss-Legendre with M points is exact for the degree M-1 basis
    gx, gw = legendre.leggauss(max(M, 1))
    q = np.zeros((M, M))
    for m, tau in enumerate(nodes):
        s = tau * (gx + 1.0) / 2.0
        q[m] = (tau / 2.0) * gw @ interpolation_matrix(nodes, s)
    return q


def compute_qdelta(kind: QDeltaKind | str, nodes: np.ndarray, q: np.ndarray | None = None) -> np.ndarray:
    kind = QDeltaKind(kind)
    nodes = _check_nodes(nodes)
    M = nodes.size
    widths = np.diff(np.concatenate(([0.0], nodes)))
    qd = np.zeros((M, M))
    if kind is QDeltaKind.IMPLICIT_EULER:
        for m in range(M):
            qd[m, : m + 1] = widths[: m + 1]
    elif kind is QDeltaKind.EXPLICIT_EULER:
        # left-rectangle rule over node values only, f(u_0) is not used
        for m in range(1, M):
            qd[m, :m] = widths[1 : m + 1]
    else:
        if q is None:
            q = compute_q(nodes)
        q = np.asarray(q)
        # a node at the left end has a zero row in Q and stays equal to u_0,
        # so only the trailing block is factorised
        s = 1 if nodes[0] == 0.0 else 0
        if s < M:
            _, U = lu_nopivot(q[s:, s:].T)
            qd[s:, s:] = U.T
    return qd


def lu_nopivot(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Doolittle factorisation ``a = L @ U`` with unit lower-triangular L, no pivoting."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    L = np.eye(n)
    U = np.zeros_like(a)
    for i in range(n):
        U[i, i:] = a[i, i:] - L[i, :i] @ U[:i, i:]
        if abs(U[i, i]) < 1e-14:
            raise QuadratureError(f"singular leading minor of order {i + 1}")
        L[i + 1 :, i] = (a[i + 1 :, i] - L[i + 1 :, :i] @ U[:i, i]) / U[i, i]
    return L, U


def compute_h(nodes: np.ndarray) -> np.ndarray:
    nodes = _check_nodes(nodes)
    if nodes[-1] != 1.0:
        raise QuadratureError("step coupling needs the right endpoint as last node")
    h = np.zeros((nodes.size, nodes.size))
    h[:, -1] = 1.0
    return h


@dataclass(frozen=True)
class CollocationRule:
    family: NodeFamily
    nodes: np.ndarray
    q: np.ndarray
    h: np.ndarray

    @property
    def num_nodes(self) -> int:
        return self.nodes.size

    def qdelta(self, kind: QDeltaKind | str) -> np.ndarray:
        return _qdelta_cached(self.family, QDeltaKind(kind))


@lru_cache(maxsize=None)
def _qdelta_cached(family: NodeFamily, kind: QDeltaKind) -> np.ndarray:
    rule = collocation_rule(family.kind, family.count)
    qd = compute_qdelta(kind, rule.nodes, rule.q)
    qd.setflags(write=False)
    return qd


@lru_cache(maxsize=None)
def _rule(kind: NodeKind, count: int) -> CollocationRule:
    family = NodeFamily(kind, count)
    nodes = compute_nodes(family)
    q = compute_q(nodes)
    h = compute_h(nodes)
    for a in (nodes, q, h):
        a.setflags(write=False)
    return CollocationRule(family, nodes, q, h)


def collocation_rule(kind: NodeKind | str, count: int) -> CollocationRule:
    """Cached, read-only collocation rule for a node family."""
    return _rule(NodeKind(kind), int(count))

"""Reference computations that share no code with the package."""

import mpmath as mp
import numpy as np

mp.mp.dps = 40


def legendre(n, x):
    return mp.legendre(n, x)


def radau_right_nodes(M):
    """Roots of P_M - P_{M-1} on [-1, 1] mapped to [0, 1]; the root x=1 is included."""
    if M == 1:
        return [mp.mpf(1)]
    f = lambda x: legendre(M, x) - legendre(M - 1, x)
    roots = _bracket_roots(f, M)
    return [(r + 1) / 2 for r in roots]


def lobatto_nodes(M):
    """Endpoints plus roots of P'_{M-1}, mapped to [0, 1]."""
    if M == 2:
        return [mp.mpf(0), mp.mpf(1)]
    dp = lambda x: mp.diff(lambda y: legendre(M - 1, y), x)
    inner = _bracket_roots(dp, M - 2, open_ends=True)
    return [mp.mpf(0)] + [(r + 1) / 2 for r in inner] + [mp.mpf(1)]


def _bracket_roots(f, count, open_ends=False):
    """Sign-change scan on a fine grid followed by bisection-polished findroot."""
    xs = [mp.mpf(-1) + 2 * mp.mpf(i) / 4000 for i in range(4001)]
    roots = []
    for a, b in zip(xs, xs[1:]):
        fa, fb = f(a), f(b)
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(mp.findroot(f, (a, b), solver="anderson"))
    if f(xs[-1]) == 0:
        roots.append(xs[-1])
    roots = sorted(set(roots))
    if open_ends:
        roots = [r for r in roots if abs(abs(r) - 1) > mp.mpf("1e-30")]
    assert len(roots) == count, (len(roots), count)
    return roots


def lagrange_integrals(nodes):
    """q[m][j] = integral from 0 to nodes[m] of the j-th Lagrange basis polynomial."""
    M = len(nodes)

    def basis(j):
        def ell(s):
            out = mp.mpf(1)
            for k in range(M):
                if k != j:
                    out *= (s - nodes[k]) / (nodes[j] - nodes[k])
            return out
        return ell

    return [[mp.quad(basis(j), [0, nodes[m]]) for j in range(M)] for m in range(M)]


def to_array(rows):
    return np.array([[float(v) for v in row] for row in rows])


def dense_collocation(lam, u0, Q, dt):
    """Node values of the collocation problem for u' = lam u, by a dense solve."""
    M = Q.shape[0]
    A = np.eye(M) - dt * lam * Q
    return np.linalg.solve(A, np.full(M, u0, dtype=np.result_type(lam, float)))


def node_widths(nodes):
    """Distances between consecutive nodes, starting from 0."""
    return [nodes[0]] + [nodes[m] - nodes[m - 1] for m in range(1, len(nodes))]


def qdelta_ie(nodes):
    w = node_widths(nodes)
    M = len(nodes)
    return [[w[j] if j <= m else mp.mpf(0) for j in range(M)] for m in range(M)]


def qdelta_ee(nodes):
    w = node_widths(nodes)
    M = len(nodes)
    return [[w[j + 1] if j < m else mp.mpf(0) for j in range(M)] for m in range(M)]


def qdelta_lu(q, start=0):
    """Transposed U factor of ``q[start:, start:]^T = L U`` (Doolittle, no pivoting)."""
    M = len(q)
    n = M - start
    a = [[mp.mpf(q[start + j][start + i]) for j in range(n)] for i in range(n)]
    for k in range(n):
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            for j in range(k, n):
                a[i][j] -= f * a[k][j]
    out = [[mp.mpf(0)] * M for _ in range(M)]
    for i in range(n):
        for j in range(i, n):
            out[start + j][start + i] = a[i][j]
    return out

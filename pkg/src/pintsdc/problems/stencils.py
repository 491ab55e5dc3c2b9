"""Second-order finite-difference Laplacians as sparse matrices."""

import numpy as np
import scipy.sparse as sp

from ..kernel import Boundary


def laplacian_1d(n: int, dx: float, boundary: Boundary) -> sp.csr_matrix:
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    A = sp.diags([off, main, off], [-1, 0, 1], shape=(n, n), format="lil")
    if boundary is Boundary.PERIODIC:
        A[0, n - 1] = 1.0
        A[n - 1, 0] = 1.0
    elif boundary is Boundary.NEUMANN0:
        # mirrored ghost point at both ends
        A[0, 1] = 2.0
        A[n - 1, n - 2] = 2.0
    return (A / dx**2).tocsr()


def laplacian_2d(n: int, dx: float, boundary: Boundary) -> sp.csr_matrix:
    """Five-point stencil on an ``n x n`` grid, row-major ordering."""
    L1 = laplacian_1d(n, dx, boundary)
    eye = sp.identity(n, format="csr")
    return (sp.kron(eye, L1) + sp.kron(L1, eye)).tocsr()

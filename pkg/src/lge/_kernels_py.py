"""Pure-numpy versions of the elementwise hot kernels.

Used when the compiled ``_ckernels`` extension is unavailable. The compiled
versions must agree with these to rounding.
"""
import numpy as np


def soft_threshold_matrix(M, tau):
    M = np.asarray(M, dtype=float)
    return np.sign(M) * np.maximum(np.abs(M) - tau, 0.0)


def sparse_and_dual_update(X, L, z1, r1, tau2):
    """Fused step-1 M-update and z1 dual ascent.

    Returns ``(M, z1_new)`` with ``M = shrink(X - L + z1/r1, tau2)`` and
    ``z1_new = z1 + r1 (X - L - M)``.
    """
    G = X - L
    M = soft_threshold_matrix(G + z1 / r1, tau2)
    return M, z1 + r1 * (G - M)


def project_laplacian(M):
    M = np.asarray(M, dtype=float)
    S = 0.5 * (M + M.T)
    np.fill_diagonal(S, 0.0)
    S = np.minimum(S, 0.0)
    np.fill_diagonal(S, -S.sum(axis=1))
    return S

"""Reference implementations written independently of the package code.

They favour obviousness over speed: explicit loops, full decompositions and
brute-force search.
"""
import itertools

import numpy as np
from scipy.optimize import lsq_linear


def svt_full(J, tau):
    """SVT through the full SVD, shrinking each singular value in a loop."""
    U, s, Vt = np.linalg.svd(J, full_matrices=True)
    S = np.zeros(J.shape)
    for i, v in enumerate(s):
        S[i, i] = max(v - tau, 0.0)
    return U @ S @ Vt


def shrink_loop(M, tau):
    out = np.empty_like(M)
    for idx, v in np.ndenumerate(M):
        out[idx] = np.sign(v) * max(abs(v) - tau, 0.0)
    return out


def svt_by_eigh(J, tau):
    """SVT from the eigendecomposition of J^T J, avoiding any SVD call."""
    w, V = np.linalg.eigh(J.T @ J)
    out = np.zeros_like(J)
    for lam, v in zip(w, V.T):
        sigma = np.sqrt(max(lam, 0.0))
        if sigma > tau:
            u = J @ v / sigma
            out += (sigma - tau) * np.outer(u, v)
    return out


def clip_rebuild(M):
    """Symmetrize, clip off-diagonals to be nonpositive, reset the diagonal."""
    p = M.shape[0]
    S = 0.5 * (M + M.T)
    out = np.zeros_like(S)
    for i in range(p):
        for j in range(p):
            if i != j:
                out[i, j] = min(S[i, j], 0.0)
    for i in range(p):
        out[i, i] = -sum(out[i, j] for j in range(p) if j != i)
    return out


def qp_laplacian_projection(M):
    """Exact Euclidean projection onto valid Laplacians via bounded least squares
    on the edge weights (w >= 0)."""
    p = M.shape[0]
    pairs = list(itertools.combinations(range(p), 2))
    A = np.zeros((p * p, len(pairs)))
    for e, (i, j) in enumerate(pairs):
        E = np.zeros((p, p))
        E[i, j] = E[j, i] = -1.0
        E[i, i] = E[j, j] = 1.0
        A[:, e] = E.ravel()
    res = lsq_linear(A, M.ravel(), bounds=(0, np.inf), tol=1e-14, lsmr_tol="auto", max_iter=10000)
    return (A @ res.x).reshape(p, p)


def step2_projected_gradient(L, gamma, beta, steps=200000, lr=None):
    """Fixed point of projected gradient on gamma tr(Phi LL^T) + beta ||Phi||^2
    with the clip-and-rebuild projection."""
    G = gamma * (L @ L.T)
    p = G.shape[0]
    lr = lr or 0.05 / max(beta, 1e-12)
    lr = min(lr, 0.2 / beta)
    phi = np.zeros((p, p))
    for _ in range(steps):
        new = clip_rebuild(phi - lr * (G + 2 * beta * phi))
        if np.max(np.abs(new - phi)) < 1e-15:
            phi = new
            break
        phi = new
    return phi


def knn_brute(X, k):
    """Neighbour sets by sorting every row's distances with Python tuples."""
    p = X.shape[0]
    out = []
    for i in range(p):
        d = sorted((float(np.sum((X[i] - X[j]) ** 2)), j) for j in range(p) if j != i)
        out.append({j for _, j in d[:k]})
    return out


def rpca_objective(L, M, lam):
    return np.linalg.svd(L, compute_uv=False).sum() + lam * np.abs(M).sum()

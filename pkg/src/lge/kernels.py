"""Shrinkage primitives and matrix functionals shared by all solvers.

The elementwise hot loops come from the compiled ``_ckernels`` extension when
it is importable and fall back to numpy otherwise. Set ``LGE_PURE_PYTHON=1``
to force the fallback.
"""
import os

import numpy as np

from lge import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if not os.environ.get("LGE_PURE_PYTHON"):
    try:
        from lge import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _kernels_py


class InvalidInputError(ValueError):
    """Raised when an input violates an operation's precondition."""


class DegenerateInputError(ValueError):
    """Raised for inputs on which a quantity is undefined (e.g. zero norm)."""


def _check_tau(tau):
    tau = float(tau)
    if not tau >= 0:
        raise InvalidInputError(f"threshold must be nonnegative, got {tau}")
    return tau


def soft_threshold(x, tau):
    """sgn(x) * max(|x| - tau, 0) for a scalar."""
    tau = _check_tau(tau)
    if x > tau:
        return x - tau
    if x < -tau:
        return x + tau
    return 0.0


def soft_threshold_matrix(M, tau):
    """Elementwise soft-thresholding of a 2-D array."""
    return _impl.soft_threshold_matrix(np.asarray(M, dtype=float), _check_tau(tau))


def sparse_and_dual_update(X, L, z1, r1, tau2):
    return _impl.sparse_and_dual_update(X, L, z1, float(r1), _check_tau(tau2))


def project_laplacian(M):
    return _impl.project_laplacian(np.asarray(M, dtype=float))


def _svd(J):
    J = np.asarray(J, dtype=float)
    if not np.all(np.isfinite(J)):
        raise InvalidInputError("matrix contains non-finite entries")
    try:
        return np.linalg.svd(J, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise InvalidInputError(f"SVD failed: {exc}") from exc


def svt(J, tau, return_singular_values=False):
    """Singular-value thresholding U diag(max(s - tau, 0)) V^T.

    With ``return_singular_values`` the singular values of ``J`` (before
    shrinkage) are returned as a second value.
    """
    tau = _check_tau(tau)
    U, s, Vt = _svd(J)
    shrunk = np.maximum(s - tau, 0.0)
    keep = shrunk > 0
    out = (U[:, keep] * shrunk[keep]) @ Vt[keep]
    if return_singular_values:
        return out, s
    return out


def norms(M):
    """Frobenius, nuclear and entrywise-l1 norms of ``M``."""
    M = np.asarray(M, dtype=float)
    s = np.linalg.svd(M, compute_uv=False) if M.size else np.zeros(0)
    return {
        "frobenius": float(np.sqrt(np.sum(M * M))),
        "nuclear": float(np.sum(s)),
        "entrywise_l1": float(np.sum(np.abs(M))),
    }


def rank_by_tolerance(M, rel_tol=1e-12):
    """Number of singular values above ``rel_tol * sigma_max``."""
    if not 0 < rel_tol < 1:
        raise InvalidInputError("rel_tol must lie in (0, 1)")
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))

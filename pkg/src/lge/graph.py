"""Graph representations, Laplacian validity and projection, graph builders
(random, k-NN, coherence) and the graph distortion models.

Adjacency matrices are dense symmetric ``(p, p)`` arrays with nonnegative
entries and a zero diagonal; Laplacians are ``D - W``.
"""
import warnings

import numpy as np
from scipy import optimize, signal
from scipy.sparse.csgraph import connected_components

from lge.kernels import DegenerateInputError, InvalidInputError, project_laplacian

WEIGHTS_ONLY = "weights_only"
TOPOLOGY = "topology"
DISTORTION_MODES = (WEIGHTS_ONLY, TOPOLOGY)


def _square(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {M.shape}")
    return M


def check_adjacency(W, tol=1e-10):
    """Validate an adjacency matrix and return it as a float array."""
    W = _square(W, "adjacency")
    if not np.all(np.isfinite(W)):
        raise InvalidInputError("adjacency contains non-finite entries")
    if np.max(np.abs(W - W.T), initial=0.0) > tol:
        raise InvalidInputError("adjacency is not symmetric")
    if np.min(W, initial=0.0) < -tol:
        raise InvalidInputError("adjacency has negative weights")
    if np.max(np.abs(np.diag(W)), initial=0.0) > tol:
        raise InvalidInputError("adjacency has a nonzero diagonal")
    return W


def laplacian_from_adjacency(W):
    """Combinatorial Laplacian ``D - W``."""
    W = check_adjacency(W)
    W = 0.5 * (W + W.T)
    np.fill_diagonal(W, 0.0)
    return np.diag(W.sum(axis=1)) - W


def adjacency_from_laplacian(phi):
    """Edge weights ``-phi_ij`` off the diagonal (negative values clipped)."""
    phi = _square(phi, "laplacian")
    W = np.maximum(-0.5 * (phi + phi.T), 0.0)
    np.fill_diagonal(W, 0.0)
    return W


def is_valid_laplacian(M, tol=1e-8):
    """True iff ``M`` is symmetric with nonpositive off-diagonals and zero
    row sums, each within ``tol``."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or not np.all(np.isfinite(M)):
        return False
    off = M - np.diag(np.diag(M))
    return bool(
        np.max(np.abs(M - M.T), initial=0.0) <= tol
        and np.max(off, initial=0.0) <= tol
        and np.max(np.abs(M.sum(axis=1)), initial=0.0) <= tol
    )


def project_to_laplacian_set(M):
    """Map a square matrix into the valid-Laplacian set.

    Symmetrizes, clips the off-diagonal part at zero from above and rebuilds
    the diagonal from the off-diagonal row sums. Idempotent on valid
    Laplacians. This is the projection the step-2 solver uses; it is not the
    exact Euclidean projection (see :func:`euclidean_laplacian_projection`).
    """
    M = _square(M)
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix contains non-finite entries")
    return project_laplacian(M)


def _edge_basis(p):
    iu, ju = np.triu_indices(p, k=1)
    E = np.zeros((p * p, iu.size))
    for col, (i, j) in enumerate(zip(iu, ju)):
        B = np.zeros((p, p))
        B[i, i] = B[j, j] = 1.0
        B[i, j] = B[j, i] = -1.0
        E[:, col] = B.ravel()
    return E, iu, ju


def euclidean_laplacian_projection(M):
    """Exact Frobenius-nearest valid Laplacian, by nonnegative least squares
    over the edge weights. Cost grows as ``p**4``; meant for small ``p``."""
    M = _square(M)
    p = M.shape[0]
    if p < 2:
        return np.zeros_like(M)
    E, iu, ju = _edge_basis(p)
    w, _ = optimize.nnls(E, M.ravel(), maxiter=50 * E.shape[1])
    W = np.zeros((p, p))
    W[iu, ju] = w
    W[ju, iu] = w
    return np.diag(W.sum(axis=1)) - W


def random_weighted_graph(p, q, rng):
    """Erdos-Renyi style graph: each pair joined with probability ``q``,
    weight uniform on (0, 1)."""
    if p < 2:
        raise InvalidInputError("need at least two nodes")
    if not 0 <= q <= 1:
        raise InvalidInputError("q must lie in [0, 1]")
    iu, ju = np.triu_indices(p, k=1)
    connected = rng.random(iu.size) < q
    weights = rng.uniform(0.0, 1.0, iu.size)
    # U(0, 1) can return exactly 0; keep connected edges strictly positive
    weights = np.where(weights > 0, weights, np.finfo(float).tiny)
    W = np.zeros((p, p))
    W[iu, ju] = np.where(connected, weights, 0.0)
    return W + W.T


def n_components(W):
    """Number of connected components of the graph with adjacency ``W``."""
    return int(connected_components(np.asarray(W) > 0, directed=False)[0])


def smooth_basis(phi, r):
    """Eigenvectors of ``phi`` for its ``r`` smallest eigenvalues.

    Returns ``(P, eigenvalues)`` with ``P`` of shape ``(p, r)``. The sign of
    each column is fixed so its largest-magnitude entry is positive.
    """
    phi = _square(phi, "laplacian")
    p = phi.shape[0]
    if not 1 <= r <= p:
        raise InvalidInputError(f"r must lie in [1, {p}], got {r}")
    try:
        evals, evecs = np.linalg.eigh(0.5 * (phi + phi.T))
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise InvalidInputError(f"eigendecomposition failed: {exc}") from exc
    P = evecs[:, :r].copy()
    idx = np.argmax(np.abs(P), axis=0)
    P *= np.sign(P[idx, np.arange(r)])
    return P, evals[:r]


def pairwise_distances(X):
    """Euclidean distances between the rows of ``X``."""
    X = np.asarray(X, dtype=float)
    sq = np.sum(X * X, axis=1)
    D2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)
    np.fill_diagonal(D2, 0.0)
    return np.sqrt(D2)


def knn_graph(X, k):
    """k-nearest-neighbour graph over the rows of ``X``.

    Each row is joined to its ``k`` nearest other rows (ties broken by row
    index); the relation is symmetrized by union. Edge weights use a Gaussian
    kernel ``exp(-d**2 / sigma**2)`` with ``sigma`` the median off-diagonal
    pairwise distance.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidInputError("X must be 2-D")
    p = X.shape[0]
    if not 1 <= k < p:
        raise InvalidInputError(f"k must lie in [1, {p - 1}], got {k}")
    D = pairwise_distances(X)
    order = np.argsort(np.where(np.eye(p, dtype=bool), np.inf, D), axis=1, kind="stable")
    nbrs = order[:, :k]
    mask = np.zeros((p, p), dtype=bool)
    mask[np.repeat(np.arange(p), k), nbrs.ravel()] = True
    mask |= mask.T
    sigma = np.median(D[np.triu_indices(p, k=1)])
    if sigma <= 0:
        sigma = 1.0
    W = np.where(mask, np.exp(-(D / sigma) ** 2), 0.0)
    np.fill_diagonal(W, 0.0)
    return W


def knn_neighbors(X, k):
    """Directed k-NN index sets used by :func:`knn_graph`, shape ``(p, k)``."""
    X = np.asarray(X, dtype=float)
    p = X.shape[0]
    D = pairwise_distances(X)
    return np.argsort(np.where(np.eye(p, dtype=bool), np.inf, D), axis=1, kind="stable")[:, :k]


def laplacian_perturbation(phi0, s, mode, rng, amplitude_high=1.0, sign=-1):
    """Symmetric off-diagonal perturbation of a Laplacian.

    Candidate pairs are the existing edges (``weights_only``) or all pairs
    (``topology``); each is hit with probability ``s`` and receives
    ``sign * U(0, amplitude_high)``. The default ``sign=-1`` raises edge
    weights; ``sign=+1`` adds the amplitude to the matrix entry as is. The
    returned matrix has a zero diagonal, i.e. it is not itself a Laplacian
    difference.
    """
    phi0 = _square(phi0, "laplacian")
    if not 0 <= s <= 1:
        raise InvalidInputError("distortion probability must lie in [0, 1]")
    if mode not in DISTORTION_MODES:
        raise InvalidInputError(f"unknown distortion mode {mode!r}")
    if sign not in (-1, 1):
        raise InvalidInputError("sign must be -1 or +1")
    p = phi0.shape[0]
    iu, ju = np.triu_indices(p, k=1)
    hit = rng.random(iu.size) < s
    amp = rng.uniform(0.0, amplitude_high, iu.size)
    if mode == WEIGHTS_ONLY:
        hit &= phi0[iu, ju] < 0
    dphi = np.zeros((p, p))
    dphi[iu, ju] = np.where(hit, sign * amp, 0.0)
    return dphi + dphi.T


def distort_laplacian(phi0, s, mode=WEIGHTS_ONLY, rng=None, reproject=True, amplitude_high=1.0):
    """Distorted graph ``phi0 + dphi``.

    With ``reproject`` (default) the result is mapped back into the valid set,
    so diagonal degrees absorb the added weights. Without it the raw additive
    perturbation of :func:`laplacian_perturbation` is applied.
    """
    if rng is None:
        rng = np.random.default_rng()
    phi0 = _square(phi0, "laplacian")
    out = phi0 + laplacian_perturbation(phi0, s, mode, rng, amplitude_high)
    if reproject:
        out = project_laplacian(out)
    return out


def _morlet(f, fs, n_cycles):
    sigma_t = n_cycles / (2.0 * np.pi * f)
    t = np.arange(-3.5 * sigma_t, 3.5 * sigma_t + 1.0 / fs, 1.0 / fs)
    w = np.exp(2j * np.pi * f * t) * np.exp(-(t**2) / (2.0 * sigma_t**2))
    return w / np.sum(np.abs(w))


def band_analytic(series, f, fs, half_band=5.0, n_cycles=7.0):
    """Complex amplitude/phase at frequency ``f`` for each row of ``series``.

    Zero-phase FIR band-pass to ``f +/- half_band`` followed by convolution with
    a Morlet wavelet centred at ``f``.
    """
    x = np.atleast_2d(np.asarray(series, dtype=float))
    T = x.shape[1]
    nyq = fs / 2.0
    lo, hi = f - half_band, f + half_band
    numtaps = int(3.3 * fs / half_band) | 1
    numtaps = max(3, min(numtaps, ((T - 1) // 3 - 1) | 1))
    if hi >= nyq and lo <= 0:
        filtered = x - x.mean(axis=1, keepdims=True)
    else:
        if lo <= 0:
            taps = signal.firwin(numtaps, hi, fs=fs)
        elif hi >= nyq:
            taps = signal.firwin(numtaps, lo, fs=fs, pass_zero=False)
        else:
            taps = signal.firwin(numtaps, [lo, hi], fs=fs, pass_zero=False)
        filtered = signal.filtfilt(taps, [1.0], x, axis=1)
    wav = _morlet(f, fs, n_cycles)
    if wav.size >= T:
        wav = wav[(wav.size - T) // 2 + 1: (wav.size + T) // 2]
    return np.array([np.convolve(row, wav, mode="same") for row in filtered])


def coherence_adjacency(series, f, fs, half_band=5.0, n_cycles=7.0):
    """Phase-coherence connectivity between the channels (rows) of ``series``.

    ``w_ab = |sum_t E_a E_b exp(j(psi_a - psi_b))| / sqrt(sum E_a^2 sum E_b^2)``
    with amplitudes and phases from :func:`band_analytic`. Channels with no
    energy in the band get zero edges.
    """
    x = np.atleast_2d(np.asarray(series, dtype=float))
    if not 0 < f < fs / 2.0:
        raise InvalidInputError("frequency must lie in (0, fs/2)")
    if x.shape[1] < 4 * fs / f:
        raise InvalidInputError(f"need at least {int(np.ceil(4 * fs / f))} samples, got {x.shape[1]}")
    Z = band_analytic(x, f, fs, half_band, n_cycles)
    energy = np.sum(np.abs(Z) ** 2, axis=1)
    cross = np.abs(Z @ Z.conj().T)
    dead = energy <= 1e-24 * max(float(np.max(energy, initial=0.0)), 1e-300)
    dead |= np.ptp(x, axis=1) == 0
    if np.any(dead):
        warnings.warn(f"channels {np.flatnonzero(dead).tolist()} have no energy in the band; "
                      "their edges are set to 0", RuntimeWarning, stacklevel=2)
    norm = np.sqrt(np.where(dead, 1.0, energy))
    W = np.clip(cross / np.outer(norm, norm), 0.0, 1.0)
    W[dead, :] = 0.0
    W[:, dead] = 0.0
    W = 0.5 * (W + W.T)
    np.fill_diagonal(W, 0.0)
    return W


def coherence_dead_channels(series):
    """Indices of constant channels, which carry no coherence information."""
    x = np.atleast_2d(np.asarray(series, dtype=float))
    return np.flatnonzero(np.ptp(x, axis=1) == 0)


def graph_error(estimate, truth):
    """Relative Frobenius error of a graph estimate."""
    n = np.linalg.norm(truth)
    if n == 0:
        raise DegenerateInputError("reference graph has zero norm")
    return float(np.linalg.norm(np.asarray(estimate) - truth) / n)

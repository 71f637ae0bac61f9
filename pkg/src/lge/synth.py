"""Ground-truth datasets: graph-smooth low-rank matrices, sparse corruption,
low-rank distortion and error metrics."""
from dataclasses import dataclass, field

import numpy as np

from lge.graph import laplacian_from_adjacency, n_components, random_weighted_graph, smooth_basis
from lge.kernels import DegenerateInputError, InvalidInputError

SIGNED_UNIT = "signed_unit"
UNIFORM = "uniform"
AMPLITUDE_LAWS = (SIGNED_UNIT, UNIFORM)


@dataclass(frozen=True)
class PerturbationSpec:
    """Bernoulli(``density``) support with amplitudes from ``amplitude_law``.

    ``signed_unit`` draws +-1 with equal probability. ``uniform`` draws
    U(0, ``c``) magnitudes, with a random sign when ``signed`` is true.
    """

    density: float
    amplitude_law: str = SIGNED_UNIT
    c: float = 1.0
    signed: bool = True

    def __post_init__(self):
        if not 0 <= self.density <= 1:
            raise InvalidInputError(f"density must lie in [0, 1], got {self.density}")
        if self.amplitude_law not in AMPLITUDE_LAWS:
            raise InvalidInputError(f"unknown amplitude law {self.amplitude_law!r}")
        if self.amplitude_law == UNIFORM and not self.c > 0:
            raise InvalidInputError("uniform amplitude bound c must be positive")


# Same sampling law; the alias keeps call sites self-describing.
LowrankDistortionSpec = PerturbationSpec


@dataclass
class SyntheticDataset:
    X: np.ndarray
    L0: np.ndarray
    M: np.ndarray
    laplacian0: np.ndarray
    adjacency0: np.ndarray
    basis: np.ndarray
    coefficients: np.ndarray
    seed: int | None = None
    params: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.X.shape


def generate_lowrank(p, n, r, q, mu=0.0, rng=None, seed=None):
    """Graph-smooth rank-``r`` matrix ``L0 = P Y^T`` with ``M = 0``.

    ``P`` holds the ``r`` smoothest Laplacian eigenvectors of a random
    weighted graph; ``Y`` has i.i.d. N(mu, 1/p) entries (1/p is the variance).
    Disconnected graphs are kept; the component count is recorded in
    ``params``.
    """
    if not 1 <= r <= p:
        raise InvalidInputError(f"rank r={r} must lie in [1, p={p}]")
    if not 0 <= q <= 1:
        raise InvalidInputError("q must lie in [0, 1]")
    if rng is None:
        rng = np.random.default_rng(seed)
    W = random_weighted_graph(p, q, rng)
    phi0 = laplacian_from_adjacency(W)
    P, _ = smooth_basis(phi0, r)
    Y = rng.normal(mu, np.sqrt(1.0 / p), size=(n, r))
    L0 = P @ Y.T
    params = dict(p=p, n=n, r=r, q=q, mu=mu, components=n_components(W))
    return SyntheticDataset(
        X=L0.copy(), L0=L0, M=np.zeros_like(L0), laplacian0=phi0, adjacency0=W,
        basis=P, coefficients=Y, seed=seed, params=params,
    )


def generate_perturbation(p, n, spec, rng):
    """Sparse corruption with Bernoulli(``spec.density``) support."""
    support = rng.random((p, n)) < spec.density
    if spec.amplitude_law == SIGNED_UNIT:
        amp = np.where(rng.random((p, n)) < 0.5, -1.0, 1.0)
    else:
        amp = rng.uniform(0.0, spec.c, size=(p, n))
        if spec.signed:
            amp *= np.where(rng.random((p, n)) < 0.5, -1.0, 1.0)
    return np.where(support, amp, 0.0)


def corrupt(dataset, spec, rng):
    """Add sparse corruption to a dataset in place; returns it."""
    p, n = dataset.L0.shape
    dataset.M = generate_perturbation(p, n, spec, rng)
    dataset.X = dataset.L0 + dataset.M
    dataset.params.update(d=spec.density, amp_model=spec.amplitude_law, c=spec.c)
    return dataset


def make_dataset(p=30, n=50, r=3, q=0.3, mu=0.0, d=0.0, amp_model=SIGNED_UNIT, c=1.0, seed=0):
    """One seeded dataset: low-rank part then corruption from the same stream."""
    rng = np.random.default_rng(seed)
    ds = generate_lowrank(p, n, r, q, mu, rng=rng, seed=seed)
    return corrupt(ds, PerturbationSpec(d, amp_model, c), rng)


def distort_lowrank(L0, spec, rng):
    """``L0 + dL`` with ``dL`` drawn exactly as :func:`generate_perturbation`."""
    L0 = np.asarray(L0, dtype=float)
    return L0 + generate_perturbation(*L0.shape, spec, rng)


def rel_error(estimate, truth):
    """||estimate - truth||_F / ||truth||_F."""
    truth = np.asarray(truth, dtype=float)
    n = np.linalg.norm(truth)
    if n == 0:
        raise DegenerateInputError("truth has zero Frobenius norm")
    return float(np.linalg.norm(np.asarray(estimate, dtype=float) - truth) / n)

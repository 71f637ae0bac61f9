"""ADMM solvers for joint low-rank and graph estimation.

``step1_lowrank`` estimates ``L, M`` for a fixed Laplacian, ``step2_graph``
refines the Laplacian for a fixed ``L``, and ``lge`` alternates the two.
``rpca`` is step 1 with the graph term switched off.
"""
import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from lge.graph import is_valid_laplacian, project_to_laplacian_set
from lge.kernels import InvalidInputError, norms, rank_by_tolerance, sparse_and_dual_update, svt

log = logging.getLogger(__name__)

DIMINISHING = "diminishing"
CONSTANT = "constant"


class DivergenceError(RuntimeError):
    """An ADMM iterate became non-finite."""

    def __init__(self, message, iteration):
        super().__init__(f"{message} at iteration {iteration}")
        self.iteration = iteration


@dataclass
class SolverConfig:
    gamma: float = 1.0
    delta: float = 0.5
    beta: float = 0.15
    r1: float = 1.0
    r2: float = 1.0
    rho: float = 1.0
    step1_tol: float = 1e-6
    step2_tol: float = 1e-6
    outer_tol: float = 1e-6
    step1_max_iter: int = 500
    step2_max_iter: int = 500
    outer_max_iter: int = 20
    # dual step of step 2: diminishing 1/k (literal form) or the usual constant rho
    step2_dual_step: str = DIMINISHING
    # Phi-update denominator: 2*beta + rho (stationarity) or beta/2 + rho (literal form)
    step2_denominator: str = "derived"

    def __post_init__(self):
        for name in ("gamma", "delta", "beta"):
            if not getattr(self, name) >= 0:
                raise InvalidInputError(f"{name} must be nonnegative")
        for name in ("r1", "r2", "rho", "step1_tol", "step2_tol", "outer_tol"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        for name in ("step1_max_iter", "step2_max_iter", "outer_max_iter"):
            if int(getattr(self, name)) < 1:
                raise InvalidInputError(f"{name} must be at least 1")
        if self.step2_dual_step not in (DIMINISHING, CONSTANT):
            raise InvalidInputError(f"unknown step2_dual_step {self.step2_dual_step!r}")
        if self.step2_denominator not in ("derived", "literal"):
            raise InvalidInputError(f"unknown step2_denominator {self.step2_denominator!r}")

    @property
    def tau1(self):
        return 2.0 / (self.r1 + self.r2)

    @property
    def tau2(self):
        return self.delta / self.r1

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def as_dict(self):
        return dataclasses.asdict(self)


@dataclass
class Step1State:
    L: np.ndarray
    M: np.ndarray
    K: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    iteration: int = 0
    # J that produced L; None for the cold start
    J: np.ndarray | None = None

    @classmethod
    def zeros(cls, shape):
        z = np.zeros(shape)
        return cls(z.copy(), z.copy(), z.copy(), z.copy(), z.copy())

    def copy(self):
        return Step1State(
            self.L.copy(), self.M.copy(), self.K.copy(), self.z1.copy(), self.z2.copy(),
            self.iteration, None if self.J is None else self.J.copy(),
        )


@dataclass
class Step1Result:
    L: np.ndarray
    M: np.ndarray
    state: Step1State
    primal_residual: np.ndarray
    consensus_residual: np.ndarray
    converged: bool
    states: list = field(default_factory=list)

    @property
    def iterations(self):
        return len(self.primal_residual)


@dataclass
class Step2Result:
    phi: np.ndarray
    phi_iterate: np.ndarray
    dual_u: np.ndarray
    residual: np.ndarray
    converged: bool


@dataclass
class LgeSolution:
    lowrank: np.ndarray
    sparse: np.ndarray
    laplacian: np.ndarray
    trace: list
    converged: bool
    config: SolverConfig

    def trace_array(self):
        return np.array(
            [[t["outer_iter"], t["objective"], t["step1_residual"], t["step2_residual"], t["rank_L"]]
             for t in self.trace]
        )


def k_operator(phi, gamma, r2):
    """``r2 (gamma phi + r2 I)^-1``, the linear map of the K-update."""
    p = phi.shape[0]
    A = gamma * np.asarray(phi, dtype=float) + r2 * np.eye(p)
    try:
        return r2 * np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise InvalidInputError(f"gamma*phi + r2*I is singular: {exc}") from exc


def step1_iteration(X, state, Kop, cfg):
    """One pass of the six step-1 updates; returns the new state."""
    r1, r2 = cfg.r1, cfg.r2
    with np.errstate(over="ignore", invalid="ignore"):
        J = (r1 * (X - state.M + state.z1 / r1) + r2 * (state.K + state.z2 / r2)) / (r1 + r2)
    if not np.all(np.isfinite(J)):
        raise DivergenceError("step-1 iterate became non-finite", state.iteration + 1)
    L = svt(J, cfg.tau1)
    M, z1 = sparse_and_dual_update(X, L, state.z1, r1, cfg.tau2)
    K = Kop @ (L - state.z2 / r2)
    z2 = state.z2 + r2 * (K - L)
    return Step1State(L, M, K, z1, z2, state.iteration + 1, J)


def _primal_residual(X, L, M, xnorm):
    r = np.linalg.norm(X - L - M)
    return r / xnorm if xnorm > 0 else r


def step1_lowrank(X, phi, cfg, warm=None, max_iter=None, record_states=False, check_laplacian=True):
    """ADMM for ``min ||L||_* + delta ||M||_1 + gamma tr(L^T phi L)`` s.t. ``X = L + M``.

    Stops once ``||X-L-M||_F/||X||_F`` and ``||K-L||_F/max(1, ||L||_F)`` are both
    below ``cfg.step1_tol`` or after ``max_iter`` (default
    ``cfg.step1_max_iter``) iterations. ``warm`` resumes from a previous
    :class:`Step1State`; the cold start is all zeros. With ``record_states``
    every iterate is kept in ``result.states`` (index 0 is the start state).
    """
    X = np.asarray(X, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (X.shape[0], X.shape[0]):
        raise InvalidInputError(f"graph shape {phi.shape} does not match data shape {X.shape}")
    if check_laplacian and not is_valid_laplacian(phi, 1e-8):
        raise InvalidInputError("graph is not a valid Laplacian")
    max_iter = cfg.step1_max_iter if max_iter is None else int(max_iter)
    state = Step1State.zeros(X.shape) if warm is None else warm.copy()
    Kop = k_operator(phi, cfg.gamma, cfg.r2)
    xnorm = np.linalg.norm(X)
    states = [state] if record_states else []
    primal, consensus = [], []
    converged = False
    for _ in range(max_iter):
        state = step1_iteration(X, state, Kop, cfg)
        if record_states:
            states.append(state)
        primal.append(_primal_residual(X, state.L, state.M, xnorm))
        consensus.append(np.linalg.norm(state.K - state.L) / max(1.0, np.linalg.norm(state.L)))
        if primal[-1] <= cfg.step1_tol and consensus[-1] <= cfg.step1_tol:
            converged = True
            break
    return Step1Result(state.L, state.M, state, np.array(primal), np.array(consensus), converged, states)


def step2_graph(L, cfg, warm=None):
    """ADMM for ``min gamma tr(L^T phi L) + beta ||phi||_F^2`` over valid Laplacians.

    ``warm`` is an optional ``(z, dual_u)`` pair. Returns the feasible
    z-iterate as the graph.
    """
    L = np.asarray(L, dtype=float)
    p = L.shape[0]
    if cfg.beta <= 0 and cfg.rho <= 0:  # pragma: no cover - rho > 0 is enforced
        raise InvalidInputError("need beta > 0 or rho > 0")
    G = cfg.gamma * (L @ L.T)
    if warm is None:
        z, u = np.zeros((p, p)), np.zeros((p, p))
    else:
        z, u = (np.array(a, dtype=float) for a in warm)
    rho = cfg.rho
    denom = 2.0 * cfg.beta + rho if cfg.step2_denominator == "derived" else cfg.beta / 2.0 + rho
    residual = []
    phi = z
    converged = False
    for k in range(1, cfg.step2_max_iter + 1):
        phi = (rho * z + u - G) / denom
        z = project_to_laplacian_set(phi - u / rho) if np.all(np.isfinite(phi)) else None
        if z is None:
            raise DivergenceError("step-2 iterate became non-finite", k)
        step = 1.0 / k if cfg.step2_dual_step == DIMINISHING else rho
        u = u + step * (z - phi)
        residual.append(np.linalg.norm(z - phi) / max(1.0, np.linalg.norm(phi)))
        if residual[-1] <= cfg.step2_tol:
            converged = True
            break
    return Step2Result(z, phi, u, np.array(residual), converged)


def step2_objective(phi, L, gamma, beta):
    L = np.asarray(L, dtype=float)
    return float(gamma * np.sum(phi * (L @ L.T)) + beta * np.sum(phi * phi))


def objective(L, M, phi, cfg):
    """Full joint objective: nuclear + delta l1 + gamma graph smoothness + beta ||phi||^2."""
    return float(
        norms(L)["nuclear"]
        + cfg.delta * np.sum(np.abs(M))
        + cfg.gamma * np.sum(L * (phi @ L))
        + cfg.beta * np.sum(phi * phi)
    )


def lge(X, phi_init, cfg):
    """Alternate step 1 and step 2 until the objective settles.

    Step 1 is warm-started from the previous outer iteration; step 2 starts
    from the current graph and the previous step-2 dual.
    """
    X = np.asarray(X, dtype=float)
    phi = np.asarray(phi_init, dtype=float)
    if not is_valid_laplacian(phi, 1e-8):
        raise InvalidInputError("initial graph is not a valid Laplacian")
    state = None
    u = np.zeros_like(phi)
    trace = []
    prev = None
    outer_converged = False
    s1 = None
    for outer in range(1, cfg.outer_max_iter + 1):
        s1 = step1_lowrank(X, phi, cfg, warm=state)
        state = s1.state
        s2 = step2_graph(s1.L, cfg, warm=(phi, u))
        phi, u = s2.phi, s2.dual_u
        obj = objective(s1.L, s1.M, phi, cfg)
        trace.append(dict(
            outer_iter=outer,
            objective=obj,
            step1_residual=float(s1.primal_residual[-1]),
            step2_residual=float(np.linalg.norm(s2.phi - s2.phi_iterate)),
            rank_L=rank_by_tolerance(s1.L) if np.any(s1.L) else 0,
        ))
        if prev is not None:
            if obj > prev + 1e-8 * max(1.0, abs(prev)):
                log.warning("objective increased at outer iteration %d: %.6g -> %.6g", outer, prev, obj)
            if abs(prev - obj) <= cfg.outer_tol * max(abs(prev), 1e-300):
                outer_converged = True
                break
        prev = obj
    converged = s1.converged and (outer_converged or cfg.outer_max_iter == 1)
    return LgeSolution(s1.L, s1.M, phi, trace, converged, cfg)


def rpca(X, delta=0.5, cfg=None):
    """Robust PCA via the step-1 ADMM with the graph term removed.

    Returns ``(L, M, converged)``.
    """
    if not delta > 0:
        raise InvalidInputError("delta must be positive")
    cfg = (cfg or SolverConfig()).replace(gamma=0.0, delta=delta)
    X = np.asarray(X, dtype=float)
    res = step1_lowrank(X, np.zeros((X.shape[0], X.shape[0])), cfg)
    return res.L, res.M, res.converged

"""Inexact-graph sensitivity analysis of the step-1 ADMM.

Starting from a step-1 iterate ``L^(k)`` the error after two more iterations,
``||L^(k+2) - L0||_F``, is computed two ways: empirically by running the two
iterations with a distorted graph, and analytically through

    J^(k+2) ~= A + C B - gamma C dPhi C B
    ||L^(k+2)||_F^2 ~= F^2 - 2 tau1 g sqrt(p) F + m,   F = ||J^(k+2)||_F

where ``C`` is a second-order Neumann approximation of
``(gamma Phi0 + r2 I)^-1`` and ``g``, ``h``, ``m`` are fitted to an undistorted
run.
"""
from dataclasses import dataclass, field

import numpy as np

from lge.graph import TOPOLOGY, laplacian_perturbation
from lge.kernels import InvalidInputError, rank_by_tolerance, svt
from lge.solver import Step1State, k_operator, step1_iteration, step1_lowrank
from lge.synth import PerturbationSpec, corrupt, generate_lowrank


@dataclass
class IterateSnapshot:
    state: Step1State
    X: np.ndarray
    phi0: np.ndarray
    cfg: object
    L0: np.ndarray | None = None
    k: int = 0
    seed: int | None = None


@dataclass
class ApproxParams:
    g: float
    h: float
    m: float
    tau1: float
    rank_k: int
    n_sv: int

    def __post_init__(self):
        if not 0 < self.g <= 1 + 1e-12:
            raise InvalidInputError(f"g must lie in (0, 1], got {self.g}")
        if not self.h > 0:
            raise InvalidInputError(f"h must be positive, got {self.h}")
        if not self.tau1 > 0:
            raise InvalidInputError("tau1 must be positive")


@dataclass
class RunRecord:
    """Undistorted step-1 iterates; ``states[i]`` is the state after i iterations."""

    states: list
    X: np.ndarray
    phi0: np.ndarray
    cfg: object
    L0: np.ndarray | None = None
    seed: int | None = None

    def snapshot(self, k):
        return IterateSnapshot(self.states[k], self.X, self.phi0, self.cfg, self.L0, k, self.seed)


def record_run(X, phi0, cfg, n_iter, L0=None, seed=None):
    """Run ``n_iter`` step-1 iterations from the cold start, keeping every state."""
    cfg = cfg.replace(step1_tol=1e-300)
    res = step1_lowrank(X, phi0, cfg, max_iter=n_iter, record_states=True)
    return RunRecord(res.states, np.asarray(X, dtype=float), np.asarray(phi0, dtype=float), cfg, L0, seed)


def two_step_rollout(snap, phi_tilde):
    """Two step-1 iterations from ``snap.state`` with ``phi_tilde`` in the K-updates.

    Returns ``(L_k2, lerr)`` where ``lerr = ||L^(k+2) - L0||_F`` (None when the
    snapshot carries no ground truth).
    """
    Kop = k_operator(np.asarray(phi_tilde, dtype=float), snap.cfg.gamma, snap.cfg.r2)
    state = snap.state
    for _ in range(2):
        state = step1_iteration(snap.X, state, Kop, snap.cfg)
    lerr = None if snap.L0 is None else float(np.linalg.norm(state.L - snap.L0))
    return state, lerr


def neumann_inverse(phi0, gamma, r2):
    """``(1/r2) [I - (gamma/r2) phi0 + ((gamma/r2) phi0)^2]``."""
    p = phi0.shape[0]
    E = (gamma / r2) * np.asarray(phi0, dtype=float)
    return (np.eye(p) - E + E @ E) / r2


def abc_matrices(snap, negate_dual=False):
    """The ``A``, ``B``, ``C`` matrices of the two-step expansion at ``snap``.

    One undistorted iteration is applied to obtain ``L^(k+1)``, ``M^(k+1)``.
    The dual term of ``A`` enters with a plus sign, which is what expanding
    the update equations gives; ``negate_dual=True`` flips it.
    """
    cfg = snap.cfg
    r1, r2, gamma = cfg.r1, cfg.r2, cfg.gamma
    s = snap.state
    nxt = step1_iteration(snap.X, s, k_operator(snap.phi0, gamma, r2), cfg)
    sign = -1.0 if negate_dual else 1.0
    A = (2 * r1 / (r1 + r2)) * (snap.X - nxt.M) - nxt.L + sign * (s.z1 + s.z2) / (r1 + r2)
    B = (2 * r2**2 / (r1 + r2)) * (nxt.L - s.z2 / r2)
    C = neumann_inverse(snap.phi0, gamma, r2)
    return A, B, C


def j_approx(A, B, C, gamma, delta_phi=None):
    """First-order perturbed ``J^(k+2)``: ``A + C B - gamma C dPhi C B``."""
    CB = C @ B
    J = A + CB
    if delta_phi is not None:
        J = J - gamma * (C @ (np.asarray(delta_phi) @ CB))
    return J


def _sv(J):
    return np.linalg.svd(np.asarray(J, dtype=float), compute_uv=False)


def estimate_gh(Js, tau1, rank_k, h_fallback=2.0):
    """Fit the surrogate constants to a sequence of ``J`` iterates.

    ``g`` is the mean of ``||J||_* / (sqrt(rank J) ||J||_F)``; ``h`` is
    ``tau1`` over the mean of the singular values at or below ``tau1``
    (``h_fallback`` when there are none).
    """
    Js = [J for J in Js if J is not None]
    if not Js:
        raise InvalidInputError("need at least one J iterate")
    gs, small = [], []
    for J in Js:
        s = _sv(J)
        fro = np.sqrt(np.sum(s * s))
        rk = rank_by_tolerance(J) if fro > 0 else 0
        if rk:
            gs.append(np.sum(s) / (np.sqrt(rk) * fro))
        small.extend(s[s <= tau1])
    g = float(np.mean(gs)) if gs else 1.0
    small = np.asarray(small)
    mean_small = float(np.mean(small)) if small.size else 0.0
    h = tau1 / mean_small if mean_small > 0 else h_fallback
    n_sv = min(Js[0].shape)
    m = tau1**2 * rank_k + (tau1**2 / h) * (n_sv - rank_k)
    return ApproxParams(g=g, h=h, m=m, tau1=tau1, rank_k=int(rank_k), n_sv=n_sv)


def estimate_gh_from_run(run, k, window=(1, 2)):
    """Per-k fit from the undistorted iterates ``J^(k+w)`` for ``w`` in ``window``."""
    Js = [run.states[k + w].J for w in window if k + w < len(run.states)]
    rank_k = rank_by_tolerance(run.states[k].L) if np.any(run.states[k].L) else 0
    return estimate_gh(Js, run.cfg.tau1, rank_k)


def approx_lowrank_frobenius(F, params, p=None, nuclear=None, return_flag=False):
    """Surrogate for ``||D_tau1(J)||_F`` given ``F = ||J||_F``.

    ``sqrt(F^2 - 2 tau1 N + m)`` with ``N = g sqrt(p) F`` unless an explicit
    nuclear-norm value ``nuclear`` is supplied. A negative radicand is clamped
    to zero; ``return_flag`` also returns whether that happened.
    """
    p = params.n_sv if p is None else p
    N = params.g * np.sqrt(p) * F if nuclear is None else nuclear
    rad = F * F - 2.0 * params.tau1 * N + params.m
    clamped = rad < 0
    val = float(np.sqrt(max(rad, 0.0)))
    return (val, bool(clamped)) if return_flag else val


def svt_frobenius_terms(J, tau):
    """Exact decomposition of ``||D_tau(J)||_F^2``.

    ``||J||^2 - 2 tau ||J||_* + tau^2 #{s > tau} + sum_{s <= tau} (2 tau - s) s``.
    """
    s = _sv(J)
    low = s <= tau
    return float(
        np.sum(s * s) - 2 * tau * np.sum(s) + tau**2 * np.count_nonzero(~low)
        + np.sum((2 * tau - s[low]) * s[low])
    )


def lowrank_frobenius_surrogate(J, params):
    """Surrogate ``||L^(k+2)||_F^2`` keeping the exact nuclear norm of ``J``."""
    s = _sv(J)
    return float(np.sum(s * s) - 2 * params.tau1 * np.sum(s) + params.m)


def lerr_from_frobenius(F, params, norm_L0, return_flag=False):
    val, flag = approx_lowrank_frobenius(F, params, return_flag=True)
    out = abs(val - norm_L0)
    return (out, flag) if return_flag else out


def lerr_analytic(snap, delta_phi, params, norm_L0, abc=None, return_flag=False):
    """Analytic ``| ||L^(k+2)||_F - ||L0||_F |`` under graph distortion ``delta_phi``."""
    A, B, C = abc if abc is not None else abc_matrices(snap)
    F = np.linalg.norm(j_approx(A, B, C, snap.cfg.gamma, delta_phi))
    return lerr_from_frobenius(F, params, norm_L0, return_flag)


@dataclass
class SweepResult:
    header: tuple
    rows: list
    clamped: int = 0
    singular: int = 0
    meta: dict = field(default_factory=dict)

    def for_k(self, k):
        ki = self.header.index("k")
        return [r for r in self.rows if r[ki] == k]


SWEEP_HEADER = ("gamma", "s", "rel_graph_distortion", "lerr_empirical_rel", "lerr_analytic_rel", "k", "seeds")


def default_s_grid():
    return [round(0.01 * i, 2) for i in range(1, 101)]


def sensitivity_dataset(master_seed, seed, p=30, n=50, r=6, q=0.3, mu=0.0, d=0.1):
    """The corrupted dataset used for ``seed`` in :func:`sensitivity_sweep`."""
    from lge.io import cell_rng

    rng = cell_rng(master_seed, seed)
    ds = generate_lowrank(p, n, r, q, mu, rng=rng, seed=seed)
    return corrupt(ds, PerturbationSpec(d), rng)


def sensitivity_sweep(
    p=30, n=50, r=6, q=0.3, mu=0.0, d=0.1, gammas=(0.0, 0.5, 1.0, 2.0), s_grid=None,
    k_points=(5, 11, 18), seeds=5, master_seed=0, cfg=None, reproject=False,
    sign=1,
):
    """Empirical and analytic two-step error against graph distortion.

    For each seed a dataset is drawn, then for each ``gamma`` an undistorted
    step-1 run is recorded, and for each ``(s, k)`` a topology distortion is
    applied to the snapshot at iteration ``k``. The distortion draws are shared
    across ``gamma`` values and along the ``s`` grid, so the hit set grows with
    ``s``. ``dPhi`` is additive: U(0, 1) amplitudes are added to off-diagonal
    entries (``sign=+1``) and the result is mapped back to a Laplacian only when
    ``reproject`` is set. Rows are seed means in grid order: ``(gamma, s,
    rel_graph_distortion, lerr_empirical_rel, lerr_analytic_rel, k, seeds)``.
    """
    from lge.io import cell_rng

    if cfg is None:
        cfg = analysis_config()
    s_grid = default_s_grid() if s_grid is None else list(s_grid)
    n_iter = max(k_points) + 2
    acc = {}
    clamped = singular = 0
    for seed in range(seeds):
        ds = sensitivity_dataset(master_seed, seed, p, n, r, q, mu, d)
        nL0 = np.linalg.norm(ds.L0)
        n_phi0 = np.linalg.norm(ds.laplacian0)
        dphis = []
        for si, s in enumerate(s_grid):
            drng = cell_rng(master_seed, seed, 1)  # same draws for every s: nested supports
            dphi = laplacian_perturbation(ds.laplacian0, s, TOPOLOGY, drng, sign=sign)
            if reproject:
                from lge.kernels import project_laplacian

                dphi = project_laplacian(ds.laplacian0 + dphi) - ds.laplacian0
            dphis.append(dphi)
        for gamma in gammas:
            gcfg = cfg.replace(gamma=float(gamma))
            run = record_run(ds.X, ds.laplacian0, gcfg, n_iter, ds.L0, seed)
            for k in k_points:
                snap = run.snapshot(k)
                params = estimate_gh_from_run(run, k)
                abc = abc_matrices(snap)
                for si, s in enumerate(s_grid):
                    dphi = dphis[si]
                    try:
                        _, emp = two_step_rollout(snap, ds.laplacian0 + dphi)
                    except InvalidInputError:
                        emp = np.nan
                        singular += 1
                    ana, flag = lerr_analytic(snap, dphi, params, nL0, abc=abc, return_flag=True)
                    clamped += flag
                    key = (float(gamma), si, k)
                    acc.setdefault(key, []).append(
                        (np.linalg.norm(dphi) / n_phi0, emp / nL0, ana / nL0)
                    )
    rows = []
    for gamma in gammas:
        for k in k_points:
            for si, s in enumerate(s_grid):
                vals = np.array(acc[(float(gamma), si, k)])
                m = np.nanmean(vals, axis=0) if np.any(np.isfinite(vals[:, 1])) else np.mean(vals, axis=0)
                rows.append((float(gamma), float(s), float(m[0]), float(m[1]), float(m[2]), int(k), int(seeds)))
    return SweepResult(SWEEP_HEADER, rows, clamped, singular,
                       meta=dict(p=p, n=n, r=r, q=q, mu=mu, d=d, master_seed=master_seed))


def analysis_config():
    """Step-1 settings for the sensitivity study; see README for the choice."""
    from lge.solver import SolverConfig

    return SolverConfig(delta=0.5, r1=20.0, r2=20.0)

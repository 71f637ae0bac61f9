import numpy as np
import pytest
from scipy.stats import spearmanr

from lge import analysis as an
from lge.graph import TOPOLOGY, laplacian_perturbation
from lge.kernels import InvalidInputError, svt
from lge.synth import PerturbationSpec, corrupt, generate_lowrank


@pytest.fixture(scope="module")
def run():
    rng = np.random.default_rng(11)
    ds = generate_lowrank(30, 50, 6, 0.3, rng=rng, seed=11)
    corrupt(ds, PerturbationSpec(0.1), rng)
    return an.record_run(ds.X, ds.laplacian0, an.analysis_config(), 22, ds.L0, 11)


def test_record_run_shapes(run):
    assert len(run.states) == 23
    assert run.states[0].J is None
    assert all(s.iteration == i for i, s in enumerate(run.states))


def test_rollout_with_exact_graph_reproduces_run(run):
    for k in (0, 5, 18):
        state, lerr = an.two_step_rollout(run.snapshot(k), run.phi0)
        np.testing.assert_array_equal(state.L, run.states[k + 2].L)
        assert lerr == pytest.approx(np.linalg.norm(run.states[k + 2].L - run.L0))


def test_neumann_remainder_bound():
    from lge.graph import laplacian_from_adjacency, random_weighted_graph

    rng = np.random.default_rng(0)
    phi = laplacian_from_adjacency(random_weighted_graph(12, 0.4, rng))
    for gamma, r2 in ((0.5, 20.0), (1.0, 20.0), (1.0, 40.0)):
        E = gamma * phi / r2
        e = np.linalg.norm(E, 2)
        assert e < 1
        exact = np.linalg.inv(gamma * phi + r2 * np.eye(12))
        C = an.neumann_inverse(phi, gamma, r2)
        assert np.linalg.norm(C - exact, 2) <= e**3 / (1 - e) / r2 + 1e-15


def test_abc_reproduces_next_j_with_exact_inverse(run):
    for k in (3, 5, 11):
        snap = run.snapshot(k)
        A, B, _ = an.abc_matrices(snap)
        cfg = snap.cfg
        inv = np.linalg.inv(cfg.gamma * run.phi0 + cfg.r2 * np.eye(30))
        J = A + inv @ B
        np.testing.assert_allclose(J, run.states[k + 2].J, atol=1e-10)
        # the opposite dual sign does not
        A2, _, _ = an.abc_matrices(snap, negate_dual=True)
        assert np.linalg.norm(A2 + inv @ B - run.states[k + 2].J) > 1e-3


def test_first_order_expansion_is_second_order_accurate(run):
    snap = run.snapshot(11)
    A, B, _ = an.abc_matrices(snap)
    cfg = snap.cfg
    base = cfg.gamma * run.phi0 + cfg.r2 * np.eye(30)
    inv = np.linalg.inv(base)
    dphi = laplacian_perturbation(run.phi0, 0.3, TOPOLOGY, np.random.default_rng(1), sign=1)
    errs = []
    for t in (1.0, 0.5, 0.25):
        exact = A + np.linalg.inv(base + cfg.gamma * t * dphi) @ B
        approx = an.j_approx(A, B, inv, cfg.gamma, t * dphi)
        errs.append(np.linalg.norm(exact - approx))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.2)


def test_svt_frobenius_terms_exact():
    rng = np.random.default_rng(3)
    for _ in range(20):
        J = rng.normal(size=(6, 9))
        tau = rng.uniform(0.1, 3)
        assert an.svt_frobenius_terms(J, tau) == pytest.approx(np.sum(svt(J, tau) ** 2), rel=1e-10, abs=1e-12)


def test_estimate_gh_and_params():
    J = np.outer(np.arange(1.0, 5.0), np.ones(3))  # rank one: g = 1
    p = an.estimate_gh([J], tau1=0.1, rank_k=1)
    assert p.g == pytest.approx(1.0)
    # the numerically zero singular values contribute nothing: h is huge, m ~ tau^2 rank
    assert p.m == pytest.approx(0.01, rel=1e-6)
    p = an.estimate_gh([np.diag([5.0, 4.0, 3.0])], tau1=0.1, rank_k=2)
    assert p.h == 2.0  # no singular values at or below tau1: fallback
    assert p.m == pytest.approx(0.01 * 2 + 0.01 / 2.0 * 1)
    with pytest.raises(InvalidInputError):
        an.estimate_gh([None], 0.1, 1)
    with pytest.raises(InvalidInputError):
        an.ApproxParams(g=1.5, h=1, m=0, tau1=1, rank_k=1, n_sv=2)


def test_radicand_clamp_flag():
    p = an.ApproxParams(g=1.0, h=2.0, m=0.0, tau1=10.0, rank_k=1, n_sv=4)
    val, flag = an.approx_lowrank_frobenius(1.0, p, return_flag=True)
    assert flag and val == 0.0
    val, flag = an.approx_lowrank_frobenius(100.0, p, return_flag=True)
    assert not flag and val > 0


def test_surrogate_exact_when_constants_fit(run):
    # with the exact nuclear norm and m matching the per-sigma terms the surrogate is exact
    J = run.states[13].J
    tau = run.cfg.tau1
    s = np.linalg.svd(J, compute_uv=False)
    low = s <= tau
    m = tau**2 * np.count_nonzero(~low) + np.sum((2 * tau - s[low]) * s[low])
    p = an.ApproxParams(g=1.0, h=1.0, m=m, tau1=tau, rank_k=1, n_sv=30)
    assert an.lowrank_frobenius_surrogate(J, p) == pytest.approx(np.sum(svt(J, tau) ** 2), rel=1e-10)


@pytest.fixture(scope="module")
def small_sweep():
    return an.sensitivity_sweep(s_grid=[0.05, 0.3, 1.0], seeds=2, k_points=(5, 11))


def test_sweep_layout(small_sweep):
    res = small_sweep
    assert res.header == an.SWEEP_HEADER
    assert len(res.rows) == 4 * 2 * 3
    assert res.singular == 0
    for k in (5, 11):
        rows = res.for_k(k)
        g0 = [r for r in rows if r[0] == 0.0]
        # the graph term is off at gamma = 0, so distortion has no effect
        assert len({r[3] for r in g0}) == 1
        dist = [r[2] for r in g0]
        assert dist == sorted(dist)


def test_sweep_deterministic(small_sweep):
    again = an.sensitivity_sweep(s_grid=[0.05, 0.3, 1.0], seeds=2, k_points=(5, 11))
    assert again.rows == small_sweep.rows


def test_default_grid():
    g = an.default_s_grid()
    assert len(g) == 100 and g[0] == 0.01 and g[-1] == 1.0


@pytest.fixture(scope="session")
def default_sweep():
    return an.sensitivity_sweep()


def test_sweep_empirical_trend_is_monotone(default_sweep):
    # mean empirical error non-decreasing in s for each gamma, <= 10% violations
    for k in (5, 11, 18):
        for gamma in (0.5, 1.0, 2.0):
            vals = [r[3] for r in default_sweep.for_k(k) if r[0] == gamma]
            assert np.mean(np.diff(vals) < 0) <= 0.10, (k, gamma)


def test_analytic_tracks_empirical_rank_order(default_sweep):
    rows = [r for r in default_sweep.for_k(18) if r[0] == 1.0]
    rho = spearmanr([r[3] for r in rows], [r[4] for r in rows]).statistic
    assert rho >= 0.8

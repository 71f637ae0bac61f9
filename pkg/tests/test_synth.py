import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import subspace_angles

from lge.graph import is_valid_laplacian
from lge.kernels import DegenerateInputError, InvalidInputError, rank_by_tolerance
from lge.synth import (
    SIGNED_UNIT, UNIFORM, PerturbationSpec, corrupt, distort_lowrank, generate_lowrank,
    generate_perturbation, make_dataset, rel_error,
)


def test_default_shapes_and_invariants():
    ds = make_dataset(d=0.1, seed=0)
    assert ds.X.shape == (30, 50)
    assert ds.basis.shape == (30, 3) and ds.coefficients.shape == (50, 3)
    np.testing.assert_array_equal(ds.X, ds.L0 + ds.M)
    np.testing.assert_allclose(ds.L0, ds.basis @ ds.coefficients.T, atol=1e-10)
    assert rank_by_tolerance(ds.L0, 1e-8) == 3
    assert is_valid_laplacian(ds.laplacian0)
    assert ds.params["components"] >= 1


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 20), st.integers(2, 30), st.floats(0, 1), st.integers(0, 2**31))
def test_column_space_is_smooth_basis(p, n, q, seed):
    r = min(2, p, n)
    ds = generate_lowrank(p, n, r, q, seed=seed)
    U = np.linalg.svd(ds.L0, full_matrices=False)[0][:, :r]
    assert np.max(subspace_angles(U, ds.basis)) < 1e-8


def test_determinism():
    a, b = make_dataset(d=0.2, seed=7), make_dataset(d=0.2, seed=7)
    for name in ("X", "L0", "M", "laplacian0", "basis", "coefficients"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    c = make_dataset(d=0.2, seed=8)
    assert not np.array_equal(a.X, c.X)


def test_coefficient_variance_is_one_over_p():
    rng = np.random.default_rng(0)
    ys = np.concatenate([generate_lowrank(30, 200, 3, 0.3, rng=rng).coefficients.ravel() for _ in range(30)])
    assert np.var(ys) == pytest.approx(1 / 30, rel=0.05)
    ys = generate_lowrank(30, 2000, 3, 0.3, mu=0.5, rng=rng).coefficients
    assert np.mean(ys) == pytest.approx(0.5, abs=0.01)


def test_signed_unit_density_and_amplitudes():
    rng = np.random.default_rng(1)
    M = generate_perturbation(200, 300, PerturbationSpec(0.3), rng)
    nz = M[M != 0]
    assert set(np.unique(nz)) == {-1.0, 1.0}
    assert nz.size / M.size == pytest.approx(0.3, abs=0.01)
    assert np.mean(nz > 0) == pytest.approx(0.5, abs=0.02)


def test_uniform_amplitudes():
    rng = np.random.default_rng(2)
    M = generate_perturbation(200, 300, PerturbationSpec(0.5, UNIFORM, c=0.4), rng)
    nz = M[M != 0]
    assert np.max(np.abs(nz)) <= 0.4
    assert np.mean(np.abs(nz)) == pytest.approx(0.2, abs=0.01)
    assert np.mean(nz > 0) == pytest.approx(0.5, abs=0.02)
    M = generate_perturbation(50, 50, PerturbationSpec(0.5, UNIFORM, c=1.0, signed=False), rng)
    assert np.all(M >= 0)


def test_zero_density_gives_zero_corruption():
    ds = make_dataset(d=0.0, seed=1)
    assert np.all(ds.M == 0)
    np.testing.assert_array_equal(ds.X, ds.L0)


def test_spec_validation():
    with pytest.raises(InvalidInputError):
        PerturbationSpec(1.2)
    with pytest.raises(InvalidInputError):
        PerturbationSpec(0.1, "gaussian")
    with pytest.raises(InvalidInputError):
        PerturbationSpec(0.1, UNIFORM, c=0.0)
    with pytest.raises(InvalidInputError):
        generate_lowrank(5, 5, 6, 0.3, seed=0)


def test_lowrank_distortion_grows_with_c():
    ds = make_dataset(seed=3)
    norms = []
    for c in np.round(np.linspace(0.1, 1.0, 10), 2):
        L = distort_lowrank(ds.L0, PerturbationSpec(0.2, UNIFORM, c=float(c)), np.random.default_rng(0))
        norms.append(np.linalg.norm(L - ds.L0))
    assert np.all(np.diff(norms) > 0)


def test_corrupt_records_params():
    ds = generate_lowrank(10, 12, 2, 0.5, seed=0)
    corrupt(ds, PerturbationSpec(0.25, SIGNED_UNIT), np.random.default_rng(0))
    assert ds.params["d"] == 0.25
    np.testing.assert_array_equal(ds.X, ds.L0 + ds.M)


def test_rel_error():
    a = np.ones((2, 2))
    assert rel_error(a, a) == 0
    assert rel_error(2 * a, a) == pytest.approx(1.0)
    with pytest.raises(DegenerateInputError):
        rel_error(a, np.zeros((2, 2)))

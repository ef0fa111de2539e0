import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from dtnlab import (
    ApproximantFamily,
    BoundaryFunction,
    Circle,
    ResourceError,
    Sphere,
    StarShaped2D,
    anisotropic_demo,
    assemble_dtn,
    chernoff_product,
    const_diag,
    convergence_report,
    discretize_boundary,
    evolve,
    semigroup_defect,
    spectrum,
    telescopic_check,
    v_step,
    w_factor,
)
from dtnlab.approximant import export_convergence, nuclear_norm
from dtnlab.io import read_csv

from conftest import random_smooth

GAMMA = anisotropic_demo(0.3)
GRID = discretize_boundary(Circle(1.0), 32)
ANISO_FAM = ApproximantFamily(Circle(1.0), GAMMA, GRID)
ANISO_SPEC = spectrum(assemble_dtn(Circle(1.0), GAMMA, GRID))
STAR = StarShaped2D.from_coeffs([1.0, 0.0, 0.0, 0.15])


def test_zero_time_is_the_identity():
    assert np.array_equal(ANISO_FAM.operator(0.0).matrix, np.eye(GRID.dim))


@pytest.mark.parametrize("domain,gamma,res", [
    (Circle(1.0), None, 32),
    (Circle(2.0), const_diag([1.5, 1.5]), 32),
    (Sphere(1.0), const_diag([2.0, 2.0, 2.0]), 8),
])
def test_scalar_conductivity_on_balls_gives_the_semigroup(domain, gamma, res):
    grid = discretize_boundary(domain, res)
    fam = ApproximantFamily(domain, gamma, grid)
    spec = spectrum(assemble_dtn(domain, gamma, grid))
    f = random_smooth(grid, np.random.default_rng(0))
    for t in (0.2, 1.0):
        assert_allclose(fam.operator(t)(f).coeffs, evolve(spec, t, f).coeffs, atol=1e-12)
    assert semigroup_defect(fam, 0.3, 0.4) < 1e-12


def test_anisotropic_family_is_not_a_semigroup():
    assert semigroup_defect(ANISO_FAM, 0.3, 0.4) > 1e-3


def test_v_step_uses_the_shared_family():
    f = random_smooth(GRID, np.random.default_rng(1))
    assert_allclose(v_step(f, 0.5, gamma=GAMMA).coeffs, ANISO_FAM.operator(0.5)(f).coeffs, atol=1e-12)


@pytest.mark.parametrize("fam", [
    ANISO_FAM,
    ApproximantFamily(STAR, None, discretize_boundary(STAR, 32)),
    ApproximantFamily(Circle(1.0), GAMMA, GRID, s=0.5),
], ids=["aniso", "star", "aniso-half-balls"])
def test_markov_and_nodal_contraction(fam):
    rng = np.random.default_rng(2)
    one = BoundaryFunction.constant(fam.grid)
    fine = np.linspace(0, 2 * np.pi, 2048, endpoint=False)
    for t in (0.05, 0.5):
        V = fam.operator(t)
        assert_allclose(V(one).values, 1.0, atol=1e-6)
        for _ in range(3):
            f = random_smooth(fam.grid, rng)
            # maximum principle: interior values never exceed the boundary sup
            assert np.max(np.abs(V.nodal_values(f))) <= np.max(np.abs(f.at(fine))) * (1 + 1e-6)


def test_shrinking_the_interior_balls_on_the_disk():
    half = ApproximantFamily(Circle(1.0), None, GRID, s=0.5)
    f = BoundaryFunction.from_callable(GRID, lambda x: x[:, 0])
    # balls of radius s R tangent at omega are centred at (1 - s) omega
    factor = 0.5 + 0.5 * np.exp(-0.2 / 0.5)
    assert_allclose(half.operator(0.2)(f).values, factor * f.values, atol=1e-12)


def test_invalid_scale():
    with pytest.raises(ValueError):
        ApproximantFamily(Circle(1.0), None, GRID, s=0.0)


def test_chernoff_products_converge_at_first_order():
    f = random_smooth(GRID, np.random.default_rng(3))
    exact = evolve(ANISO_SPEC, 1.0, f)
    errs = [(chernoff_product(f, 1.0, n, gamma=GAMMA) - exact).norm() for n in (4, 8, 16, 32)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(np.abs(ratios - 2.0) < 0.3)


def test_chernoff_argument_checks():
    f = BoundaryFunction.constant(GRID)
    with pytest.raises(ValueError):
        chernoff_product(f, 1.0, 0)
    with pytest.raises(ValueError):
        chernoff_product(f, 0.0, 3)


@settings(max_examples=10, deadline=None)
@given(n=st.integers(2, 24), t=st.floats(0.1, 2.0))
def test_telescopic_identity(n, t):
    assert telescopic_check(ANISO_FAM, ANISO_SPEC, t, n) < 1e-12


def test_convergence_report_rows_and_bound():
    rows = convergence_report(ANISO_FAM, ANISO_SPEC, 1.0, [2, 3, 8, 9])
    assert [(r.k_n, r.m_n) for r in rows] == [(1, 1), (1, 2), (4, 4), (4, 5)]
    for r in rows:
        assert r.op_err <= r.tr_err
        assert r.tr_err <= r.bound * (1 + 1e-10)
        assert r.gg_ratio > 0
    assert rows[2].op_err < rows[0].op_err


def test_convergence_report_limits():
    with pytest.raises(ResourceError):
        convergence_report(ANISO_FAM, ANISO_SPEC, 1.0, [4], max_size=10)
    with pytest.raises(ValueError):
        convergence_report(ANISO_FAM, ANISO_SPEC, 1.0, [1])


def test_w_factor():
    W, nrm, K = w_factor(ANISO_FAM, ANISO_SPEC, 0.5, 11)
    assert K == 11 and W.shape == (GRID.dim, GRID.dim)
    assert_allclose(nrm, np.linalg.norm(W, 2))
    _, _, K_capped = w_factor(ANISO_FAM, ANISO_SPEC, 5.0, len(ANISO_SPEC))
    assert 5.0 * ANISO_SPEC.eigenvalues[K_capped - 1] <= 30.0 < 5.0 * ANISO_SPEC.eigenvalues[K_capped]


def test_w_factor_is_identity_on_the_disk_semigroup():
    fam = ApproximantFamily(Circle(1.0), None, GRID)
    spec = spectrum(assemble_dtn(Circle(1.0), None, GRID))
    W, nrm, K = w_factor(fam, spec, 0.5, 9)
    P = spec.eigenvectors[:, :K]
    assert_allclose(W, P @ P.T, atol=1e-10)
    assert_allclose(nrm, 1.0, atol=1e-10)


def test_nuclear_norm():
    assert_allclose(nuclear_norm(np.diag([3.0, -2.0])), 5.0)


def test_export_convergence(tmp_path):
    rows = convergence_report(ANISO_FAM, ANISO_SPEC, 1.0, [2, 4])
    header, data = read_csv(export_convergence(rows, tmp_path / "conv.csv"))
    assert header == ["n", "op_err", "tr_err", "bound_term1", "bound_term2"]
    assert [int(r[0]) for r in data] == [2, 4]
    assert float(data[1][1]) == rows[1].op_err

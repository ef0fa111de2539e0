import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from dtnlab import (
    Annulus,
    Circle,
    InvalidDomainError,
    TransportParams,
    annulus_dtn,
    assemble_dtn,
    discretize_boundary,
    local_flux,
    membrane_solve,
    total_flux,
)
from dtnlab.io import read_csv
from dtnlab.transport import annulus_eigenvalue, export_flux_sweep, flux_sweep


def test_params():
    p = TransportParams(D=2.0, C0=1.0, W=4.0)
    assert p.mu == 0.5
    with pytest.raises(ValueError):
        TransportParams(D=0.0, C0=1.0, W=1.0)


def test_annulus_mode_zero_eigenvalues():
    assert_allclose(annulus_eigenvalue(0, Annulus(1.0, np.e)), 1.0)
    assert_allclose(annulus_eigenvalue(0, Annulus(2.0, 3.0, dim=3)), 3.0 / (2.0 * 1.0))


def test_annulus_higher_modes():
    R, R0 = 1.0, 2.0
    q = (R / R0) ** 6
    # planar mode k: (k / R) (1 + (R/R0)^(2k)) / (1 - (R/R0)^(2k))
    assert_allclose(annulus_eigenvalue(3, Annulus(R, R0)), 3 * (1 + q) / (1 - q), rtol=1e-12)
    # approaches the exterior disk value k / R as the outer radius grows
    assert_allclose(annulus_eigenvalue(5, Annulus(1.0, 1e3)), 5.0, rtol=1e-10)


def test_annulus_dtn_is_diagonal_and_positive():
    L = annulus_dtn(Annulus(1.0, 2.0), resolution=16)
    A = np.asarray(L.entries)
    assert np.array_equal(A, np.diag(np.diag(A)))
    assert np.all(np.diag(A) > 0)
    assert assemble_dtn(Annulus(1.0, 2.0), resolution=16).entries.shape == A.shape


def test_annulus_dtn_rejects_foreign_grids():
    with pytest.raises(ValueError):
        annulus_dtn(Annulus(1.0, 2.0), discretize_boundary(Circle(1.5), 8))
    with pytest.raises(InvalidDomainError):
        annulus_dtn(Circle(1.0))


@pytest.mark.parametrize("ann,area", [
    (Annulus(1.0, 2.0), 2 * np.pi),
    (Annulus(0.5, 1.5, dim=3), 4 * np.pi * 0.25),
])
def test_total_flux_closed_form(ann, area):
    L = annulus_dtn(ann, resolution=8)
    lam0 = annulus_eigenvalue(0, ann)
    for mu in (0.0, 0.3, 10.0):
        exact = 2.0 * 0.5 * lam0 / (1 + mu * lam0) * area
        assert_allclose(total_flux(L, mu, D=2.0, C0=0.5), exact, rtol=1e-13)
        assert_allclose(membrane_solve(L, mu).values, 1 / (1 + mu * lam0), rtol=1e-13)


def test_large_mu_limit_is_rate_limited():
    ann = Annulus(1.0, 3.0)
    L = annulus_dtn(ann, resolution=8)
    D, W = 1.0, 1e-6
    assert_allclose(total_flux(L, D / W, D=D), W * 2 * np.pi, rtol=1e-5)


def test_local_flux_is_uniform_for_uniform_data():
    L = annulus_dtn(Annulus(1.0, 2.0), resolution=16)
    phi = local_flux(L, 0.4)
    assert np.ptp(phi.values) < 1e-13


def test_disk_dtn_with_mu_is_insulated():
    L = assemble_dtn(Circle(1.0), resolution=16)
    # constants carry no flux when the domain has no absorbing outer wall
    assert abs(total_flux(L, 1.0)) < 1e-13
    assert_allclose(membrane_solve(L, 1.0).values, 1.0, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(mu1=st.floats(0.0, 50.0), mu2=st.floats(0.0, 50.0), R0=st.floats(1.1, 10.0))
def test_flux_decreases_with_mu(mu1, mu2, R0):
    L = annulus_dtn(Annulus(1.0, R0), resolution=8)
    a, b = sorted([mu1, mu2])
    assert total_flux(L, a) >= total_flux(L, b) * (1 - 1e-14)


def test_negative_mu_is_rejected():
    L = annulus_dtn(Annulus(1.0, 2.0), resolution=8)
    with pytest.raises(ValueError):
        membrane_solve(L, -1.0)


def test_flux_sweep_export(tmp_path):
    L = annulus_dtn(Annulus(1.0, 2.0), resolution=8)
    rows = flux_sweep(L, [0.0, 1.0])
    header, data = read_csv(export_flux_sweep(rows, tmp_path / "flux.csv"))
    assert header == ["mu", "Phi", "u_min", "u_max"]
    assert_allclose(float(data[0][2]), 1.0, rtol=1e-14)
    assert float(data[0][1]) == rows[0][1]

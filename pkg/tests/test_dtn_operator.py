import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from dtnlab import (
    AssemblyInconsistency,
    BoundaryFunction,
    Circle,
    Sphere,
    StarShaped2D,
    UnsupportedConfiguration,
    anisotropic_demo,
    assemble_dtn,
    const_diag,
    discretize_boundary,
    localization_profile,
    spectrum,
    weyl_fit,
)
from dtnlab.dtn_operator import export_matrix, export_spectrum, multiplicity_groups
from dtnlab.io import read_csv


def circle_eigenvalues(N, R=1.0):
    K = (N - 1) // 2
    return np.sort(np.concatenate([[0.0], np.repeat(np.arange(1, K + 1), 2) / R]))


def sphere_eigenvalues(L, R=1.0):
    return np.concatenate([np.full(2 * l + 1, l / R) for l in range(L + 1)])


@pytest.mark.parametrize("R", [0.5, 2.0])
def test_disk_spectrum_is_k_over_R(R):
    L = assemble_dtn(Circle(R), resolution=16)
    assert_allclose(spectrum(L).eigenvalues, circle_eigenvalues(16, R), atol=1e-12)


def test_ball_spectrum_with_scalar_conductivity():
    L = assemble_dtn(Sphere(1.5), const_diag([2.0, 2.0, 2.0]), resolution=5)
    assert_allclose(spectrum(L).eigenvalues, 2.0 * sphere_eigenvalues(5, 1.5), atol=1e-12)


def test_disk_eigenvalue_multiplicities():
    spec = spectrum(assemble_dtn(Circle(1.0), resolution=12))
    groups = multiplicity_groups(spec.eigenvalues)
    assert np.bincount(groups).tolist() == [1] + [2] * 5


def test_apply_matches_the_conormal_derivative():
    L = assemble_dtn(Circle(1.0), resolution=16)
    f = BoundaryFunction.from_callable(L.grid, lambda x: x[:, 0] ** 2 - x[:, 1] ** 2)
    assert_allclose(L.apply(f).values, 2 * f.values, atol=1e-12)


def test_fd_disk_agrees_with_closed_form():
    L = assemble_dtn(Circle(1.0), resolution=16, backend="fd")
    lam = spectrum(L).eigenvalues
    assert_allclose(lam[:9], circle_eigenvalues(16)[:9], rtol=0.01, atol=1e-10)
    assert L.asymmetry < 1e-2
    assert L.backend == "grid"


def test_star_domain_dtn_properties():
    D = StarShaped2D.from_coeffs([1.0, 0.0, 0.0, 0.15])
    L = assemble_dtn(D, resolution=32)
    A = L.entries
    assert_allclose(A, A.T, atol=1e-14)
    e = L.grid.constant_coeffs
    assert np.linalg.norm(A @ e) < 1e-12 * L.norm
    lam = spectrum(L).eigenvalues
    assert lam[0] > -1e-12 and lam[1] > 0.3


def test_anisotropic_dtn_on_the_disk():
    L = assemble_dtn(Circle(1.0), anisotropic_demo(0.3), resolution=16)
    lam = spectrum(L).eigenvalues
    assert abs(lam[0]) < 1e-10
    # on the unit circle the demo field is (1 + eps) along the normal
    assert lam[1] > 1.0


def test_entries_are_read_only():
    L = assemble_dtn(Circle(1.0), resolution=8)
    with pytest.raises(ValueError):
        L.entries[0, 0] = 1.0


def test_under_resolved_assembly_is_rejected():
    D = StarShaped2D.from_coeffs([1.0, 0.0, 0.0, 0.3])
    with pytest.raises(AssemblyInconsistency):
        assemble_dtn(D, resolution=16, fd_factor=1)


@settings(max_examples=30, deadline=None)
@given(p=st.floats(0.3, 2.0), C=st.floats(0.2, 5.0), n=st.integers(20, 200))
def test_weyl_fit_recovers_exact_power_laws(p, C, n):
    k = np.arange(1, n + 1)
    fit = weyl_fit((k / C) ** p, d=2)
    assert_allclose(fit.exponent, p, rtol=1e-10)
    assert_allclose(fit.C_est, C, rtol=1e-8)
    assert fit.fit_residual < 1e-10


def test_weyl_fit_on_circle_and_sphere():
    assert abs(weyl_fit(circle_eigenvalues(513), 2).exponent - 1.0) < 0.05
    assert abs(weyl_fit(sphere_eigenvalues(24), 3).exponent - 0.5) < 0.05


def test_weyl_fit_needs_enough_points():
    with pytest.raises(ValueError):
        weyl_fit(np.arange(1.0, 6.0), 2)


@settings(max_examples=20, deadline=None)
@given(k=st.integers(2, 15), r1=st.floats(0.05, 1.0), r2=st.floats(0.05, 1.0))
def test_localization_profile_on_the_disk(k, r1, r2):
    spec = spectrum(assemble_dtn(Circle(1.0), resolution=16))
    lam = spec.eigenvalues[k - 1]
    (a, pa), (b, pb) = localization_profile(spec, k, [r1, r2])
    top = localization_profile(spec, k, [1.0])[0][1]
    # |v(r omega)| <= r^(lambda R) sup |phi| with equality for circular harmonics
    # eigenvector round-off from lower modes dominates once r^lambda is tiny
    assert_allclose(pa, a**lam * top, rtol=1e-9, atol=1e-14)
    if a <= b:
        assert pa <= pb * (1 + 1e-12)


def test_localization_profile_restrictions():
    spec = spectrum(assemble_dtn(StarShaped2D.from_coeffs([1.0, 0.1]), resolution=8))
    with pytest.raises(UnsupportedConfiguration):
        localization_profile(spec, 2, [0.5])
    disk = spectrum(assemble_dtn(Circle(1.0), resolution=8))
    with pytest.raises(ValueError):
        localization_profile(disk, 2, [1.5])
    with pytest.raises(IndexError):
        localization_profile(disk, 100, [0.5])


def test_eigenfunctions_are_orthonormal_boundary_functions():
    spec = spectrum(assemble_dtn(Circle(1.0), resolution=8))
    fs = spec.eigenfunctions
    G = np.array([[a.inner(b) for b in fs] for a in fs])
    assert_allclose(G, np.eye(len(fs)), atol=1e-12)
    assert spec.eigenfunction(1).grid is spec.grid


def test_export_spectrum_round_trip(tmp_path):
    spec = spectrum(assemble_dtn(Circle(1.0), resolution=8))
    path = export_spectrum(spec, tmp_path / "spectrum.csv")
    header, rows = read_csv(path)
    assert header == ["k", "lambda", "multiplicity_group"]
    assert_allclose([float(r[1]) for r in rows], spec.eigenvalues, rtol=0, atol=0)
    schema = json.loads((tmp_path / "spectrum.schema.json").read_text())
    assert [c["name"] for c in schema["columns"]] == header


@pytest.mark.parametrize("fmt", ["csv", "bin"])
def test_export_matrix(tmp_path, fmt):
    L = assemble_dtn(Circle(1.0), resolution=8)
    path = export_matrix(L, tmp_path / f"L.{fmt}", fmt)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    n = meta["shape"][0]
    if fmt == "csv":
        A = np.loadtxt(path, delimiter=",")
    else:
        A = np.fromfile(path, dtype="<f8").reshape(n, n)
    assert_allclose(A, L.entries, rtol=0, atol=0)

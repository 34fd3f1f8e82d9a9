import numpy as np
import pytest

from geodesk import connection as C
from geodesk import grid as G
from geodesk import ricci as R
from geodesk.errors import DomainError
from geodesk.grid import TorusGrid


def test_flat_baseline_zero():
    g = TorusGrid(1, 16)
    data = R.ricci_form(g, G.standard_volume_field(g), G.standard_j_field(g))
    assert np.max(np.abs(data.ric)) <= 1e-13
    assert np.max(np.abs(data.tau)) <= 1e-13
    assert np.max(np.abs(data.lam)) <= 1e-13
    lam = R.lambda_rho(g, G.standard_volume_field(g), G.standard_j_field(g),
                       np.zeros((2, 2) + g.shape))
    assert np.max(np.abs(lam)) == 0.0


def test_lambda_rho_rejects_commuting():
    g = TorusGrid(1, 16)
    J = G.standard_j_field(g)
    with pytest.raises(DomainError):
        R.lambda_rho(g, G.standard_volume_field(g), J, J.copy())


def test_conformal_ricci_three_routes_n1():
    # Ric(e^{2φ}ρ0, J0) via the definition, via the conformal law, and via
    # Gaussian curvature times the area form
    g = TorusGrid(1, 64)
    x = g.coords()
    phi = 0.1 * np.sin(x[0]) * np.cos(x[1]) + 0.05 * np.cos(x[1])
    rho = G.standard_volume_field(g) * np.exp(2 * phi)
    J0 = G.standard_j_field(g)
    data = R.ricci_form(g, rho, J0)
    dphi_j = G.one_form_compose_j(G.exterior_d(g, phi[None], 0), J0)
    route_b = G.exterior_d(g, dphi_j, 1)
    assert np.max(np.abs(data.ric - route_b)) <= 1e-10
    metric = G.constant_field(g, np.eye(2)) * np.exp(2 * phi)
    K = C.gaussian_curvature(g, metric)
    route_c = rho * K
    assert np.max(np.abs(data.ric - route_c)) <= 1e-8


def test_scalar_curvature_is_twice_gaussian_and_integrates_to_zero():
    g = TorusGrid(1, 64)
    x = g.coords()
    phi = 0.1 * np.sin(x[0]) * np.cos(x[1])
    omega = G.standard_omega_field(g) * np.exp(2 * phi)
    J0 = G.standard_j_field(g)
    S = R.scalar_curvature(g, omega, J0)
    metric = G.constant_field(g, np.eye(2)) * np.exp(2 * phi)
    K = C.gaussian_curvature(g, metric)
    assert np.max(np.abs(S - 2 * K)) <= 1e-7
    rho = R.omega_power(g, omega, 1)
    assert abs(G.integrate_against_volume(g, S, rho)) <= 1e-8


def test_scalar_curvature_flat_zero():
    g = TorusGrid(2, 8)
    S = R.scalar_curvature(g, G.standard_omega_field(g), G.standard_j_field(g))
    assert np.max(np.abs(S)) <= 1e-13


def test_hamiltonian_vector_field_solves():
    g = TorusGrid(2, 8)
    H = G.random_band_limited(g, "scalar", 3, 0.2)
    omega = G.standard_omega_field(g)
    v = R.hamiltonian_vector_field(g, omega, H)
    resid = G.interior_f(g, v, omega, 2) - G.exterior_d(g, H[None], 0)
    assert np.max(np.abs(resid)) <= 1e-12
    # Hamiltonian fields are divergence-free
    fv = G.divergence_frho(g, v, G.standard_volume_field(g))
    assert np.max(np.abs(fv)) <= 1e-12


def test_vector_from_alpha():
    g = TorusGrid(1, 16)
    rho = G.random_band_limited(g, "volume", 5, 0.1)
    alpha = G.random_band_limited(g, "form:0", 6, 0.2)
    v = R.vector_from_alpha(g, rho, alpha)
    resid = G.interior_f(g, v, rho, 2) - G.exterior_d(g, alpha, 0)
    assert np.max(np.abs(resid)) <= 1e-12


def test_moment_identities_suite_n1():
    rep = R.verify_moment_identities(1, 32, seed=7, amplitude=0.1, cases=2)
    assert rep.passed, rep.to_json()


def test_transformation_laws_suite_n1():
    rep = R.verify_transformation_laws(1, 32, seed=7, amplitude=0.1, cases=1)
    assert rep.passed, rep.to_json()


def test_connection_independence_explicit():
    g = TorusGrid(1, 32)
    rho = G.random_band_limited(g, "volume", 11, 0.1)
    J = G.random_band_limited(g, "acs", 12, 0.1)
    a = R.ricci_form(g, rho, J)
    metric, _ = C.compatible_pair(g, rho, J)
    b = R.ricci_form(g, rho, J, C.levi_civita(g, metric), "compatible-metric")
    # τ and λ differ between connections but the assembled form agrees
    assert np.max(np.abs(a.tau - b.tau)) > 1e-6
    assert np.max(np.abs(a.ric - b.ric)) <= 1e-7 * max(1.0, np.max(np.abs(a.ric)))

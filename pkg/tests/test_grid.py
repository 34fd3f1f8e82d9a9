import numpy as np
import pytest

from geodesk import combi
from geodesk import grid as G
from geodesk.errors import DomainError, UsageError
from geodesk.grid import (AffineMap, DisplacementMap, Field, TorusGrid, band_limit_residual,
                          codiff_f, constant_field, divergence_frho, exterior_d,
                          flow_rk4, form_from_matrix, fourier_interpolate,
                          integrate, integrate_against_volume, interior_f,
                          inverse_displacement, laplacian, lie_derivative_J, lie_endo,
                          lie_form, lie_scalar, lie_vector, load_field, poisson_solve,
                          pullback, pq_project_f, random_band_limited, save_field,
                          standard_j_field, standard_omega_field, standard_volume_field,
                          star_f, vector_from_contraction, wedge_f)

T2 = TorusGrid(1, 16)
T4 = TorusGrid(2, 8)


def test_grid_validation():
    with pytest.raises(UsageError):
        TorusGrid(1, 7)
    with pytest.raises(UsageError):
        TorusGrid(1, 4)


def test_integrate_standard_volume():
    for g in (T2, T4):
        rho = standard_volume_field(g)
        assert np.isclose(integrate(g, rho), (2 * np.pi) ** g.d)
    with pytest.raises(UsageError):
        integrate(T2, standard_omega_field(T4)[:1])


def test_exterior_d_analytic():
    g = T2
    x = g.coords()
    # d(sin x1 dx2) = cos x1 dx1∧dx2
    a = np.zeros((2,) + g.shape)
    a[1] = np.sin(x[0])
    da = exterior_d(g, a, 1)
    np.testing.assert_allclose(da[0], np.cos(x[0]), atol=1e-12)
    # constant form -> 0
    np.testing.assert_allclose(exterior_d(g, np.ones((2,) + g.shape), 1), 0.0, atol=1e-13)
    with pytest.raises(UsageError):
        exterior_d(g, da, 2)


def test_dd_zero_and_stokes():
    rng_seed = 7
    for g, k in ((TorusGrid(1, 16), 0), (TorusGrid(2, 16), 1)):
        a = random_band_limited(g, f"form:{k}", rng_seed) if k else \
            random_band_limited(g, "scalar", rng_seed)[None]
        dda = exterior_d(g, exterior_d(g, a, k), k + 1)
        assert np.max(np.abs(dda)) <= 1e-12
        alpha = random_band_limited(g, f"form:{g.d - 1}", rng_seed + 1)
        assert abs(integrate(g, exterior_d(g, alpha, g.d - 1))) <= 1e-12


def test_integrate_sin_squared():
    g = TorusGrid(1, 16)
    x = g.coords()
    vol = standard_volume_field(g)
    val = integrate_against_volume(g, np.sin(x[0]) ** 2, vol)
    assert np.isclose(val, 2 * np.pi ** 2)


def test_wedge_interior_match_pointwise_core():
    g = T2
    a = random_band_limited(g, "form:1", 3)
    b = random_band_limited(g, "form:1", 4)
    w = wedge_f(g, a, b)
    np.testing.assert_allclose(w[0], a[0] * b[1] - a[1] * b[0], atol=1e-13)
    v = random_band_limited(g, "vector", 5)
    iv = interior_f(g, v, w, 2)
    # ι(v)(c dx∧dy) = c(v^x dy − v^y dx)
    np.testing.assert_allclose(iv[0], -v[1] * w[0], atol=1e-13)
    np.testing.assert_allclose(iv[1], v[0] * w[0], atol=1e-13)
    with pytest.raises(UsageError):
        interior_f(g, v, np.ones((1,) + g.shape), 0)


def test_star_flat_roundtrip_and_codiff():
    for g in (T2, T4):
        for k in range(g.d + 1):
            a = random_band_limited(g, f"form:{k}", 11 + k)
            ss = star_f(g, star_f(g, a, k), g.d - k)
            np.testing.assert_allclose(ss, (-1.0) ** k * a, atol=1e-12)
    # d*d on functions reproduces the spectral laplacian
    g = T2
    f = random_band_limited(g, "scalar", 2)
    lhs = codiff_f(g, exterior_d(g, f[None], 0), 1)[0]
    np.testing.assert_allclose(lhs, laplacian(g, f), atol=1e-10)


def test_poisson_flat_and_curved():
    g = TorusGrid(1, 32)
    x = g.coords()
    f = np.cos(x[0])
    u = poisson_solve(g, f)
    np.testing.assert_allclose(u, np.cos(x[0]), atol=1e-12)
    assert np.max(np.abs(poisson_solve(g, np.zeros(g.shape)))) == 0.0
    with pytest.raises(DomainError):
        poisson_solve(g, np.ones(g.shape))
    # curved: conformal metric e^{2φ}δ on T², smooth low-mode φ
    g = TorusGrid(1, 64)
    x = g.coords()
    phi = 0.1 * np.sin(x[0]) * np.cos(x[1])
    metric = constant_field(g, np.eye(2)) * np.exp(2 * phi)
    src = random_band_limited(g, "scalar", 10, 0.5)
    sq = G.metric_sqrt_det(metric)
    src = src - g.integrate_scalar(src * sq) / g.integrate_scalar(sq)
    u = poisson_solve(g, src, metric)
    resid = laplacian(g, u, metric) - src
    assert np.max(np.abs(resid)) <= 1e-9 * max(1.0, np.max(np.abs(src)))


def test_divergence_two_routes_and_mean_zero():
    g = TorusGrid(1, 32)
    x = g.coords()
    v = np.zeros((2,) + g.shape)
    v[0] = np.sin(x[0])
    rho = standard_volume_field(g)
    np.testing.assert_allclose(divergence_frho(g, v, rho), np.cos(x[0]), atol=1e-12)
    # curved volume: f_v computed via dι(v)ρ has zero ρ-mean
    rho2 = random_band_limited(g, "volume", 21, 0.15)
    w = random_band_limited(g, "vector", 22)
    fv = divergence_frho(g, w, rho2)
    assert abs(integrate_against_volume(g, fv, rho2)) <= 1e-12
    with pytest.raises(DomainError):
        divergence_frho(g, w, -rho2)


def test_vector_from_contraction_roundtrip():
    g = T4
    rho = random_band_limited(g, "volume", 31, 0.1)
    v = random_band_limited(g, "vector", 32)
    sigma = interior_f(g, v, rho, g.d)
    v2 = vector_from_contraction(g, rho, sigma)
    np.testing.assert_allclose(v2, v, atol=1e-12)


def test_random_fields_deterministic_and_band_limited():
    g = T4
    a = random_band_limited(g, "endo", 77, 0.1)
    b = random_band_limited(g, "endo", 77, 0.1)
    assert np.array_equal(a, b)
    assert np.max(np.abs(a)) <= 0.1 + 1e-12
    assert band_limit_residual(g, a) <= 1e-12
    J = random_band_limited(g, "acs", 78, 0.15)
    J2 = np.einsum("ik...,kj...->ij...", J, J)
    np.testing.assert_allclose(J2, constant_field(g, -np.eye(g.d)), atol=1e-12)
    assert np.array_equal(random_band_limited(g, "acs", 5, 0.0), standard_j_field(g))
    with pytest.raises(UsageError):
        random_band_limited(g, "acs", 5, 0.5)


def test_acs_symplectic_compatible():
    g = T2
    J = G.random_acs_symplectic(g, 41, 0.15)
    J2 = np.einsum("ik...,kj...->ij...", J, J)
    np.testing.assert_allclose(J2, constant_field(g, -np.eye(g.d)), atol=1e-11)
    W = constant_field(g, G.standard_omega_matrix(g.n))
    pull = np.einsum("ki...,kl...,lj...->ij...", J, W, J)
    np.testing.assert_allclose(pull, W, atol=1e-11)


def test_lie_derivative_forms_cartan_vs_flow():
    g = TorusGrid(1, 32)
    v = random_band_limited(g, "vector", 51, 0.1)
    a = random_band_limited(g, "form:1", 52, 0.5)
    lie = lie_form(g, v, a, 1)
    # flow oracle
    h = 1e-4
    Xp, _ = flow_rk4(g, v, h)
    Xm, _ = flow_rk4(g, v, -h)
    jac_p = G.displacement_jacobian(g, (Xp - g.coords().reshape(2, -1)).reshape((2,) + g.shape))
    jac_m = G.displacement_jacobian(g, (Xm - g.coords().reshape(2, -1)).reshape((2,) + g.shape))
    vp = fourier_interpolate(g, a, Xp).reshape((2,) + g.shape)
    vm = fourier_interpolate(g, a, Xm).reshape((2,) + g.shape)
    ap = combi.pullback_linear_coef(vp, 2, 1, jac_p)
    am = combi.pullback_linear_coef(vm, 2, 1, jac_m)
    fd = (ap - am) / (2 * h)
    assert np.max(np.abs(fd - lie)) <= 1e-6 * max(1.0, np.max(np.abs(lie)))


def test_lie_derivative_J_routes_agree():
    g = TorusGrid(1, 32)
    v = random_band_limited(g, "vector", 61, 0.1)
    J = random_band_limited(g, "acs", 62, 0.15)
    flat_gamma = np.zeros((2, 2, 2) + g.shape)
    lie_conn = lie_derivative_J(g, v, J, flat_gamma)
    lie_direct = lie_endo(g, v, J)
    np.testing.assert_allclose(lie_conn, lie_direct, atol=1e-10)
    # anticommutes with J pointwise
    anti = np.einsum("ik...,kj...->ij...", lie_conn, J) + np.einsum("ik...,kj...->ij...", J, lie_conn)
    assert np.max(np.abs(anti)) <= 1e-9
    with pytest.raises(DomainError):
        bad = flat_gamma.copy()
        bad[0, 0, 1] = 1.0
        lie_derivative_J(g, v, J, bad)


def test_lie_derivative_J_flow_oracle():
    g = TorusGrid(1, 32)
    v = random_band_limited(g, "vector", 63, 0.1)
    J = random_band_limited(g, "acs", 64, 0.15)
    lie = lie_endo(g, v, J)
    h = 1e-4
    out = []
    for sgn in (1.0, -1.0):
        X, D = flow_rk4(g, v, sgn * h)
        Jx = fourier_interpolate(g, J, X)
        Dinv = np.moveaxis(np.linalg.inv(np.moveaxis(D, (0, 1), (-2, -1))), (-2, -1), (0, 1))
        out.append(np.einsum("ikp,klp,ljp->ijp", Dinv, Jx, D).reshape((2, 2) + g.shape))
    fd = (out[0] - out[1]) / (2 * h)
    rel = np.max(np.abs(fd - lie)) / max(1.0, np.max(np.abs(lie)))
    assert rel <= 1e-6


def test_pullback_identity_and_affine():
    g = T2
    f = random_band_limited(g, "scalar", 71, 0.3)
    ident = AffineMap(np.eye(2, dtype=int))
    np.testing.assert_allclose(pullback(g, "scalar", f, ident), f, atol=0)
    w0 = standard_omega_field(g)
    shear = AffineMap(np.array([[1, 1], [0, 1]]))
    # SL(2,Z) preserves the standard area form exactly
    np.testing.assert_allclose(pullback(g, "form:2", w0, shear), w0, atol=1e-14)
    vol = standard_volume_field(g)
    assert np.isclose(integrate(g, pullback(g, "form:2", vol, shear)), integrate(g, vol))
    with pytest.raises(DomainError):
        AffineMap(np.array([[2, 0], [0, 1]]))


def test_pullback_displacement_scalar_oracle():
    g = TorusGrid(1, 32)
    u = random_band_limited(g, "vector", 81, 0.05)
    x = g.coords()
    f = np.sin(x[0])
    out = pullback(g, "scalar", f, DisplacementMap(u))
    np.testing.assert_allclose(out, np.sin(x[0] + u[0]), atol=1e-10)


def test_pullback_functoriality_and_d_commutes():
    g = TorusGrid(1, 64)
    u = random_band_limited(g, "vector", 91, 0.04, band=2)
    phi = DisplacementMap(u)
    a = random_band_limited(g, "form:1", 92, 0.3, band=3)
    b = random_band_limited(g, "form:1", 93, 0.3, band=3)
    lhs = pullback(g, "form:2", wedge_f(g, a, b), phi)
    rhs = wedge_f(g, pullback(g, "form:1", a, phi), pullback(g, "form:1", b, phi))
    assert np.max(np.abs(lhs - rhs)) <= 1e-8
    lhs_d = pullback(g, "form:2", exterior_d(g, a, 1), phi)
    rhs_d = exterior_d(g, pullback(g, "form:1", a, phi), 1)
    assert np.max(np.abs(lhs_d - rhs_d)) <= 1e-8


def test_inverse_displacement():
    g = TorusGrid(1, 32)
    u = random_band_limited(g, "vector", 95, 0.05)
    w = inverse_displacement(g, u)
    X = g.coords().reshape(2, -1)
    # φ(ψ(x)) = x
    comp = X + w.reshape(2, -1) + fourier_interpolate(g, u, X + w.reshape(2, -1))
    assert np.max(np.abs(comp - X)) <= 1e-11


def test_pq_project_field_resolution():
    g = T4
    J = random_band_limited(g, "acs", 97, 0.1)
    a = random_band_limited(g, "form:2", 98, 0.4)
    total = sum(pq_project_f(g, a, 2, J, p, 2 - p) for p in range(3))
    np.testing.assert_allclose(total.real, a, atol=1e-11)
    np.testing.assert_allclose(total.imag, 0.0, atol=1e-11)


def test_snapshot_roundtrip(tmp_path):
    g = T4
    data = random_band_limited(g, "endo", 99, 0.2)
    fld = Field(g, "endo", data, {"seed": 99, "amplitude": 0.2})
    p = tmp_path / "field.gdsk"
    save_field(p, fld)
    back = load_field(p)
    assert back.kind == "endo"
    assert back.grid == g
    assert back.lineage["seed"] == 99
    np.testing.assert_array_equal(back.data, data)
    cplx = Field(g, "scalar", data[0, 0] + 1j * data[0, 1])
    save_field(p, cplx)
    np.testing.assert_array_equal(load_field(p).data, cplx.data)


def test_lie_derivative_J_connection_independent_curved():
    g = TorusGrid(1, 32)
    v = random_band_limited(g, "vector", 65, 0.1, band=2)
    J = random_band_limited(g, "acs", 66, 0.1)
    from geodesk import connection as C
    x = g.coords()
    metric = constant_field(g, np.eye(2)) * np.exp(2 * (0.1 * np.sin(x[0])))
    lc = C.levi_civita(g, metric)
    flat = np.zeros((2, 2, 2) + g.shape)
    a = lie_derivative_J(g, v, J, flat)
    b = lie_derivative_J(g, v, J, lc.gamma)
    assert np.max(np.abs(a - b)) <= 1e-9 * max(1.0, np.max(np.abs(a)))


def test_affine_map_requires_det_one():
    import pytest as _pytest
    from geodesk.errors import DomainError as _DE
    with _pytest.raises(_DE):
        AffineMap(np.diag([-1, 1]))


def test_bidegree_tag():
    import pytest as _pytest
    from geodesk import tensor as TT
    from geodesk.errors import DomainError as _DE
    J = TT.LinCS.standard(1)
    w = TT.standard_omega(1)
    tagged = TT.AltFormPt(1, 2, w.coef, bidegree=(1, 1, J))
    assert tagged.bidegree[0] == 1
    with _pytest.raises(_DE):
        TT.AltFormPt(1, 2, w.coef, bidegree=(2, 0, J))

import numpy as np
import pytest

from geodesk import grid as G
from geodesk import hodge as H
from geodesk import ricci as Ric
from geodesk.errors import DomainError
from geodesk.grid import TorusGrid


def test_flat_instance_and_bad_instances():
    g = TorusGrid(1, 16)
    inst = H.flat_instance(g)
    assert np.max(np.abs(inst.metric - G.flat_metric_field(g))) == 0.0
    with pytest.raises(DomainError):
        H.conformal_instance(TorusGrid(2, 8), np.zeros(TorusGrid(2, 8).shape))


def test_dbar_q0_fourier_symbol():
    # flat baseline: single mode v = a sin(k·x): ∂̄v matches the hand symbol
    g = TorusGrid(1, 32)
    inst = H.flat_instance(g)
    x = g.coords()
    a = np.array([1.0, 0.5])
    v = a.reshape(2, 1, 1) * np.sin(2 * x[0] + x[1])
    out = H.dbar_q0(g, inst.J, v)
    # (∂̄v)u = ½(∇_u v + J∇_{Ju}v) for constant J: symbol ½(k(u)a + k(Ju)Ja)cos
    J0 = G.standard_j(1)
    k = np.array([2.0, 1.0])
    cos = np.cos(2 * x[0] + x[1])
    expected = np.zeros_like(out)
    for uidx in range(2):
        e = np.zeros(2)
        e[uidx] = 1.0
        col = 0.5 * (k @ e * a + k @ (J0 @ e) * (J0 @ a))
        expected[:, uidx] = col.reshape(2, 1, 1) * cos
    np.testing.assert_allclose(out, expected, atol=1e-12)
    # agrees with the Kähler-connection formula
    np.testing.assert_allclose(out, H.dbar_q0_kahler(inst, v), atol=1e-12)


def test_dbar_complex_is_half_lie():
    g = TorusGrid(1, 32)
    J = G.random_band_limited(g, "acs", 3, 0.1)
    v = G.random_band_limited(g, "vector", 4, 0.1)
    lhs = 2.0 * np.einsum("ik...,kj...->ij...", J, H.dbar_q0(g, J, v))
    np.testing.assert_allclose(lhs, G.lie_endo(g, v, J), atol=1e-12)


def test_dbar_cochain_on_integrable():
    g = TorusGrid(2, 16)
    u = G.random_band_limited(g, "vector", 5, 0.04, band=1)
    inst = H.flat_instance(g)
    v = G.random_band_limited(g, "vector", 6, 0.1, band=1)
    tau = H.dbar_q1(inst, H.dbar_q0(g, inst.J, v))
    assert np.max(np.abs(tau)) <= 1e-7 * max(1.0, np.max(np.abs(v)))


def test_bkn_suite_n1():
    rep = H.bkn_suite(1, 64, seed=3, amplitude=0.1)
    assert rep.passed, rep.to_json()


def test_bkn_suite_n2():
    rep = H.bkn_suite(2, 16, seed=5, amplitude=0.05)
    assert rep.passed, rep.to_json()


def test_harmonic_suite_n1():
    rep = H.harmonic_lemma_suite(1, 64, seed=3, amplitude=0.1)
    assert rep.passed, rep.to_json()


def test_harmonic_suite_n2():
    rep = H.harmonic_lemma_suite(2, 16, seed=5, amplitude=0.05)
    assert rep.passed, rep.to_json()


def test_bott_chern_suite():
    rep = H.bott_chern_suite(1, 32, seed=7, amplitude=0.1)
    assert rep.passed, rep.to_json()
    rep4 = H.bott_chern_suite(2, 16, seed=9, amplitude=0.05)
    assert rep4.passed, rep4.to_json()


def test_coclosed_projection_flat():
    g = TorusGrid(1, 32)
    inst = H.flat_instance(g)
    raw = Ric.anticommute_project(inst.J, G.random_band_limited(g, "endo", 11, 0.1))
    proj = H.project_coclosed_q1(g, raw)
    assert np.max(np.abs(H.dbar_adjoint_q1(inst, proj))) <= 1e-10
    again = H.project_coclosed_q1(g, proj)
    np.testing.assert_allclose(again, proj, atol=1e-10)

"""The Ricci form of a volume form and almost complex structure, the pairing
one-form that generates its variation, scalar curvature, and the residual
suites verifying the moment-map and transformation identities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import connection as C
from . import grid as G
from .errors import DomainError
from .grid import TorusGrid
from .report import CheckReport, suite_tolerances


def _endo_mul(*mats):
    out = mats[0]
    for m in mats[1:]:
        out = np.einsum("ik...,kj...->ij...", out, m)
    return out


def _endo_trace(E):
    return np.einsum("ii...->...", E)


def trace_pairing(grid: TorusGrid, jh1: np.ndarray, J: np.ndarray, jh2: np.ndarray) -> np.ndarray:
    """Pointwise ½ tr(Ĵ1 J Ĵ2)."""
    return 0.5 * _endo_trace(_endo_mul(jh1, J, jh2))


def omega_rho_pairing(grid: TorusGrid, rho: np.ndarray, J: np.ndarray,
                      jh1: np.ndarray, jh2: np.ndarray) -> float:
    """Ω_{ρ,J}(Ĵ1, Ĵ2) = ½ ∫ tr(Ĵ1 J Ĵ2) ρ."""
    return G.integrate_against_volume(grid, trace_pairing(grid, jh1, J, jh2), rho)


def anticommute_project(J: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Pointwise projection onto endomorphisms anticommuting with J."""
    return 0.5 * (A + _endo_mul(J, A, J))


def default_volume_connection(grid: TorusGrid, rho: np.ndarray) -> C.ConnectionField:
    return C.conformally_flat_volume_connection(grid, rho)


def _check_volume_connection(grid: TorusGrid, conn: C.ConnectionField, rho: np.ndarray,
                             volume_tol: float = 1e-9):
    if not conn.torsion_free:
        raise DomainError("connection must be torsion-free")
    resid = C.cov_volume_residual(grid, conn, rho)
    if resid > volume_tol:
        raise DomainError(f"connection does not preserve the volume form ({resid:.2e})")


def lambda_one_form(grid: TorusGrid, conn: C.ConnectionField, J: np.ndarray,
                    nJ: np.ndarray | None = None) -> np.ndarray:
    """λ_j = trace of v ↦ (∇_v J)∂_j, i.e. (∇_i J)^i_j."""
    if nJ is None:
        nJ = C.cov_endo(grid, conn, J)
    return np.einsum("iij...->j...", nJ)


def tau_two_form(grid: TorusGrid, conn: C.ConnectionField, J: np.ndarray,
                 nJ: np.ndarray | None = None) -> np.ndarray:
    """τ_{ij} = ½ tr((∇_i J) J (∇_j J)) + tr(J R(∂_i, ∂_j))."""
    d = grid.d
    if nJ is None:
        nJ = C.cov_endo(grid, conn, J)
    nJ = nJ.reshape((d, d, d, -1))
    Jf = J.reshape((d, d, -1))
    riem = C.curvature(grid, conn).riem.reshape((d, d, d, d, -1))
    jn = np.einsum("bcx,jcax->jbax", Jf, nJ, optimize=True)
    quad = 0.5 * np.einsum("iabx,jbax->ijx", nJ, jn, optimize=True)
    curv = np.einsum("klx,lkijx->ijx", Jf, riem, optimize=True)
    return G.form_from_matrix(grid, (quad + curv).reshape((d, d) + grid.shape))


@dataclass(frozen=True)
class RicciData:
    """τ, λ, and the assembled Ricci form for one connection choice."""

    grid: TorusGrid
    tau: np.ndarray
    lam: np.ndarray
    ric: np.ndarray
    connection_tag: str
    closedness_residual: float


def ricci_form(grid: TorusGrid, rho: np.ndarray, J: np.ndarray,
               conn: C.ConnectionField | None = None,
               connection_tag: str = "conformally-flat",
               volume_tol: float = 1e-9) -> RicciData:
    """Ric = ½(τ + dλ) for a torsion-free ρ-preserving connection."""
    if conn is None:
        conn = default_volume_connection(grid, rho)
    _check_volume_connection(grid, conn, rho, volume_tol)
    nJ = C.cov_endo(grid, conn, J)
    tau = tau_two_form(grid, conn, J, nJ)
    lam = lambda_one_form(grid, conn, J, nJ)
    ric = 0.5 * (tau + G.exterior_d(grid, lam, 1))
    dric = G.exterior_d(grid, ric, 2) if grid.d > 2 else None
    resid = 0.0 if dric is None else float(np.max(np.abs(dric)) / max(1.0, np.max(np.abs(ric))))
    return RicciData(grid, tau, lam, ric, connection_tag, resid)


def lambda_rho(grid: TorusGrid, rho: np.ndarray, J: np.ndarray, jhat: np.ndarray,
               conn: C.ConnectionField | None = None,
               anticommute_tol: float = 1e-8, volume_tol: float = 1e-9) -> np.ndarray:
    """Λ(u) = trace((∇Ĵ)u) + ½ tr(Ĵ J ∇_u J) as a one-form field."""
    anti = np.max(np.abs(_endo_mul(jhat, J) + _endo_mul(J, jhat)))
    if anti > anticommute_tol * max(1.0, float(np.max(np.abs(jhat)))):
        raise DomainError(f"lambda_rho: Ĵ must anticommute with J ({anti:.2e})")
    if conn is None:
        conn = default_volume_connection(grid, rho)
    _check_volume_connection(grid, conn, rho, volume_tol)
    nJh = C.cov_endo(grid, conn, jhat)
    nJ = C.cov_endo(grid, conn, J)
    first = np.einsum("iij...->j...", nJh)
    second = 0.5 * np.einsum("ab...,bc...,jca...->j...", jhat, J, nJ)
    return first + second


def scalar_curvature(grid: TorusGrid, omega: np.ndarray, J: np.ndarray,
                     ric: np.ndarray | None = None) -> np.ndarray:
    """S = 2 <Ric, ω> = 2 (Ric ∧ ω^{n−1}/(n−1)!) / (ω^n/n!)."""
    rho = omega_power(grid, omega, grid.n)
    if np.any(G.vol_sign(grid.n) * rho[0] <= 0):
        raise DomainError("scalar_curvature: ω^n must be positive")
    if ric is None:
        ric = ricci_form(grid, rho, J).ric
    if grid.n == 1:
        return 2.0 * ric[0] / rho[0]
    wn1 = omega_power(grid, omega, grid.n - 1)
    num = G.wedge_f(grid, ric, wn1, 2, 2 * grid.n - 2)
    return 2.0 * num[0] / rho[0]


def omega_power(grid: TorusGrid, omega: np.ndarray, p: int) -> np.ndarray:
    """ω^p / p! as a 2p-form field."""
    out = np.ones((1,) + grid.shape)
    deg = 0
    for _ in range(p):
        out = G.wedge_f(grid, out, omega, deg, 2)
        deg += 2
    return out / math.factorial(p)


def hamiltonian_vector_field(grid: TorusGrid, omega: np.ndarray, H: np.ndarray) -> np.ndarray:
    """v with ι(v)ω = dH, pointwise solve."""
    dH = G.exterior_d(grid, H[None], 0)
    w = G.form_to_matrix(grid, omega)
    winv = np.moveaxis(np.linalg.inv(np.moveaxis(w, (0, 1), (-2, -1))), (-2, -1), (0, 1))
    return np.einsum("j...,ji...->i...", dH, winv)


def vector_from_alpha(grid: TorusGrid, rho: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """v_α with ι(v_α)ρ = dα for a (2n−2)-form α."""
    return G.vector_from_contraction(grid, rho, G.exterior_d(grid, alpha, grid.d - 2))


def conjugated_path(J: np.ndarray, K: np.ndarray, t: float) -> np.ndarray:
    """(1 + tK) J (1 + tK)^{-1}; exactly an almost complex structure."""
    d = J.shape[0]
    S = G.constant_field_like(K, np.eye(d)) + t * K
    Sinv = np.moveaxis(np.linalg.inv(np.moveaxis(S, (0, 1), (-2, -1))), (-2, -1), (0, 1))
    return _endo_mul(S, J, Sinv)


def symplectic_path(J: np.ndarray, xi: np.ndarray, t: float) -> np.ndarray:
    """e^{tξ} J e^{−tξ} for a pointwise Hamiltonian matrix field ξ."""
    E = G.matrix_exp_field(t * xi)
    Einv = np.moveaxis(np.linalg.inv(np.moveaxis(E, (0, 1), (-2, -1))), (-2, -1), (0, 1))
    return _endo_mul(E, J, Einv)


def richardson(f, h: float):
    """Richardson-extrapolated central difference of a path-valued function."""
    d1 = (f(h) - f(-h)) / (2 * h)
    d2 = (f(h / 2) - f(-h / 2)) / h
    return (4.0 * d2 - d1) / 3.0


def _rel(resid: float, scale: float) -> float:
    return float(resid / max(scale, 1e-30))


# ---------------------------------------------------------------------------
# suites


def _seeded_instance(grid: TorusGrid, seed: int, amplitude: float):
    rho = G.random_band_limited(grid, "volume", seed, amplitude, band=G.acs_band(grid.m))
    J = G.random_band_limited(grid, "acs", seed + 1, amplitude)
    K = G.random_band_limited(grid, "endo", seed + 2, amplitude, band=G.acs_band(grid.m))
    v = G.random_band_limited(grid, "vector", seed + 3, amplitude, band=G.acs_band(grid.m))
    return rho, J, K, v


def verify_moment_identities(n: int, m: int, seed: int, amplitude: float = 0.1,
                             tol_scale: float = 1.0, cases: int = 3,
                             only: tuple[str, ...] | None = None) -> CheckReport:
    """Residuals for the pairing identity, the variation of the Ricci form,
    the moment-map identity, and the scalar-curvature moment map."""
    grid = TorusGrid(n, m)
    tols = suite_tolerances("ricci-moment", tol_scale * (10.0 if n >= 2 else 1.0))
    rep = CheckReport("ricci-moment", {
        "n": n, "m": m, "seed": seed, "amplitude": amplitude,
        "tol_scale": tol_scale, "cases": cases,
    })

    def wanted(name: str) -> bool:
        return only is None or name in only

    h = 1e-3
    for case in range(cases):
        s = seed + 101 * case
        rho, J, K, v = _seeded_instance(grid, s, amplitude)
        jhat = anticommute_project(J, K)
        conn = default_volume_connection(grid, rho)

        if wanted("lambda_pairing"):
            # pairing identity: ∫ Λ ∧ ι(v)ρ = ½ ∫ tr(Ĵ J L_v J) ρ
            lam = lambda_rho(grid, rho, J, jhat, conn)
            lhs = G.integrate(grid, G.wedge_f(grid, lam, G.interior_f(grid, v, rho, grid.d),
                                              1, grid.d - 1))
            rhs = G.integrate_against_volume(
                grid, trace_pairing(grid, jhat, J, G.lie_endo(grid, v, J)), rho)
            rep.add(f"lambda_pairing[{case}]", _rel(abs(lhs - rhs), abs(rhs) + 1.0),
                    tols["lambda_pairing"])

        jdot = _endo_mul(K, J) - _endo_mul(J, K)
        if wanted("ricci_variation_fd"):
            # variation of the Ricci form: d/dt Ric(ρ, J_t) = ½ dΛ(J, Ĵ)
            fd = richardson(lambda t: ricci_form(grid, rho, conjugated_path(J, K, t), conn).ric, h)
            direct = 0.5 * G.exterior_d(grid, lambda_rho(grid, rho, J, jdot, conn), 1)
            rep.add(f"ricci_variation_fd[{case}]",
                    _rel(np.max(np.abs(fd - direct)), np.max(np.abs(direct)) + 1.0),
                    tols["ricci_variation_fd"])

        if wanted("moment_map_fd"):
            # moment map: d/dt ∫ 2 Ric ∧ α = ½ ∫ tr(Ĵ J L_{v_α} J) ρ
            alpha = G.random_band_limited(grid, f"form:{grid.d - 2}", s + 5, amplitude,
                                          band=G.acs_band(grid.m))
            v_alpha = vector_from_alpha(grid, rho, alpha)

            def pair_with_alpha(t):
                ric_t = ricci_form(grid, rho, conjugated_path(J, K, t), conn).ric
                return G.integrate(grid, G.wedge_f(grid, 2.0 * ric_t, alpha, 2, grid.d - 2))

            fd_val = richardson(pair_with_alpha, h)
            rhs_val = G.integrate_against_volume(
                grid, trace_pairing(grid, jdot, J, G.lie_endo(grid, v_alpha, J)), rho)
            rep.add(f"moment_map_fd[{case}]", _rel(abs(fd_val - rhs_val), abs(rhs_val) + 1.0),
                    tols["moment_map_fd"])

        omega0 = G.standard_omega_field(grid)
        rho0 = G.standard_volume_field(grid)
        if wanted("scalar_moment_fd") or wanted("scalar_bracket"):
            Jc = G.random_acs_symplectic(grid, s + 7, amplitude)
            H = G.random_band_limited(grid, "scalar", s + 9, amplitude, band=G.acs_band(grid.m))
            vH = hamiltonian_vector_field(grid, omega0, H)

        if wanted("scalar_moment_fd"):
            # scalar-curvature moment map on the compatible slice
            xi = G.random_hamiltonian_matrix_field(grid, s + 8, amplitude)
            jdot_c = _endo_mul(xi, Jc) - _endo_mul(Jc, xi)

            def scalar_pairing(t):
                Jt = symplectic_path(Jc, xi, t)
                S = scalar_curvature(grid, omega0, Jt)
                return G.integrate_against_volume(grid, S * H, rho0)

            fd_s = richardson(scalar_pairing, h)
            rhs_s = G.integrate_against_volume(
                grid, trace_pairing(grid, jdot_c, Jc, G.lie_endo(grid, vH, Jc)), rho0)
            rep.add(f"scalar_moment_fd[{case}]", _rel(abs(fd_s - rhs_s), abs(rhs_s) + 1.0),
                    tols["scalar_moment_fd"])

        if wanted("scalar_bracket"):
            # Poisson-bracket form of the pairing: Ω(L_{v_F}J, L_{v_H}J) = ∫ S {F,H} ρ
            F = G.random_band_limited(grid, "scalar", s + 10, amplitude, band=G.acs_band(grid.m))
            vF = hamiltonian_vector_field(grid, omega0, F)
            lhs_b = omega_rho_pairing(grid, rho0, Jc,
                                      G.lie_endo(grid, vF, Jc), G.lie_endo(grid, vH, Jc))
            S = scalar_curvature(grid, omega0, Jc)
            w_mat = G.form_to_matrix(grid, omega0)
            poisson = np.einsum("i...,ij...,j...->...", vF, w_mat, vH)
            rhs_b = G.integrate_against_volume(grid, S * poisson, rho0)
            rep.add(f"scalar_bracket[{case}]", _rel(abs(lhs_b - rhs_b), abs(rhs_b) + 1.0),
                    tols["scalar_bracket"])
    return rep.finalize()


def verify_transformation_laws(n: int, m: int, seed: int, amplitude: float = 0.1,
                               tol_scale: float = 1.0, cases: int = 2) -> CheckReport:
    """Residuals for the conformal, naturality, Lie-derivative, two-parameter,
    closedness, type, and connection-independence laws of the Ricci form."""
    grid = TorusGrid(n, m)
    tols = suite_tolerances("ricci-laws", tol_scale * (10.0 if n >= 2 else 1.0))
    rep = CheckReport("ricci-laws", {
        "n": n, "m": m, "seed": seed, "amplitude": amplitude,
        "tol_scale": tol_scale, "cases": cases,
    })
    h = 1e-3
    for case in range(cases):
        s = seed + 211 * case
        rho, J, K, v = _seeded_instance(grid, s, amplitude)
        jhat = anticommute_project(J, K)
        conn = default_volume_connection(grid, rho)
        f = G.random_band_limited(grid, "scalar", s + 20, amplitude, band=G.acs_band(grid.m))

        # conformal transformation of Ric and Λ
        base = ricci_form(grid, rho, J, conn)
        rho_f = rho * np.exp(f)
        shifted = ricci_form(grid, rho_f, J)
        df_j = G.one_form_compose_j(G.exterior_d(grid, f[None], 0), J)
        expected = base.ric + 0.5 * G.exterior_d(grid, df_j, 1)
        rep.add(f"conformal_shift[{case}]",
                _rel(np.max(np.abs(shifted.ric - expected)), np.max(np.abs(expected)) + 1.0),
                tols["conformal_shift"])
        lam0 = lambda_rho(grid, rho, J, jhat, conn)
        lam1 = lambda_rho(grid, rho_f, J, jhat)
        df_jh = np.einsum("k...,ki...->i...", G.exterior_d(grid, f[None], 0), jhat)
        rep.add(f"lambda_conformal_shift[{case}]",
                _rel(np.max(np.abs(lam1 - (lam0 + df_jh))), np.max(np.abs(lam0)) + 1.0),
                tols["lambda_conformal_shift"])

        # closedness of every constructed instance
        rep.add(f"closedness[{case}]", base.closedness_residual, tols["closedness"])

        # connection independence: conformally flat vs compatible-metric route
        metric, _ = C.compatible_pair(grid, rho, J)
        conn2 = C.levi_civita(grid, metric)
        alt = ricci_form(grid, rho, J, conn2, connection_tag="compatible-metric")
        rep.add(f"connection_independence[{case}]",
                _rel(np.max(np.abs(alt.ric - base.ric)), np.max(np.abs(base.ric)) + 1.0),
                tols["connection_independence"])
        lam_alt = lambda_rho(grid, rho, J, jhat, conn2)
        rep.add(f"lambda_connection_independence[{case}]",
                _rel(np.max(np.abs(lam_alt - lam0)), np.max(np.abs(lam0)) + 1.0),
                tols["lambda_connection_independence"])

        # Λ(J, L_u J) = 2 ι(u) Ric − d f_u ∘ J + d f_{Ju}
        lam_lie = lambda_rho(grid, rho, J, G.lie_endo(grid, v, J), conn)
        fu = G.divergence_frho(grid, v, rho)
        Jv = np.einsum("ij...,j...->i...", J, v)
        fJu = G.divergence_frho(grid, Jv, rho)
        rhs = (2.0 * G.interior_f(grid, v, base.ric, 2)
               - G.one_form_compose_j(G.exterior_d(grid, fu[None], 0), J)
               + G.exterior_d(grid, fJu[None], 0))
        rep.add(f"lambda_lie[{case}]",
                _rel(np.max(np.abs(lam_lie - rhs)), np.max(np.abs(rhs)) + 1.0),
                tols["lambda_lie"])

        # pairing-divergence identity
        w = G.random_band_limited(grid, "vector", s + 21, amplitude, band=G.acs_band(grid.m))
        fv, fw = fu, G.divergence_frho(grid, w, rho)
        fJv = fJu
        Jw = np.einsum("ij...,j...->i...", J, w)
        fJw = G.divergence_frho(grid, Jw, rho)
        lhs_p = omega_rho_pairing(grid, rho, J,
                                  G.lie_endo(grid, v, J), G.lie_endo(grid, w, J))
        ric_uv = np.einsum("i...,ij...,j...->...", v, G.form_to_matrix(grid, base.ric), w)
        rhs_p = G.integrate_against_volume(grid, 2.0 * ric_uv + fv * fJw - fJv * fw, rho)
        rep.add(f"pairing_divergence[{case}]", _rel(abs(lhs_p - rhs_p), abs(rhs_p) + 1.0),
                tols["pairing_divergence"])

        # two-parameter mixed-variation identity:
        # ∂_s Λ(J, ∂_t J) − ∂_t Λ(J, ∂_s J) + ½ d tr((∂_s J) J (∂_t J)) = 0
        K2 = G.random_band_limited(grid, "endo", s + 22, amplitude, band=G.acs_band(grid.m))

        def path2(su, tu):
            Scomb = (G.constant_field_like(K, np.eye(grid.d)) + su * K + tu * K2)
            Sinv = np.moveaxis(np.linalg.inv(np.moveaxis(Scomb, (0, 1), (-2, -1))), (-2, -1), (0, 1))
            Jst = _endo_mul(Scomb, J, Sinv)
            dt = _endo_mul(K2, Sinv)
            ds = _endo_mul(K, Sinv)
            return Jst, _endo_mul(dt, Jst) - _endo_mul(Jst, dt), \
                _endo_mul(ds, Jst) - _endo_mul(Jst, ds)

        def term_s(t_of_s):
            Jst, jt, _ = path2(t_of_s, 0.0)
            return lambda_rho(grid, rho, Jst, jt, conn)

        def term_t(t_of_t):
            Jst, _, js = path2(0.0, t_of_t)
            return lambda_rho(grid, rho, Jst, js, conn)

        d_s = richardson(term_s, h)
        d_t = richardson(term_t, h)
        _, jt0, js0 = path2(0.0, 0.0)
        # ½ d tr((∂_s J) J (∂_t J)); trace_pairing already carries the ½
        closing = G.exterior_d(grid, trace_pairing(grid, js0, J, jt0)[None], 0)
        resid2 = d_s - d_t + closing
        rep.add(f"lambda_two_parameter[{case}]",
                _rel(np.max(np.abs(resid2)), np.max(np.abs(closing)) + 1.0),
                tols["lambda_two_parameter"])

    # naturality under an exact affine map; small amplitude keeps sheared
    # spectral tails below the fold so the discrete identity is exact
    amp_nat = min(amplitude, 1e-3)
    rho, J, K, v = _seeded_instance(grid, seed + 900, amp_nat)
    jhat_nat = anticommute_project(J, K)
    conn_nat = default_volume_connection(grid, rho)
    base = ricci_form(grid, rho, J, conn_nat)
    A = np.eye(grid.d, dtype=int)
    A[0, 1] = 1  # SL(2n, Z) shear
    phi = G.AffineMap(A)
    vol_tol = 1e-9 if m >= 32 else 1e-7
    lhs_map = G.pullback(grid, "form:2", base.ric, phi)
    conn_pulled = C.ConnectionField(grid, G.pullback(grid, "christoffel",
                                                     conn_nat.gamma, phi))
    rho_pulled = G.pullback(grid, f"form:{grid.d}", rho, phi)
    J_pulled = G.pullback(grid, "endo", J, phi)
    rhs_map = ricci_form(grid, rho_pulled, J_pulled, conn_pulled,
                         "pulled-back", volume_tol=vol_tol).ric
    scale_nat = float(np.max(np.abs(rhs_map)))
    rep.add("naturality_affine", _rel(np.max(np.abs(lhs_map - rhs_map)), scale_nat + 1.0),
            tols["naturality_affine"])
    lam_nat = lambda_rho(grid, rho, J, jhat_nat, conn_nat)
    lam_pulled = lambda_rho(grid, rho_pulled, J_pulled,
                            G.pullback(grid, "endo", jhat_nat, phi), conn_pulled,
                            volume_tol=vol_tol)
    rep.add("lambda_naturality_affine",
            _rel(np.max(np.abs(G.pullback(grid, "form:1", lam_nat, phi) - lam_pulled)),
                 float(np.max(np.abs(lam_pulled))) + 1.0),
            tols["naturality_affine"])

    if n == 1:
        u = G.random_band_limited(grid, "vector", seed + 901, 0.04, band=2)
        psi = G.DisplacementMap(u)
        lhs_d = G.pullback(grid, "form:2", base.ric, psi)
        rhs_d = ricci_form(grid, G.pullback(grid, f"form:{grid.d}", rho, psi),
                           G.pullback(grid, "endo", J, psi)).ric
        rep.add("naturality_displacement", _rel(np.max(np.abs(lhs_d - rhs_d)),
                                                np.max(np.abs(rhs_d)) + 1.0),
                tols["naturality_displacement"])

    # Kähler slice: λ vanishes for the Levi-Civita connection when dω = 0
    J0 = G.standard_j_field(grid)
    hpot = G.random_band_limited(grid, "scalar", seed + 902, amplitude, band=G.acs_band(grid.m))
    dh_j = G.one_form_compose_j(G.exterior_d(grid, hpot[None], 0), J0)
    omega_h = G.standard_omega_field(grid) + 0.5 * G.exterior_d(grid, dh_j, 1)
    metric_h = np.einsum("ik...,kj...->ij...", G.form_to_matrix(grid, omega_h), J0)
    lam_k = lambda_one_form(grid, C.levi_civita(grid, metric_h), J0)
    rep.add("kahler_lambda_vanishes", float(np.max(np.abs(lam_k))), tols["kahler_lambda_vanishes"])
    Jc = G.random_acs_symplectic(grid, seed + 903, amplitude)
    metric_c = np.einsum("ik...,kj...->ij...", G.form_to_matrix(grid, G.standard_omega_field(grid)), Jc)
    lam_c = lambda_one_form(grid, C.levi_civita(grid, metric_c), Jc)
    rep.add("kahler_lambda_vanishes_compatible", float(np.max(np.abs(lam_c))),
            tols["kahler_lambda_vanishes"])

    # integrable pullback: Ricci form has no (2,0)+(0,2) part; pairs to zero
    # against closed complements (vanishing real first Chern class)
    u2 = G.random_band_limited(grid, "vector", seed + 904, 0.05, band=max(1, G.acs_band(grid.m)))
    Jp = G.pullback(grid, "endo", J0, G.DisplacementMap(u2))
    ric_p = ricci_form(grid, G.standard_volume_field(grid) * np.exp(
        2 * G.random_band_limited(grid, "scalar", seed + 905, amplitude, band=G.acs_band(grid.m))),
        Jp)
    off = (G.pq_project_f(grid, ric_p.ric, 2, Jp, 2, 0)
           + G.pq_project_f(grid, ric_p.ric, 2, Jp, 0, 2))
    rep.add("integrable_11", _rel(np.max(np.abs(off)), np.max(np.abs(ric_p.ric)) + 1.0),
            tols["integrable_11"])
    if grid.d == 2:
        # closed 0-forms are constants: the pairing is ∫ Ric itself
        pair = G.integrate(grid, ric_p.ric)
        scale = 1.0
    else:
        # seeded exact complement plus the constant harmonic part
        alpha_c = G.random_band_limited(grid, f"form:{grid.d - 3}", seed + 906, amplitude)
        closed = G.exterior_d(grid, alpha_c, grid.d - 3)
        closed = closed + G.random_band_limited(grid, f"form:{grid.d - 2}", seed + 907, 0.0) \
            + np.mean(G.random_band_limited(grid, f"form:{grid.d - 2}", seed + 907, amplitude),
                      axis=tuple(range(1, grid.d + 1)), keepdims=True)
        pair = G.integrate(grid, G.wedge_f(grid, ric_p.ric, closed, 2, grid.d - 2))
        scale = float(np.max(np.abs(closed)))
    rep.add("cohomology_pairing", _rel(abs(pair), scale + 1.0), tols["cohomology_pairing"])
    return rep.finalize()

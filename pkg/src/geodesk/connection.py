"""Connections and curvature on sampled tori: compatible metrics from (ρ, J),
Levi-Civita data, Nijenhuis tensors, and the volume/Hermitian special
connections used by the Ricci-form machinery."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .grid import (TorusGrid, constant_field, form_from_matrix, metric_inverse,
                   metric_sqrt_det, standard_volume_field)
from .tensor import vol_sign


def j_star_metric(g0: np.ndarray, J: np.ndarray) -> np.ndarray:
    """(J*g)(u, v) = g(Ju, Jv)."""
    return np.einsum("ki...,kl...,lj...->ij...", J, g0, J)


def metric_volume_form(grid: TorusGrid, g: np.ndarray) -> np.ndarray:
    """Positive volume form of a metric as a top-degree coefficient field."""
    return standard_volume_field(grid) * metric_sqrt_det(g)


def compatible_pair(grid: TorusGrid, rho: np.ndarray, J: np.ndarray,
                    g0: np.ndarray | None = None, tol: float = 1e-10):
    """Metric and 2-form compatible with J whose volume form is exactly ρ.

    Builds g = (ρ/dvol)^{1/n} (g0 + J*g0) and ω = g(J·, ·); raises if the
    result misses compatibility or the volume normalization.
    """
    rho_density = vol_sign(grid.n) * rho[0]
    if np.any(rho_density <= 0):
        raise DomainError("compatible_pair: volume form must be positive")
    if g0 is None:
        g0 = constant_field(grid, np.eye(grid.d))
    _check_spd(g0, "compatible_pair")
    gJ = g0 + j_star_metric(g0, J)
    scale = (rho_density / metric_sqrt_det(gJ)) ** (1.0 / grid.n)
    g = scale * gJ
    omega_mat = np.einsum("ki...,kj...->ij...", J, g)
    asym = np.max(np.abs(omega_mat + np.swapaxes(omega_mat, 0, 1)))
    if asym > tol * max(1.0, float(np.max(np.abs(omega_mat)))):
        raise DomainError(f"compatible_pair: ω not antisymmetric ({asym:.2e})")
    vol_resid = np.max(np.abs(metric_sqrt_det(g) - rho_density))
    if vol_resid > tol * max(1.0, float(np.max(rho_density))):
        raise DomainError(f"compatible_pair: volume residual {vol_resid:.2e}")
    return g, form_from_matrix(grid, omega_mat)


@dataclass(frozen=True)
class ConnectionField:
    """Christoffel data Γ^k_{ij} with residuals recorded at construction."""

    grid: TorusGrid
    gamma: np.ndarray
    flags: dict = field(default_factory=dict)

    def torsion(self) -> np.ndarray:
        return self.gamma - np.swapaxes(self.gamma, 1, 2)

    @property
    def torsion_free(self) -> bool:
        return float(np.max(np.abs(self.torsion()))) <= 1e-9


@dataclass(frozen=True)
class CurvatureField:
    """R^l_{kij} for R(u,v)w = R^l_{kij} u^i v^j w^k ∂_l."""

    grid: TorusGrid
    riem: np.ndarray

    def first_bianchi_residual(self) -> float:
        cyc = self.riem + np.einsum("lijk...->lkij...", self.riem) \
            + np.einsum("ljki...->lkij...", self.riem)
        return float(np.max(np.abs(cyc)) / max(1.0, np.max(np.abs(self.riem))))


def _check_spd(g: np.ndarray, what: str) -> None:
    sym = np.moveaxis(0.5 * (g + np.swapaxes(g, 0, 1)), (0, 1), (-2, -1))
    try:
        np.linalg.cholesky(sym)
    except np.linalg.LinAlgError:
        raise DomainError(f"{what}: metric must be positive definite") from None


def levi_civita(grid: TorusGrid, g: np.ndarray) -> ConnectionField:
    _check_spd(g, "levi_civita")
    if float(np.ptp(g.reshape(g.shape[:2] + (-1,)), axis=-1).max()) == 0.0:
        zero = np.zeros((grid.d,) * 3 + grid.shape)
        return ConnectionField(grid, zero, {"nabla_g": 0.0, "torsion": 0.0})
    ginv = metric_inverse(g)
    dg = grid.derivs(g)  # dg[l, i, j] = ∂_l g_{ij}
    gamma = 0.5 * np.einsum("kl...,ijl...->kij...", ginv, _sym_sum(dg))
    conn = ConnectionField(grid, gamma)
    resid = nabla_metric_residual(grid, conn, g)
    flags = {"nabla_g": resid, "torsion": float(np.max(np.abs(conn.torsion())))}
    return ConnectionField(grid, gamma, flags)


def _sym_sum(dg: np.ndarray) -> np.ndarray:
    """∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij}, indexed [i, j, l]."""
    return (np.einsum("ijl...->ijl...", dg)
            + np.einsum("jil...->ijl...", dg)
            - np.einsum("lij...->ijl...", dg))


def curvature(grid: TorusGrid, conn: ConnectionField) -> CurvatureField:
    cached = getattr(conn, "_curvature", None)
    if cached is not None:
        return cached
    gamma = conn.gamma
    if float(np.max(np.abs(gamma))) == 0.0:
        out = CurvatureField(grid, np.zeros((grid.d,) * 4 + grid.shape))
        object.__setattr__(conn, "_curvature", out)
        return out
    d = grid.d
    dgamma = grid.derivs(gamma).reshape((d, d, d, d, -1))  # [a, k, i, j]
    gam = gamma.reshape((d, d, d, -1))
    gg = np.ascontiguousarray(np.einsum("limx,mjkx->lkijx", gam, gam, optimize=True))
    riem = np.ascontiguousarray(dgamma.transpose(1, 3, 0, 2, 4))
    riem -= dgamma.transpose(1, 3, 2, 0, 4)
    riem += gg
    riem -= gg.transpose(0, 1, 3, 2, 4)
    out = CurvatureField(grid, riem.reshape((d, d, d, d) + grid.shape))
    object.__setattr__(conn, "_curvature", out)
    return out


# --- covariant derivatives (derivative index first) ---


def cov_scalar(grid: TorusGrid, conn: ConnectionField, f: np.ndarray) -> np.ndarray:
    return grid.derivs(f)


def cov_vector(grid: TorusGrid, conn: ConnectionField, v: np.ndarray) -> np.ndarray:
    """out[k, i] = (∇_k v)^i."""
    return grid.derivs(v) + np.einsum("ikm...,m...->ki...", conn.gamma, v)


def cov_oneform(grid: TorusGrid, conn: ConnectionField, lam: np.ndarray) -> np.ndarray:
    """out[k, i] = (∇_k λ)_i."""
    return grid.derivs(lam) - np.einsum("mki...,m...->ki...", conn.gamma, lam)


def cov_endo(grid: TorusGrid, conn: ConnectionField, E: np.ndarray) -> np.ndarray:
    """out[k, i, j] = (∇_k E)^i_j."""
    return (grid.derivs(E)
            + np.einsum("ikm...,mj...->kij...", conn.gamma, E)
            - np.einsum("mkj...,im...->kij...", conn.gamma, E))


def cov_bilinear(grid: TorusGrid, conn: ConnectionField, b: np.ndarray) -> np.ndarray:
    """out[k, i, j] = (∇_k b)_{ij} for a (0,2)-tensor."""
    return (grid.derivs(b)
            - np.einsum("mki...,mj...->kij...", conn.gamma, b)
            - np.einsum("mkj...,im...->kij...", conn.gamma, b))


def cov_tm_two_form(grid: TorusGrid, conn: ConnectionField, tau: np.ndarray) -> np.ndarray:
    """out[k, a, i, j] = (∇_k τ)^a_{ij} for TM-valued 2-forms τ[a, i, j]."""
    return (grid.derivs(tau)
            + np.einsum("akm...,mij...->kaij...", conn.gamma, tau)
            - np.einsum("mki...,amj...->kaij...", conn.gamma, tau)
            - np.einsum("mkj...,aim...->kaij...", conn.gamma, tau))


def cov_volume_residual(grid: TorusGrid, conn: ConnectionField, rho: np.ndarray) -> float:
    r = rho[0]
    out = grid.derivs(r) - r * np.einsum("aka...->k...", conn.gamma)
    return float(np.max(np.abs(out)) / max(1.0, np.max(np.abs(r))))


def nabla_metric_residual(grid: TorusGrid, conn: ConnectionField, g: np.ndarray) -> float:
    return float(np.max(np.abs(cov_bilinear(grid, conn, g)))
                 / max(1.0, np.max(np.abs(g))))


def second_cov_endo(grid: TorusGrid, conn: ConnectionField, E: np.ndarray):
    """(∇²E)[l, k, i, j] = (∇_l ∇ E)_k{}^i{}_j, with ∇E treated as a tensor."""
    dE = cov_endo(grid, conn, E)  # [k, i, j]
    ddE = (grid.derivs(dE)
           + np.einsum("ilm...,kmj...->lkij...", conn.gamma, dE)
           - np.einsum("mlk...,mij...->lkij...", conn.gamma, dE)
           - np.einsum("mlj...,kim...->lkij...", conn.gamma, dE))
    return dE, ddE


def rough_laplacian_endo(grid: TorusGrid, conn: ConnectionField, g: np.ndarray,
                         E: np.ndarray) -> np.ndarray:
    """∇*∇E = −g^{lk}(∇²E)_{lk} (nonnegative convention)."""
    _, ddE = second_cov_endo(grid, conn, E)
    return -np.einsum("lk...,lkij...->ij...", metric_inverse(g), ddE)


def gaussian_curvature(grid: TorusGrid, g: np.ndarray) -> np.ndarray:
    """K = g(R(∂1, ∂2)∂2, ∂1)/det g on a 2-dimensional torus."""
    if grid.d != 2:
        raise DomainError("gaussian_curvature needs a 2-dimensional torus")
    R = curvature(grid, levi_civita(grid, g)).riem
    num = np.einsum("lm...,l...->m...", g, R[:, 1, 0, 1])[0]
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    return num / det


def nijenhuis(grid: TorusGrid, J: np.ndarray, conn: ConnectionField | None = None):
    """Nijenhuis tensor N[k, i, j] = N(∂_i, ∂_j)^k, by two routes.

    Route one uses spectral derivatives of J directly; route two uses the
    torsion-free connection formula.  Returns (N, agreement residual).
    """
    dJ = grid.derivs(J)  # dJ[m, k, j] = ∂_m J^k_j
    # frame/bracket route: J^m_i ∂_m J^k_j − J^m_j ∂_m J^k_i + J^k_m(∂_j J^m_i − ∂_i J^m_j)
    n_bracket = (np.einsum("mi...,mkj...->kij...", J, dJ)
                 - np.einsum("mj...,mki...->kij...", J, dJ)
                 + np.einsum("km...,jmi...->kij...", J, dJ)
                 - np.einsum("km...,imj...->kij...", J, dJ))
    if conn is None:
        conn = ConnectionField(grid, np.zeros((grid.d,) * 3 + grid.shape))
    if not conn.torsion_free:
        raise DomainError("nijenhuis: connection must be torsion-free")
    nJ = cov_endo(grid, conn, J)  # [m, k, j] = (∇_m J)^k_j
    n_conn = (np.einsum("ikm...,mj...->kij...", nJ, J)
              + np.einsum("mi...,mkj...->kij...", J, nJ)
              - np.einsum("jkm...,mi...->kij...", nJ, J)
              - np.einsum("mj...,mki...->kij...", J, nJ))
    resid = float(np.max(np.abs(n_bracket - n_conn)) / max(1.0, np.max(np.abs(n_bracket))))
    return n_bracket, resid


def special_connections(grid: TorusGrid, rho: np.ndarray, J: np.ndarray,
                        omega: np.ndarray, g: np.ndarray) -> dict:
    """The volume-and-J connection, the Hermitian tilt, and the symplectic
    torsion-free correction of the Levi-Civita connection of g.

    Returns {"lc", "hermitian", "volume", "symplectic"} ConnectionFields with
    verification residuals in their flags.
    """
    lc = levi_civita(grid, g)
    nJ = cov_endo(grid, lc, J)  # [i, m, j] = (∇_i J)^m_j

    # hermitian tilt: Γ̃ = Γ − ½ J (∇J)
    gamma_t = lc.gamma - 0.5 * np.einsum("km...,imj...->kij...", J, nJ)
    tilde = ConnectionField(grid, gamma_t, {
        "nabla_J": _endo_cov_residual(grid, gamma_t, J),
    })

    # volume connection: preserves ρ and J, torsion −¼ N_J
    alpha = 0.5 * np.einsum("km...,kmj...->j...", J, nJ)
    alpha_j = np.einsum("m...,mi...->i...", alpha, J)
    d = grid.d
    eye = constant_field(grid, np.eye(d))
    corr = (np.einsum("i...,kj...->kij...", alpha, eye)
            + np.einsum("j...,ki...->kij...", alpha, eye)
            - np.einsum("i...,kj...->kij...", alpha_j, J)
            - np.einsum("j...,ki...->kij...", alpha_j, J)) / (2 * grid.n + 2)
    gamma_h = (lc.gamma
               - 0.5 * np.einsum("km...,imj...->kij...", J, nJ)
               - 0.25 * np.einsum("km...,jmi...->kij...", J, nJ)
               - 0.25 * np.einsum("lj...,lki...->kij...", J, nJ)
               + corr)
    hat = ConnectionField(grid, gamma_h)
    n_tensor, _ = nijenhuis(grid, J, lc)
    tor = hat.torsion()
    scale = max(1.0, float(np.max(np.abs(n_tensor))))
    hat = ConnectionField(grid, gamma_h, {
        "nabla_rho": cov_volume_residual(grid, hat, rho),
        "nabla_J": _endo_cov_residual(grid, gamma_h, J),
        "torsion_vs_nijenhuis": float(np.max(np.abs(tor + 0.25 * n_tensor)) / scale),
    })

    # symplectic correction: torsion-free, preserves ω when dω = 0
    gamma_o = lc.gamma - (1.0 / 3.0) * np.einsum("km...,imj...->kij...", J, nJ) \
        - (1.0 / 3.0) * np.einsum("km...,jmi...->kij...", J, nJ)
    ring = ConnectionField(grid, gamma_o)
    from .grid import form_to_matrix
    w_mat = form_to_matrix(grid, omega)
    ring = ConnectionField(grid, gamma_o, {
        "torsion": float(np.max(np.abs(ring.torsion()))),
        "nabla_omega": float(np.max(np.abs(cov_bilinear(grid, ring, w_mat)))
                             / max(1.0, np.max(np.abs(w_mat)))),
    })
    return {"lc": lc, "hermitian": tilde, "volume": hat, "symplectic": ring}


def _endo_cov_residual(grid: TorusGrid, gamma: np.ndarray, E: np.ndarray) -> float:
    conn = ConnectionField(grid, gamma)
    return float(np.max(np.abs(cov_endo(grid, conn, E))) / max(1.0, np.max(np.abs(E))))


def conformally_flat_volume_connection(grid: TorusGrid, rho: np.ndarray) -> ConnectionField:
    """Levi-Civita connection of (ρ/dx)^{1/n} δ; torsion-free and ρ-preserving."""
    density = vol_sign(grid.n) * rho[0]
    if np.any(density <= 0):
        raise DomainError("volume form must be positive")
    if float(np.ptp(density)) == 0.0:
        zero = np.zeros((grid.d,) * 3 + grid.shape)
        return ConnectionField(grid, zero, {"nabla_g": 0.0, "torsion": 0.0})
    g = constant_field(grid, np.eye(grid.d)) * density ** (1.0 / grid.n)
    return levi_civita(grid, g)

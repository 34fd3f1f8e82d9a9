"""The orbit of linear complex structures on R^{2n} and its symplectic data.

The orbit is { g J0 g^{-1} : det g = 1 }; tangent vectors at J anticommute
with J.  Movement along the orbit is by conjugation with matrix exponentials,
which stays on the orbit to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UsageError
from .tensor import LinCS, standard_j, standard_omega_matrix

ANTICOMMUTE_TOL = 1e-12


def expm(a: np.ndarray, order: int = 18) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring Taylor series."""
    a = np.asarray(a, dtype=float)
    norm = np.linalg.norm(a, ord=np.inf)
    squarings = max(0, int(np.ceil(np.log2(max(norm, 1e-300) / 0.25))))
    b = a / (2.0 ** squarings)
    out = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, order + 1):
        term = term @ b / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def project_traceless(xi: np.ndarray) -> np.ndarray:
    d = xi.shape[0]
    return xi - np.trace(xi) / d * np.eye(d)


def random_sl_element(rng: np.random.Generator, n: int, scale: float = 0.3) -> np.ndarray:
    return expm(project_traceless(scale * rng.standard_normal((2 * n, 2 * n))))


def random_lincs(rng: np.random.Generator, n: int, scale: float = 0.3) -> LinCS:
    g = random_sl_element(rng, n, scale)
    return LinCS(g @ standard_j(n) @ np.linalg.inv(g))


@dataclass(frozen=True)
class TangentJ:
    """Tangent vector at J: a matrix anticommuting with J."""

    base: LinCS
    jhat: np.ndarray

    def __post_init__(self):
        jh = np.asarray(self.jhat, dtype=float)
        object.__setattr__(self, "jhat", jh)
        J = self.base.matrix
        resid = np.max(np.abs(jh @ J + J @ jh))
        if resid > ANTICOMMUTE_TOL:
            raise DomainError(f"tangent anticommutation residual {resid:.3e}")


def tangent_project(J: LinCS, A: np.ndarray) -> TangentJ:
    """Project a matrix onto the tangent space at J: A ↦ ½(A + J A J)."""
    A = np.asarray(A, dtype=float)
    Jm = J.matrix
    if A.shape != Jm.shape:
        raise UsageError("tangent_project: dimension mismatch")
    return TangentJ(J, 0.5 * (A + Jm @ A @ Jm))


def bracket_tangent(J: LinCS, xi: np.ndarray) -> TangentJ:
    """[ξ, J], the orbit direction generated by ξ."""
    Jm = J.matrix
    return TangentJ(J, xi @ Jm - Jm @ xi)


def tau(J: LinCS, jhat1: TangentJ, jhat2: TangentJ) -> float:
    """Orbit symplectic form τ_J(Ĵ1, Ĵ2) = ½ tr(Ĵ1 J Ĵ2)."""
    if jhat1.base is not J and not np.array_equal(jhat1.base.matrix, J.matrix):
        raise UsageError("tau: first tangent vector has a different base point")
    if jhat2.base is not J and not np.array_equal(jhat2.base.matrix, J.matrix):
        raise UsageError("tau: second tangent vector has a different base point")
    return 0.5 * float(np.trace(jhat1.jhat @ J.matrix @ jhat2.jhat))


def pairing(jhat1: TangentJ, jhat2: TangentJ) -> float:
    """Symmetric pairing ½ tr(Ĵ1 Ĵ2); indefinite for n > 1."""
    return 0.5 * float(np.trace(jhat1.jhat @ jhat2.jhat))


def moment_residual(J: LinCS, xi: np.ndarray, jhat: TangentJ) -> float:
    """|τ_J([ξ,J], Ĵ) + tr(ξ Ĵ)|; zero iff μ(J) = −J generates the action."""
    xi = np.asarray(xi, dtype=float)
    if abs(np.trace(xi)) > 1e-9:
        raise UsageError("moment_residual: ξ must be traceless")
    lhs = tau(J, bracket_tangent(J, xi), jhat)
    return abs(lhs + float(np.trace(xi @ jhat.jhat)))


@dataclass(frozen=True)
class SiegelPoint:
    """Z = X + iY with X, Y symmetric and Y positive definite."""

    Z: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=complex)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "n", Z.shape[0])
        if np.max(np.abs(Z - Z.T)) > 1e-10:
            raise DomainError("Siegel point must be symmetric")
        if np.linalg.eigvalsh(Z.imag).min() <= 0:
            raise DomainError("imaginary part must be positive definite")

    @property
    def X(self) -> np.ndarray:
        return self.Z.real

    @property
    def Y(self) -> np.ndarray:
        return self.Z.imag


def siegel_to_acs(Z: SiegelPoint) -> LinCS:
    """Block-matrix complex structure of a Siegel point; lands in the
    ω0-compatible locus (checked)."""
    X, Y = Z.X, Z.Y
    Yinv = np.linalg.inv(Y)
    J = np.block([[X @ Yinv, -Y - X @ Yinv @ X],
                  [Yinv, -Yinv @ X]])
    out = LinCS(J)
    resid = compatibility_residual(out)
    if resid > 1e-9:
        raise DomainError(f"siegel_to_acs: compatibility residual {resid:.3e}")
    return out


def compatibility_residual(J: LinCS) -> float:
    """Residual of J*ω0 = ω0 plus positivity defect of ω0(·, J·)."""
    W = standard_omega_matrix(J.n)
    Jm = J.matrix
    resid = np.max(np.abs(Jm.T @ W @ Jm - W))
    gram = W @ Jm
    gram = 0.5 * (gram + gram.T)
    lam = np.linalg.eigvalsh(gram).min()
    return float(resid + max(0.0, -lam))


def symplectic_action(g: np.ndarray, Z: SiegelPoint) -> SiegelPoint:
    """g_* Z = (A Z + B)(C Z + D)^{-1} for g = [[A, B], [C, D]]."""
    n = Z.n
    A, B = g[:n, :n], g[:n, n:]
    C, D = g[n:, :n], g[n:, n:]
    W = (A @ Z.Z + B) @ np.linalg.inv(C @ Z.Z + D)
    return SiegelPoint(0.5 * (W + W.T))


def random_symplectic(rng: np.random.Generator, n: int, scale: float = 0.3) -> np.ndarray:
    """exp(ξ) with ξ in sp(2n): ξᵀΩ + Ωξ = 0."""
    W = standard_omega_matrix(n)
    S = scale * rng.standard_normal((2 * n, 2 * n))
    S = 0.5 * (S + S.T)
    # ξ = Ω^{-1} S is Hamiltonian for symmetric S
    return expm(np.linalg.solve(W, S))


def siegel_metric(Z: SiegelPoint, Zhat: np.ndarray) -> float:
    """|Ẑ|² = tr((Y^{-1} X̂)² + (Y^{-1} Ŷ)²)."""
    Zhat = np.asarray(Zhat, dtype=complex)
    if np.max(np.abs(Zhat - Zhat.T)) > 1e-10:
        raise UsageError("siegel_metric: tangent matrix must be symmetric")
    Yinv = np.linalg.inv(Z.Y)
    a = Yinv @ Zhat.real
    b = Yinv @ Zhat.imag
    return float(np.trace(a @ a + b @ b).real)


def siegel_pushforward_fd(Z: SiegelPoint, Zhat: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite-difference push-forward of siegel_to_acs along Ẑ."""
    Zp = SiegelPoint(Z.Z + step * Zhat)
    Zm = SiegelPoint(Z.Z - step * Zhat)
    return (siegel_to_acs(Zp).matrix - siegel_to_acs(Zm).matrix) / (2.0 * step)


def random_siegel_point(rng: np.random.Generator, n: int, scale: float = 0.4) -> SiegelPoint:
    X = scale * rng.standard_normal((n, n))
    X = 0.5 * (X + X.T)
    A = scale * rng.standard_normal((n, n))
    Y = np.eye(n) + A @ A.T
    return SiegelPoint(X + 1j * Y)

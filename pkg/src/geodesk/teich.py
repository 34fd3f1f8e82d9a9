"""Weil-Petersson form and pairing on Ricci-flat torus structures, dimension
counts by Fourier-block ranks, the symplectic connection over the space of
symplectic forms, and the correspondence between infinitesimal complex
structures and (n−1,1)-forms against a holomorphic volume form."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import combi
from . import connection as C
from . import grid as G
from . import hodge as H
from . import ricci as Ric
from .errors import DomainError, UsageError
from .grid import TorusGrid
from .report import CheckReport, suite_tolerances
from .tensor import standard_j, vol_sign


def c_const(n: int) -> complex:
    """(−1)^{n(n+1)/2} i^n: 1 for even n, −i for odd n."""
    return (-1.0) ** (n * (n + 1) // 2) * (1j) ** n


# ---------------------------------------------------------------------------
# base point and tangent data


@dataclass(frozen=True)
class FlatBase:
    """The flat Ricci-flat Kähler base (ρ, J0, ω0) with volume (2π)^{2n}."""

    grid: TorusGrid
    inst: H.KahlerInstance = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "inst", H.flat_instance(self.grid))

    @property
    def J(self):
        return self.inst.J

    @property
    def omega(self):
        return self.inst.omega

    @property
    def rho(self):
        return self.inst.rho


def fg_decompose(base: FlatBase, jhat: np.ndarray, dbar_tol: float = 1e-7):
    """Unique mean-zero (f, g) with Λ(J, Ĵ) = −df∘J + dg.

    Requires ∂̄Ĵ ≈ 0; solved by Δg = d*Λ and Δf = d*(Λ∘J).
    """
    grid = base.grid
    if float(np.ptp(jhat.reshape(jhat.shape[0] * jhat.shape[1], -1), axis=-1).max()) == 0.0:
        # constant tangent directions have Λ = 0 and the unique split is (0, 0)
        return np.zeros(grid.shape), np.zeros(grid.shape)
    dbar = float(np.max(np.abs(H.dbar_q1(base.inst, jhat))))
    if dbar > dbar_tol * max(1.0, float(np.max(np.abs(jhat)))):
        raise DomainError(f"fg_decompose: ∂̄Ĵ residual {dbar:.2e}")
    lam = Ric.lambda_rho(grid, base.rho, base.J, jhat)
    f, g = H.fg_split(grid, base.inst, lam)
    recon = -G.one_form_compose_j(G.exterior_d(grid, f[None], 0), base.J) \
        + G.exterior_d(grid, g[None], 0)
    resid = float(np.max(np.abs(lam - recon)))
    if resid > 1e-6 * max(1.0, float(np.max(np.abs(lam)))):
        raise DomainError(f"fg_decompose: inconsistent Λ (residual {resid:.2e})")
    return f, g


@dataclass(frozen=True)
class WPVector:
    """Tangent data at the flat base: Ĵ with ∂̄Ĵ ≈ 0 and its (f, g) split."""

    base: FlatBase
    jhat: np.ndarray
    f: np.ndarray = field(init=False)
    g: np.ndarray = field(init=False)

    def __post_init__(self):
        f, g = fg_decompose(self.base, self.jhat)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)


def wp_form(x1: WPVector, x2: WPVector) -> float:
    """Ω_J(Ĵ1, Ĵ2) = ∫ (½ tr(Ĵ1 J Ĵ2) − f1 g2 + f2 g1) ρ."""
    if x1.base.grid != x2.base.grid:
        raise UsageError("wp_form: mismatched bases")
    base = x1.base
    tr = Ric.trace_pairing(base.grid, x1.jhat, base.J, x2.jhat)
    dens = tr - x1.f * x2.g + x2.f * x1.g
    return G.integrate_against_volume(base.grid, dens, base.rho)


def wp_inner(x1: WPVector, x2: WPVector) -> float:
    """<Ĵ1, Ĵ2> = ∫ (½ tr(Ĵ1 Ĵ2) − f1 f2 − g1 g2) ρ."""
    if x1.base.grid != x2.base.grid:
        raise UsageError("wp_inner: mismatched bases")
    base = x1.base
    tr = 0.5 * np.einsum("ik...,ki...->...", x1.jhat, x2.jhat)
    dens = tr - x1.f * x2.f - x1.g * x2.g
    return G.integrate_against_volume(base.grid, dens, base.rho)


# ---------------------------------------------------------------------------
# constant bases of tangent spaces


def anticommuting_basis(n: int) -> list[np.ndarray]:
    """Real basis of matrices anticommuting with J0: blocks [[P, Q], [Q, −P]]."""
    out = []
    for (r, c) in np.ndindex(n, n):
        P = np.zeros((n, n))
        P[r, c] = 1.0
        out.append(np.block([[P, np.zeros((n, n))], [np.zeros((n, n)), -P]]))
        Q = np.zeros((n, n))
        Q[r, c] = 1.0
        out.append(np.block([[np.zeros((n, n)), Q], [Q, np.zeros((n, n))]]))
    return out


def selfadjoint_compatible_basis(n: int) -> list[np.ndarray]:
    """Symmetric anticommuting matrices: dimension n² + n."""
    out = []
    for r in range(n):
        for c in range(r, n):
            P = np.zeros((n, n))
            P[r, c] = P[c, r] = 1.0
            out.append(np.block([[P, np.zeros((n, n))], [np.zeros((n, n)), -P]]))
            Q = np.zeros((n, n))
            Q[r, c] = Q[c, r] = 1.0
            out.append(np.block([[np.zeros((n, n)), Q], [Q, np.zeros((n, n))]]))
    return out


def skew_anticommuting_basis(n: int) -> list[np.ndarray]:
    """Skew anticommuting matrices: dimension n² − n."""
    out = []
    for r in range(n):
        for c in range(r + 1, n):
            P = np.zeros((n, n))
            P[r, c], P[c, r] = 1.0, -1.0
            out.append(np.block([[P, np.zeros((n, n))], [np.zeros((n, n)), -P]]))
            Q = np.zeros((n, n))
            Q[r, c], Q[c, r] = 1.0, -1.0
            out.append(np.block([[np.zeros((n, n)), Q], [Q, np.zeros((n, n))]]))
    return out


# ---------------------------------------------------------------------------
# dimension table by Fourier-block ranks


def _mode_list(d: int, kmax: int):
    for k in np.ndindex(*(2 * kmax + 1,) * d):
        kv = np.array(k) - kmax
        if np.any(kv):
            yield kv


def teich_dimensions(n: int, kmax: int = 2) -> dict:
    """Integer dimensions on the flat 2n-torus via exact mode-symbol ranks.

    Returns the tangent dimension of the structure space, the Kähler cone
    dimension, the two assembled rows, the compatible-fiber dimension, and the
    smallest nonzero singular value seen across blocks.
    """
    d = 2 * n
    J0 = standard_j(n)
    basis = anticommuting_basis(n)  # real dim 2n²; complexified per mode
    t0 = len(basis)
    min_gap = np.inf

    # nonzero modes contribute nothing to ker ∂̄ / im ∂̄
    for kv in _mode_list(d, kmax):
        k = kv.astype(float)

        def dbar_symbol(Cm):
            # 2(∂̄Ĵ)(u,v) = i(k_u C v − k_v C u − k_{Ju} C J v + k_{Jv} C J u);
            # the factor 2 is rank-irrelevant and keeps gaps clear of 0.5
            out = np.zeros((d, d, d), dtype=complex)
            CJ = Cm @ J0
            for u in range(d):
                for v in range(d):
                    out[:, u, v] = 1j * (k[u] * Cm[:, v] - k[v] * Cm[:, u]
                                         - (J0.T @ k)[u] * CJ[:, v]
                                         + (J0.T @ k)[v] * CJ[:, u])
            return out

        rows = [dbar_symbol(B.astype(complex)).ravel() for B in basis]
        B1 = np.column_stack(rows)
        # image of ∂̄ from vector symbols: a ↦ ½ i (k(u) a + k(Ju) J a)
        cols = []
        for a_idx in range(d):
            a = np.zeros(d, dtype=complex)
            a[a_idx] = 1.0
            col = np.zeros((d, d), dtype=complex)
            for u in range(d):
                col[:, u] = 1j * (k[u] * a + (J0.T @ k)[u] * (J0 @ a))
            coef, *_ = np.linalg.lstsq(np.column_stack([B.ravel() for B in basis]),
                                       col.ravel(), rcond=None)
            cols.append(coef)
        D0 = np.column_stack(cols)
        sv1 = np.linalg.svd(B1, compute_uv=False)
        ker_dim = int(np.sum(sv1 < 0.5))
        rank_d0 = int(np.sum(np.linalg.svd(D0, compute_uv=False) >= 0.5))
        t0 += 2 * max(0, ker_dim - rank_d0)  # ×2: real and imaginary parts
        gaps = sv1[sv1 >= 0.5]
        if gaps.size:
            min_gap = min(min_gap, float(gaps.min()))
        # harmonic 2-forms at k ≠ 0: kernel of (d, d*) must vanish
        pairs = combi.combos(d, 2)
        Dk = np.zeros((combi.n_combos(d, 3) if d > 2 else 1, len(pairs)), dtype=complex)
        if d > 2:
            table = combi._interior_table(d, 3)
            for r in range(len(table[0])):
                i_hi, j, i_lo, sign = (table[0][r], table[1][r], table[2][r], table[3][r])
                Dk[i_hi, i_lo] += sign * 1j * k[j]
        Ck = np.zeros((d, len(pairs)), dtype=complex)
        for idx, (i, j) in enumerate(pairs):
            Ck[j, idx] += 1j * k[i]
            Ck[i, idx] -= 1j * k[j]
        block = np.vstack([Dk, Ck]) if d > 2 else Ck
        svh = np.linalg.svd(block, compute_uv=False)
        if int(np.sum(svh < 0.5)):
            raise DomainError("unexpected harmonic 2-form at a nonzero mode")
        gaps = svh[svh >= 0.5]
        if gaps.size:
            min_gap = min(min_gap, float(gaps.min()))

    # constant-mode ranks
    pairs = combi.combos(d, 2)
    eye = np.eye(len(pairs))
    J0f = J0.reshape((d, d))
    p11 = np.column_stack([
        combi.pq_project_coef(col, d, 2, J0f, 1, 1).real for col in eye])
    kdim = int(np.linalg.matrix_rank(p11, tol=1e-8))
    p20 = eye - p11
    h20_twice = int(np.linalg.matrix_rank(p20, tol=1e-8))
    sa_dim = len(selfadjoint_compatible_basis(n))
    record = {
        "structure_tangent": t0,
        "kahler_cone": kdim,
        "assembled_total": kdim + t0,
        "assembled_base": kdim + h20_twice,
        "compatible_fiber": sa_dim,
        "min_gap": float(min_gap),
    }
    return record


# ---------------------------------------------------------------------------
# the symplectic connection over closed 2-forms


def hodge_decompose_closed_two_form(grid: TorusGrid, what: np.ndarray):
    """Closed ŵ = constant + dλ̂ with d*λ̂ = 0 on the flat torus."""
    ksq = grid._cache()["ksq"]
    W = grid.fft(what)
    with np.errstate(divide="ignore", invalid="ignore"):
        Wg = np.where(ksq > 0, W / np.where(ksq > 0, ksq, 1.0), 0.0)
    green = grid.ifft(Wg).real
    lam_hat = G.codiff_f(grid, green, 2)
    exact = G.exterior_d(grid, lam_hat, 1)
    const = what - exact
    return const, lam_hat


def connection_A(base: FlatBase, what: np.ndarray, closed_tol: float = 1e-8):
    """The horizontal lift Ĵ = L_v J + Ĵ0 of a closed 2-form ŵ.

    v solves ι(v)ω = λ̂ for the co-closed primitive λ̂ of the exact part;
    Ĵ0 realizes the skew half of the harmonic part.
    """
    grid = base.grid
    d_resid = float(np.max(np.abs(G.exterior_d(grid, what, 2)))) if grid.d > 2 else 0.0
    if d_resid > closed_tol * max(1.0, float(np.max(np.abs(what)))):
        raise DomainError(f"connection_A: ŵ not closed ({d_resid:.2e})")
    const, lam_hat = hodge_decompose_closed_two_form(grid, what)
    v = Ric.hamiltonian_vector_field(grid, base.omega, np.zeros(grid.shape))
    # ι(v)ω = λ̂ pointwise
    w_mat = G.form_to_matrix(grid, base.omega)
    winv = np.moveaxis(np.linalg.inv(np.moveaxis(w_mat, (0, 1), (-2, -1))), (-2, -1), (0, 1))
    v = np.einsum("j...,ji...->i...", lam_hat, winv)
    tau = const - G.j_star_form(grid, const, 2, base.J).real
    tau_mat = G.form_to_matrix(grid, tau)
    # flat metric: g(Ĵ0 u, v) = ½ τ(u, v)  ⟹  (Ĵ0)^j_i = ½ τ_{ij}
    jhat0 = 0.5 * np.einsum("ij...->ji...", tau_mat)
    jhat = G.lie_endo(grid, v, base.J) + jhat0
    return jhat, v, lam_hat, jhat0


def insert_j_form(grid: TorusGrid, coef: np.ndarray, J: np.ndarray) -> np.ndarray:
    return combi.derivation_coef(J, coef, grid.d, 2)


def curvature_hamiltonian(base: FlatBase, w1: np.ndarray, w2: np.ndarray) -> dict:
    """Both expressions of the curvature Hamiltonian: −Ω_J(𝒜(ŵ1), 𝒜(ŵ2)) and
    ½∫ ι(J)(ŵ1 − dλ̂1) ∧ ŵ2 ∧ ω^{n−2}/(n−2)!."""
    grid = base.grid
    if grid.n < 2:
        raise DomainError("curvature_hamiltonian needs n >= 2")
    j1, v1, lam1, _ = connection_A(base, w1)
    j2, v2, lam2, _ = connection_A(base, w2)
    x1 = WPVector(base, j1)
    x2 = WPVector(base, j2)
    first = -wp_form(x1, x2)
    red = w1 - G.exterior_d(grid, lam1, 1)
    integrand = G.wedge_f(grid, insert_j_form(grid, red, base.J), w2, 2, 2)
    if grid.n > 2:
        integrand = G.wedge_f(grid, integrand, Ric.omega_power(grid, base.omega, grid.n - 2),
                              4, grid.d - 4)
    second = 0.5 * G.integrate(grid, integrand)
    return {"symplectic": first, "integral": second,
            "residual": abs(first - second) / (abs(second) + 1.0)}


# ---------------------------------------------------------------------------
# θ/β correspondence


def standard_theta(grid: TorusGrid) -> np.ndarray:
    """(dz_1/√2) ∧ … ∧ (dz_n/√2) as a constant complex n-form field."""
    n, d = grid.n, grid.d
    theta = np.ones((1,) + grid.shape, dtype=complex)
    deg = 0
    for j in range(n):
        dz = np.zeros((d,) + grid.shape, dtype=complex)
        dz[j] = 1.0 / np.sqrt(2.0)
        dz[n + j] = 1j / np.sqrt(2.0)
        theta = G.wedge_f(grid, theta, dz, deg, 1)
        deg += 1
    return theta


def adapted_theta(grid: TorusGrid, J: np.ndarray) -> np.ndarray:
    """J-adapted n-form from the (1,0)-parts of the first n coordinate forms."""
    n, d = grid.n, grid.d
    theta = np.ones((1,) + grid.shape, dtype=complex)
    deg = 0
    for j in range(n):
        dx = np.zeros((d,) + grid.shape)
        dx[j] = 1.0
        alpha = (dx - 1j * G.one_form_compose_j(dx, J)) / np.sqrt(2.0)
        theta = G.wedge_f(grid, theta, alpha.astype(complex), deg, 1)
        deg += 1
    return theta


def theta_pairing_form(grid: TorusGrid, th1: np.ndarray, th2: np.ndarray,
                       k: int | None = None) -> np.ndarray:
    """Hermitian wedge conj(th1) ∧ th2."""
    if k is None:
        k = G.form_degree(grid, th1)
    return G.wedge_f(grid, np.conj(th1), th2, k, G.form_degree(grid, th2))


def rho_from_theta(grid: TorusGrid, theta: np.ndarray) -> np.ndarray:
    """c_n conj(θ) ∧ θ, a real positive volume form for nowhere-zero θ."""
    out = c_const(grid.n) * theta_pairing_form(grid, theta, theta, grid.n)
    return out.real


def theta_beta(grid: TorusGrid, jhat: np.ndarray, theta: np.ndarray,
               J: np.ndarray | None = None) -> np.ndarray:
    """β with i ι(u)β − ι(Ju)β = ι(Ĵu)θ: insert −½JĴ into one slot of θ."""
    if J is None:
        J = G.standard_j_field(grid)
    E = -0.5 * np.einsum("ik...,kj...->ij...", J, jhat).astype(complex)
    return combi.derivation_coef(E, theta, grid.d, grid.n)


def beta_theta(grid: TorusGrid, beta: np.ndarray, theta: np.ndarray,
               J: np.ndarray | None = None) -> np.ndarray:
    """Recover Ĵ from β: solve ι(Ĵu)θ = i ι(u)β − ι(Ju)β columnwise."""
    d, n = grid.d, grid.n
    if J is None:
        J = G.standard_j_field(grid)
    # matrix of w ↦ ι(w)θ on coefficients
    cols = []
    for i in range(d):
        e = np.zeros((d,) + grid.shape)
        e[i] = 1.0
        cols.append(combi.interior_coef(e, theta, d, n))
    M = np.stack(cols, axis=1)  # [comb, i] + grid
    Mr = np.concatenate([M.real, M.imag], axis=0)  # [2comb, i] + grid
    origin = (0,) * grid.d
    flat_theta = bool(np.all(theta.reshape(theta.shape[0], -1)
                             == theta.reshape(theta.shape[0], -1)[:, :1]))
    jhat = np.zeros((d, d) + grid.shape)
    pinv = np.linalg.pinv(Mr[(Ellipsis,) + origin]) if flat_theta else \
        np.linalg.pinv(np.moveaxis(Mr, (0, 1), (-2, -1)))
    for u in range(d):
        eu = np.zeros((d,) + grid.shape)
        eu[u] = 1.0
        Ju = np.einsum("ij...,j...->i...", J, eu)
        rhs = 1j * combi.interior_coef(eu, beta, d, n) \
            - combi.interior_coef(Ju, beta, d, n)
        rhs_r = np.concatenate([rhs.real, rhs.imag], axis=0)
        if flat_theta:
            jhat[:, u] = np.einsum("ic,c...->i...", pinv, rhs_r)
        else:
            sol = np.einsum("...ic,...c->...i", pinv, np.moveaxis(rhs_r, 0, -1))
            jhat[:, u] = np.moveaxis(sol, -1, 0)
    return jhat


def dbar_complex_form(grid: TorusGrid, coef: np.ndarray, k: int, J: np.ndarray,
                      p: int, q: int) -> np.ndarray:
    """(p, q+1)-part of d of a complex form of bidegree (p, q)."""
    return G.pq_project_f(grid, G.exterior_d(grid, coef, k), k + 1, J, p, q + 1)


def del_complex_form(grid: TorusGrid, coef: np.ndarray, k: int, J: np.ndarray,
                     p: int, q: int) -> np.ndarray:
    return G.pq_project_f(grid, G.exterior_d(grid, coef, k), k + 1, J, p + 1, q)


def dbar_adjoint_complex_form(grid: TorusGrid, coef: np.ndarray, k: int,
                              J: np.ndarray, p: int, q: int) -> np.ndarray:
    """Adjoint of the (0,1)-derivative on (p, q)-forms: the (p, q−1)-part of
    −⋆d⋆; satisfies <∂̄*β, σ> = <β, ∂̄σ> exactly on flat Kähler tori."""
    star = G.star_f(grid, coef, k)
    out = -G.star_f(grid, G.exterior_d(grid, star, grid.d - k), grid.d - k + 1)
    return G.pq_project_f(grid, out, k - 1, J, p, q - 1)


# ---------------------------------------------------------------------------
# suites


def _closed_jhat(base: FlatBase, seed: int, amplitude: float) -> np.ndarray:
    """Constant + Lie-derivative representative of ker ∂̄."""
    grid = base.grid
    mats = anticommuting_basis(grid.n)
    rng = np.random.default_rng(seed)
    const = sum(float(c) * M for c, M in zip(rng.standard_normal(len(mats)), mats))
    v = G.random_band_limited(grid, "vector", seed + 50, amplitude, band=G.acs_band(grid.m))
    return G.constant_field(grid, amplitude * const) + G.lie_endo(grid, v, base.J)


def wp_suite(n: int, m: int, seed: int, amplitude: float = 0.1,
             tol_scale: float = 1.0) -> CheckReport:
    """Antisymmetry, reduction to the orbit form on constants, descent along
    Lie directions, mapping-class naturality, the signature split, Gram
    nondegeneracy, the (f, g) solver checks, and the dimension table."""
    grid = TorusGrid(n, m)
    tols = suite_tolerances("teich-wp", tol_scale * (10.0 if n >= 2 else 1.0))
    rep = CheckReport("teich-wp", {"n": n, "m": m, "seed": seed,
                                   "amplitude": amplitude, "tol_scale": tol_scale})
    base = FlatBase(grid)
    vol = (2.0 * np.pi) ** grid.d

    x1 = WPVector(base, _closed_jhat(base, seed, amplitude))
    x2 = WPVector(base, _closed_jhat(base, seed + 7, amplitude))
    rep.add("antisymmetry_diag", abs(wp_form(x1, x1)), tols["antisymmetry"])
    rep.add("antisymmetry", abs(wp_form(x1, x2) + wp_form(x2, x1)),
            tols["antisymmetry"])

    # constants have f = g = 0 and reduce to the volume times the orbit form
    mats = anticommuting_basis(n)
    c1 = WPVector(base, G.constant_field(grid, mats[0]))
    c2 = WPVector(base, G.constant_field(grid, mats[-1]))
    rep.add("constant_fg_zero", float(max(np.max(np.abs(c1.f)), np.max(np.abs(c1.g)))),
            tols["antisymmetry"])
    orbit = 0.5 * float(np.trace(mats[0] @ standard_j(n) @ mats[-1]))
    rep.add("constant_reduction", abs(wp_form(c1, c2) - vol * orbit) / (abs(vol * orbit) + 1.0),
            tols["constant_reduction"])

    # descent: Lie directions pair to zero against every closed direction
    v = G.random_band_limited(grid, "vector", seed + 11, amplitude, band=G.acs_band(m))
    lie = WPVector(base, G.lie_endo(grid, v, base.J))
    scale = max(1.0, float(np.max(np.abs(x1.jhat))) * float(np.max(np.abs(v))))
    rep.add("descent", abs(wp_form(x1, lie)) / scale, tols["descent"])

    # mapping class naturality on constant representatives
    A = np.eye(grid.d, dtype=int)
    A[0, 1] = 1
    Ainv = np.linalg.inv(A.astype(float))
    J0 = standard_j(n)
    Jp = Ainv @ J0 @ A
    m1, m2 = Ainv @ mats[0] @ A, Ainv @ mats[-1] @ A
    nat = 0.5 * float(np.trace(m1 @ Jp @ m2)) - orbit
    rep.add("naturality_sl2z", abs(nat) / (abs(orbit) + 1.0), tols["naturality_sl2z"])

    # signature split and nondegeneracy on the constant tangent space
    sym = selfadjoint_compatible_basis(n)
    gram_sym = np.array([[wp_inner(WPVector(base, G.constant_field(grid, a)),
                                   WPVector(base, G.constant_field(grid, b)))
                          for b in sym] for a in sym])
    eig_sym = np.linalg.eigvalsh(gram_sym)
    rep.add("signature_split_positive", max(0.0, -float(eig_sym.min())) / vol,
            tols["signature_split"])
    skew = skew_anticommuting_basis(n)
    if skew:
        gram_skew = np.array([[wp_inner(WPVector(base, G.constant_field(grid, a)),
                                        WPVector(base, G.constant_field(grid, b)))
                               for b in skew] for a in skew])
        eig_skew = np.linalg.eigvalsh(gram_skew)
        rep.add("signature_split_negative", max(0.0, float(eig_skew.max())) / vol,
                tols["signature_split"])
    full = [WPVector(base, G.constant_field(grid, a)) for a in mats]
    gram = np.array([[wp_form(a, b) for b in full] for a in full])
    sv = np.linalg.svd(gram, compute_uv=False)
    rep.add("gram_full_rank", 0.0 if sv.min() > 1e-8 * vol else 1.0, 0.5)
    rep.add("gram_condition", float(sv.max() / sv.min()), tols["gram_condition"])

    # (f, g) solver: plug-back, the Lie oracle, and the coclosed case
    fv = G.divergence_frho(grid, v, base.rho)
    Jv = np.einsum("ij...,j...->i...", base.J, v)
    fJv = G.divergence_frho(grid, Jv, base.rho)
    rep.add("fg_lie_oracle", float(max(np.max(np.abs(lie.f - fv)), np.max(np.abs(lie.g - fJv))))
            / max(1.0, float(np.max(np.abs(fv)))), tols["fg_lie_oracle"])
    lam = Ric.lambda_rho(grid, base.rho, base.J, x1.jhat)
    recon = -G.one_form_compose_j(G.exterior_d(grid, x1.f[None], 0), base.J) \
        + G.exterior_d(grid, x1.g[None], 0)
    rep.add("fg_plugback", float(np.max(np.abs(lam - recon)))
            / max(1.0, float(np.max(np.abs(lam)))), tols["fg_plugback"])
    jcc = H.project_coclosed_q1(grid, x1.jhat)
    xcc = WPVector(base, harmonic_closure(grid, jcc))
    rep.add("fg_coclosed_zero", float(max(np.max(np.abs(xcc.f)), np.max(np.abs(xcc.g)))),
            tols["fg_coclosed_zero"])

    dims = teich_dimensions(n)
    expected = {"structure_tangent": 2 * n * n, "kahler_cone": n * n,
                "assembled_total": 3 * n * n, "assembled_base": 2 * n * n - n,
                "compatible_fiber": n * n + n}
    for key, val in expected.items():
        rep.add_flag(f"dimension[{key}]", dims[key] == val)
    rep.add("dimension_gap", 0.0 if dims["min_gap"] >= 0.5 else 1.0,
            tols["dimension_gap"])
    return rep.finalize()


def harmonic_closure(grid: TorusGrid, jhat: np.ndarray) -> np.ndarray:
    """Project onto ker ∂̄ by harmonic plus exact parts (flat torus)."""
    inst = H.flat_instance(grid)
    # remove the ∂̄-exact defect: solve ∂̄*∂̄ v = ∂̄*(Ĵ − mean) and subtract rest
    const = H.harmonic_mean_q1(grid, jhat)
    fluct = jhat - const
    x = H.dbar_adjoint_q1(inst, fluct)
    ksq = grid._cache()["ksq"]
    X = grid.fft(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        sol = np.where(ksq > 0, X / np.where(ksq > 0, ksq, 1.0), 0.0)
    v = 2.0 * grid.ifft(sol).real
    return const + H.dbar_q0(grid, inst.J, v)


def connection_suite(m: int, seed: int, amplitude: float = 0.05,
                     tol_scale: float = 1.0) -> CheckReport:
    """Horizontal-lift conditions and the two curvature-Hamiltonian
    expressions on the flat four-torus."""
    grid = TorusGrid(2, m)
    tols = suite_tolerances("teich-connection", tol_scale)
    rep = CheckReport("teich-connection", {"n": 2, "m": m, "seed": seed,
                                           "amplitude": amplitude,
                                           "tol_scale": tol_scale})
    base = FlatBase(grid)
    J0 = base.J
    w_mat0 = G.form_to_matrix(grid, base.omega)

    # constant lifts: trivial and pure-type cases
    rng = np.random.default_rng(seed)
    pairs = combi.combos(grid.d, 2)
    c1 = np.broadcast_to(rng.standard_normal(len(pairs)).reshape(-1, 1, 1, 1, 1),
                         (len(pairs),) + grid.shape).copy()
    c2 = np.broadcast_to(rng.standard_normal(len(pairs)).reshape(-1, 1, 1, 1, 1),
                         (len(pairs),) + grid.shape).copy()
    c1 = c1 - G.pq_project_f(grid, c1, 2, J0, 1, 1).real
    c2 = c2 - G.pq_project_f(grid, c2, 2, J0, 1, 1).real
    out_cc = curvature_hamiltonian(base, c1, c2)
    rep.add("curvature_two_ways_constant", out_cc["residual"],
            tols["curvature_two_ways_constant"])
    same = curvature_hamiltonian(base, c1, c1)
    rep.add("curvature_diagonal_zero",
            abs(same["symplectic"]) + abs(same["integral"]),
            tols["curvature_two_ways_constant"])

    # seeded closed forms: constants plus exact parts
    def seeded_closed(s):
        beta = G.random_band_limited(grid, "form:1", s, amplitude, band=G.acs_band(m))
        return c1 * 0.3 + G.exterior_d(grid, beta, 1)

    w1 = seeded_closed(seed + 1) + c1
    w2 = seeded_closed(seed + 2) + c2
    out = curvature_hamiltonian(base, w1, w2)
    rep.add("curvature_two_ways_seeded", out["residual"],
            tols["curvature_two_ways_seeded"])
    dbeta = G.exterior_d(grid, G.random_band_limited(grid, "form:1", seed + 3,
                                                     amplitude, band=G.acs_band(m)), 1)
    out_shift = curvature_hamiltonian(base, w1, w2 + dbeta)
    rep.add("cohomology_invariance",
            abs(out_shift["symplectic"] - out["symplectic"])
            / (abs(out["symplectic"]) + 1.0),
            tols["cohomology_invariance"])

    # horizontal-lift conditions for a seeded closed form
    jhat, v, lam_hat, jh0 = connection_A(base, w1)
    wm = G.form_to_matrix(grid, w1)
    lhs1 = wm - np.einsum("ki...,kl...,lj...->ij...", J0, wm, J0)
    rhs1 = np.einsum("ki...,kl...,lj...->ij...", jhat, w_mat0, J0) \
        + np.einsum("ki...,kl...,lj...->ij...", J0, w_mat0, jhat)
    rep.add("condition_type", float(np.max(np.abs(lhs1 - rhs1)))
            / max(1.0, float(np.max(np.abs(rhs1)))), tols["condition_type"])
    rep.add("condition_dbar",
            float(np.max(np.abs(H.dbar_q1(base.inst, jhat))))
            / max(1.0, float(np.max(np.abs(jhat)))), tols["condition_dbar"])
    lam_j = Ric.lambda_rho(grid, base.rho, J0, jhat)
    pairing = H.two_form_omega_inner(base.inst, w1)
    target = -G.one_form_compose_j(G.exterior_d(grid, pairing[None], 0), J0)
    rep.add("condition_lambda", float(np.max(np.abs(lam_j - target)))
            / max(1.0, float(np.max(np.abs(target)))), tols["condition_lambda"])
    x_lift = WPVector(base, jhat)
    worst = 0.0
    for B in selfadjoint_compatible_basis(2):
        xb = WPVector(base, G.constant_field(grid, B))
        worst = max(worst, abs(wp_form(x_lift, xb)))
    rep.add("condition_horizontal", worst / max(1.0, float(np.max(np.abs(jhat)))),
            tols["condition_horizontal"])

    # gradient directions reproduce their Lie derivative
    F = G.random_band_limited(grid, "scalar", seed + 4, amplitude, band=G.acs_band(m))
    gradF = G.exterior_d(grid, F[None], 0)
    w_exact = G.exterior_d(grid, G.interior_f(grid, gradF, base.omega, 2), 1)
    jh_a2, *_ = connection_A(base, w_exact)
    lie = G.lie_endo(grid, gradF, J0)
    rep.add("lie_reproduction", float(np.max(np.abs(jh_a2 - lie)))
            / max(1.0, float(np.max(np.abs(lie)))), tols["lie_reproduction"])
    return rep.finalize()


def theta_suite(n: int, m: int, seed: int, amplitude: float = 0.1,
                tol_scale: float = 1.0) -> CheckReport:
    """Round trips, star and wedge flags, pairing identities, the holomorphic
    derivative identities, the closed correction, the pairing against the
    Weil-Petersson form, and the integrability bridge."""
    grid = TorusGrid(n, m)
    tols = suite_tolerances("theta", tol_scale * (10.0 if n >= 2 else 1.0))
    rep = CheckReport("theta", {"n": n, "m": m, "seed": seed,
                                "amplitude": amplitude, "tol_scale": tol_scale})
    base = FlatBase(grid)
    J0 = base.J
    theta = standard_theta(grid)
    cn = c_const(n)
    band = G.acs_band(m)

    rep.add("rho_from_theta", float(np.max(np.abs(rho_from_theta(grid, theta) - base.rho))),
            1e-12)

    # round trip on a seeded anticommuting field
    raw = G.random_band_limited(grid, "endo", seed, amplitude, band=band)
    jh = Ric.anticommute_project(J0, raw)
    beta = theta_beta(grid, jh, theta)
    rep.add("roundtrip", float(np.max(np.abs(beta_theta(grid, beta, theta) - jh))),
            tols["roundtrip"])

    # adjoint correspondence and the flag equivalences
    sb = G.star_f(grid, beta, n)
    jh_star = np.einsum("ij...->ji...", jh)  # flat metric adjoint
    rep.add("star_adjoint_flag",
            float(np.max(np.abs(np.conj(cn) * sb - theta_beta(grid, -jh_star, theta)))),
            tols["star_adjoint_flag"])
    sym_part = 0.5 * (jh + jh_star)
    b_sym = theta_beta(grid, sym_part, theta)
    rep.add("sym_star_flag", float(np.max(np.abs(G.star_f(grid, b_sym, n) + cn * b_sym))),
            tols["star_adjoint_flag"])
    if n >= 2:  # β ∧ ω has degree n + 2 <= 2n only from complex dimension two
        rep.add("sym_wedge_omega_flag",
                float(np.max(np.abs(G.wedge_f(grid, b_sym, base.omega.astype(complex),
                                              n, 2)))),
                tols["wedge_omega_flag"])
    skew_part = 0.5 * (jh - jh_star)
    b_skew = theta_beta(grid, skew_part, theta)
    rep.add("skew_star_flag", float(np.max(np.abs(G.star_f(grid, b_skew, n) - cn * b_skew))),
            tols["star_adjoint_flag"])

    # pairing identities, pointwise and integrated
    raw2 = G.random_band_limited(grid, "endo", seed + 1, amplitude, band=band)
    jh2 = Ric.anticommute_project(J0, raw2)
    beta2 = theta_beta(grid, jh2, theta)
    lhs_s = cn * theta_pairing_form(grid, beta, beta2, n)
    tr_plain = np.einsum("ik...,ki...->...", jh, jh2)
    tr_j = np.einsum("ik...,kl...,li...->...", jh, J0, jh2)
    rhs_s = (-tr_plain / 8.0 + 1j * tr_j / 8.0) * base.rho
    rep.add("symplectic_pairing", float(np.max(np.abs(lhs_s - rhs_s))),
            tols["symplectic_pairing"])
    lhs_i = theta_pairing_form(grid, beta, G.star_f(grid, beta2, n), n).real
    rhs_i = np.einsum("ki...,ki...->...", jh, jh2) / 8.0 * base.rho
    rep.add("inner_pairing", float(np.max(np.abs(lhs_i - rhs_i))),
            tols["inner_pairing"])

    # Lie directions: dι(v)θ = β + hθ with h = ½(f_v − i f_{Jv})
    v = G.random_band_limited(grid, "vector", seed + 2, amplitude, band=band)
    jh_v = G.lie_endo(grid, v, J0)
    d_iv = G.exterior_d(grid, combi.interior_coef(v.astype(complex), theta, grid.d, n),
                        n - 1)
    beta_v = theta_beta(grid, jh_v, theta)
    fv = G.divergence_frho(grid, v, base.rho)
    fJv = G.divergence_frho(grid, np.einsum("ij...,j...->i...", J0, v), base.rho)
    h_v = 0.5 * (fv - 1j * fJv)
    rep.add("lie_beta_oracle", float(np.max(np.abs(d_iv - beta_v - h_v * theta))),
            tols["lie_beta_oracle"])
    proj = G.pq_project_f(grid, d_iv, n, J0, n - 1, 1)
    rep.add("lie_beta_projection", float(np.max(np.abs(proj - beta_v))),
            tols["lie_beta_oracle"])

    # holomorphic-derivative flags for closed and coclosed representatives
    jh_cl = _closed_jhat(base, seed + 3, amplitude)
    b_cl = theta_beta(grid, jh_cl, theta)
    rep.add("closed_flag", float(np.max(np.abs(
        dbar_complex_form(grid, b_cl, n, J0, n - 1, 1))))
        / max(1.0, float(np.max(np.abs(b_cl)))), tols["lie_beta_oracle"])
    jh_cc = H.project_coclosed_q1(grid, jh)
    b_cc = theta_beta(grid, jh_cc, theta)
    rep.add("coclosed_flag", float(np.max(np.abs(
        dbar_adjoint_complex_form(grid, b_cc, n, J0, n - 1, 1))))
        / max(1.0, float(np.max(np.abs(b_cc)))), tols["lie_beta_oracle"])
    # adjointness of the complex-form codifferential used above
    sigma = G.pq_project_f(grid, G.random_band_limited(
        grid, f"form:{n - 1}", seed + 4, amplitude, band=band).astype(complex),
        n - 1, J0, n - 1, 0)
    lhs_adj = G.l2_inner_form(grid, dbar_adjoint_complex_form(grid, beta, n, J0, n - 1, 1),
                              sigma, n - 1, rho=base.rho)
    rhs_adj = G.l2_inner_form(grid, beta,
                              dbar_complex_form(grid, sigma, n - 1, J0, n - 1, 0),
                              n, rho=base.rho)
    rep.add("dbar_star_adjointness", abs(lhs_adj - rhs_adj) / (abs(rhs_adj) + 1.0),
            tols["lie_beta_oracle"])

    # i ∂β + ½ Λ ∧ θ = 0
    lam = Ric.lambda_rho(grid, base.rho, J0, jh)
    del_b = del_complex_form(grid, beta, n, J0, n - 1, 1)
    resid_bl = 1j * del_b + 0.5 * G.wedge_f(grid, lam.astype(complex), theta, 1, n)
    rep.add("del_lambda", float(np.max(np.abs(resid_bl)))
            / max(1.0, float(np.max(np.abs(del_b)))), tols["del_lambda"])

    # closed correction: d(β + hθ) = 0 with h = ½(f − i g), mean zero
    x_cl = WPVector(base, jh_cl)
    h_cl = 0.5 * (x_cl.f - 1j * x_cl.g)
    theta_hat = theta_beta(grid, jh_cl, theta) + h_cl * theta
    rep.add("closed_correction", float(np.max(np.abs(
        G.exterior_d(grid, theta_hat, n)))) if n < grid.d else 0.0,
        tols["closed_correction"])
    rep.add("closed_correction_mean",
            abs(G.integrate_against_volume(grid, h_cl, base.rho)), 1e-10)

    # pairing of corrected forms against the Weil-Petersson data
    x2_cl = WPVector(base, _closed_jhat(base, seed + 5, amplitude))
    h2_cl = 0.5 * (x2_cl.f - 1j * x2_cl.g)
    th1 = theta_beta(grid, x_cl.jhat, theta) + h_cl * theta
    th2 = theta_beta(grid, x2_cl.jhat, theta) + h2_cl * theta
    pair = cn * G.integrate(grid, theta_pairing_form(grid, th1, th2, n))
    re_expected = (-G.integrate_against_volume(
        grid, np.einsum("ik...,ki...->...", x_cl.jhat, x2_cl.jhat), base.rho) / 8.0
        + G.integrate_against_volume(grid, (h_cl.conj() * h2_cl).real, base.rho))
    im_expected = (G.integrate_against_volume(
        grid, np.einsum("ik...,kl...,li...->...", x_cl.jhat, J0, x2_cl.jhat),
        base.rho) / 8.0
        + G.integrate_against_volume(grid, (h_cl.conj() * h2_cl).imag, base.rho))
    rep.add("pairing_re", abs(pair.real - re_expected) / (abs(re_expected) + 1.0),
            tols["pairing_vs_wp"])
    rep.add("pairing_im", abs(pair.imag - im_expected) / (abs(im_expected) + 1.0),
            tols["pairing_vs_wp"])
    wp_val = wp_form(x_cl, x2_cl)
    ratio = pair.imag / wp_val if abs(wp_val) > 1e-9 else np.nan
    rep.params["measured_pairing_ratio"] = float(ratio)
    rep.add("pairing_vs_wp", abs(pair.imag - 0.25 * wp_val) / (abs(wp_val) + 1.0),
            tols["pairing_vs_wp"])

    # integrability bridge: (dθ_J)^{n−1,2} = ¼ ι(N_J)θ_J
    J_non = G.random_band_limited(grid, "acs", seed + 6, amplitude, band=1)
    th_j = adapted_theta(grid, J_non)
    d_th = G.exterior_d(grid, th_j, n)
    lhs_b = G.pq_project_f(grid, d_th, n + 1, J_non, n - 1, 2)
    N, _ = C.nijenhuis(grid, J_non)
    rhs_b = 0.25 * combi.interior_pairs_coef(N, th_j, grid.d, n)
    rep.add("integrability_bridge", float(np.max(np.abs(lhs_b - rhs_b)))
            / max(1e-3, float(np.max(np.abs(rhs_b)))), tols["integrability_bridge"])
    if n >= 2:
        # complex dimension one is always integrable; the defect is nonzero
        # only from n = 2 on
        rep.add("bridge_nonzero", 0.0 if float(np.max(np.abs(rhs_b))) > 1e-6 else 1.0, 0.5)
    else:
        rep.add("bridge_vanishes_n1", float(np.max(np.abs(rhs_b))), 1e-8)
    # integrable pull-back: the defect vanishes and the volume form is flat
    u = G.random_band_limited(grid, "vector", seed + 7, 0.04, band=1)
    phi = G.DisplacementMap(u)
    J_int = G.pullback(grid, "endo", J0, phi)
    th_int = G.pullback(grid, f"form:{n}", theta, phi)
    d_int = G.exterior_d(grid, th_int, n)
    rep.add("integrable_theta_closed", float(np.max(np.abs(d_int)))
            / max(1.0, float(np.max(np.abs(th_int)))), tols["integrability_bridge"])
    rho_int = rho_from_theta(grid, th_int)
    ric = Ric.ricci_form(grid, rho_int, J_int,
                         volume_tol=1e-7 if m <= 16 else 1e-9)
    rep.add("flat_bundle_ricci_zero", float(np.max(np.abs(ric.ric))),
            tols["integrability_bridge"])
    return rep.finalize()

"""Spectral field calculus on flat tori (R/2πZ)^{2n}.

Layout: component axes first, the 2n grid axes last.  Scalars are (m,)*d,
vectors (d,)+grid, k-forms (C(d,k),)+grid over increasing index tuples,
endomorphisms (d,d)+grid with E[i, j] = E^i_j, metrics (d,d)+grid,
Christoffel arrays (d,d,d)+grid with G[k, i, j] = Γ^k_{ij}.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import combi
from .errors import DomainError, NumericError, UsageError
from .tensor import standard_j, standard_omega_matrix, vol_sign

_MAGIC = b"GDSK1\x00"
_CACHE: dict[tuple[int, int], dict] = {}


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on T^{2n} with m samples per axis."""

    n: int
    m: int

    def __post_init__(self):
        if self.n < 1:
            raise UsageError("n must be >= 1")
        if self.m < 8 or self.m % 2:
            raise UsageError("m must be even and >= 8")

    @property
    def d(self) -> int:
        return 2 * self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m,) * self.d

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.d, 0))

    @property
    def npoints(self) -> int:
        return self.m ** self.d

    @property
    def cell_volume(self) -> float:
        return (2.0 * np.pi / self.m) ** self.d

    @property
    def band(self) -> int:
        """Mode cutoff used for seeded data: strictly inside |k| <= m/4."""
        return max(1, self.m // 4 - 1)

    def _cache(self) -> dict:
        key = (self.n, self.m)
        if key not in _CACHE:
            freq = np.rint(np.fft.fftfreq(self.m) * self.m).astype(int)
            rfreq = np.arange(self.m // 2 + 1)
            kax, dmul, dmul_r = [], [], []
            for j in range(self.d):
                shp = [1] * self.d
                shp[j] = self.m
                kj = freq.reshape(shp)
                kax.append(kj)
                mul = 1j * kj.astype(float)
                mul[np.abs(kj) == self.m // 2] = 0.0  # Nyquist bin
                dmul.append(mul)
                shp_r = [1] * self.d
                if j == self.d - 1:
                    shp_r[j] = self.m // 2 + 1
                    kr = rfreq.reshape(shp_r)
                else:
                    shp_r[j] = self.m
                    kr = freq.reshape(shp_r)
                mul_r = 1j * kr.astype(float)
                mul_r[np.abs(kr) == self.m // 2] = 0.0
                dmul_r.append(mul_r)
            ksq = sum(k.astype(float) ** 2 for k in kax)
            x = 2.0 * np.pi * np.arange(self.m) / self.m
            mul = 1j * freq.astype(float)
            mul[np.abs(freq) == self.m // 2] = 0.0
            dmat = np.fft.ifft(mul[:, None] * np.fft.fft(np.eye(self.m), axis=0), axis=0).real
            dmat -= dmat.sum(axis=1, keepdims=True) / self.m  # constants map to 0 exactly
            _CACHE[key] = {"k": kax, "dmul": dmul, "dmul_r": dmul_r, "ksq": ksq,
                           "x": x, "dmat": dmat}
        return _CACHE[key]

    def _deriv_matmul(self, arr: np.ndarray, j: int) -> np.ndarray:
        D = self._cache()["dmat"]
        ax = arr.ndim - self.d + j
        return np.moveaxis(np.moveaxis(arr, ax, -1) @ D.T, -1, ax)

    def coords(self) -> np.ndarray:
        """(d,) + grid array of coordinates."""
        x = self._cache()["x"]
        grids = np.meshgrid(*([x] * self.d), indexing="ij")
        return np.stack(grids)

    def fft(self, arr: np.ndarray) -> np.ndarray:
        return np.fft.fftn(arr, axes=self.axes)

    def ifft(self, arr: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(arr, axes=self.axes)

    def deriv(self, arr: np.ndarray, j: int) -> np.ndarray:
        if self.m <= 32:
            return self._deriv_matmul(arr, j)
        if np.isrealobj(arr):
            F = np.fft.rfftn(arr, axes=self.axes)
            return np.fft.irfftn(self._cache()["dmul_r"][j] * F, s=self.shape, axes=self.axes)
        return self.ifft(self._cache()["dmul"][j] * self.fft(arr))

    def derivs(self, arr: np.ndarray) -> np.ndarray:
        """All coordinate derivatives, stacked on a new leading axis."""
        if self.m <= 32:
            out = np.empty((self.d,) + arr.shape, dtype=arr.dtype)
            for j in range(self.d):
                out[j] = self._deriv_matmul(arr, j)
            return out
        if np.isrealobj(arr):
            F = np.fft.rfftn(arr, axes=self.axes)
            dm = self._cache()["dmul_r"]
            out = np.empty((self.d,) + arr.shape)
            for j in range(self.d):
                out[j] = np.fft.irfftn(dm[j] * F, s=self.shape, axes=self.axes)
            return out
        F = self.fft(arr)
        dm = self._cache()["dmul"]
        return np.stack([self.ifft(dm[j] * F) for j in range(self.d)])

    def integrate_scalar(self, f: np.ndarray) -> float | complex:
        val = np.sum(f) * self.cell_volume
        return float(val.real) if np.isrealobj(f) else complex(val)

    def mean(self, f: np.ndarray) -> float | complex:
        return self.integrate_scalar(f) / (2.0 * np.pi) ** self.d


# ---------------------------------------------------------------------------
# constant structures as fields


def constant_field(grid: TorusGrid, mat: np.ndarray) -> np.ndarray:
    mat = np.asarray(mat)
    return np.broadcast_to(mat.reshape(mat.shape + (1,) * grid.d),
                           mat.shape + grid.shape).copy()


def standard_j_field(grid: TorusGrid) -> np.ndarray:
    return constant_field(grid, standard_j(grid.n))


def standard_omega_field(grid: TorusGrid) -> np.ndarray:
    return form_from_matrix(grid, constant_field(grid, standard_omega_matrix(grid.n)))


def standard_volume_field(grid: TorusGrid) -> np.ndarray:
    out = np.zeros((1,) + grid.shape)
    out[0] = vol_sign(grid.n)
    return out


def flat_metric_field(grid: TorusGrid) -> np.ndarray:
    return constant_field(grid, np.eye(grid.d))


# ---------------------------------------------------------------------------
# form-field calculus


def form_from_matrix(grid: TorusGrid, mat: np.ndarray) -> np.ndarray:
    """2-form coefficients from an antisymmetric (d, d)+grid array."""
    cs = combi.combos(grid.d, 2)
    return np.stack([mat[i, j] for i, j in cs])


def form_to_matrix(grid: TorusGrid, coef: np.ndarray) -> np.ndarray:
    out = np.zeros((grid.d, grid.d) + coef.shape[1:], dtype=coef.dtype)
    for idx, (i, j) in enumerate(combi.combos(grid.d, 2)):
        out[i, j] = coef[idx]
        out[j, i] = -coef[idx]
    return out


def form_degree(grid: TorusGrid, coef: np.ndarray) -> int:
    for k in range(grid.d + 1):
        if coef.shape[0] == combi.n_combos(grid.d, k):
            return k
    raise UsageError("coefficient array does not match any form degree")


def exterior_d(grid: TorusGrid, coef: np.ndarray, k: int | None = None) -> np.ndarray:
    """Spectral exterior derivative of a k-form field."""
    if k is None:
        k = form_degree(grid, coef)
    if k >= grid.d:
        raise UsageError("exterior_d: form already has top degree")
    i_hi, j, i_lo, sign = combi._interior_table(grid.d, k + 1)
    if grid.m <= 32:
        dall = grid.derivs(coef)  # [j, combo]
        out = np.zeros((combi.n_combos(grid.d, k + 1),) + coef.shape[1:], dtype=coef.dtype)
        for r in range(len(i_hi)):
            out[i_hi[r]] += sign[r] * dall[j[r], i_lo[r]]
        return out
    if np.isrealobj(coef):
        F = np.fft.rfftn(coef, axes=grid.axes)
        dm = grid._cache()["dmul_r"]
        out_hat = np.zeros((combi.n_combos(grid.d, k + 1),) + F.shape[1:], dtype=complex)
        for r in range(len(i_hi)):
            out_hat[i_hi[r]] += sign[r] * dm[j[r]] * F[i_lo[r]]
        return np.fft.irfftn(out_hat, s=grid.shape, axes=grid.axes)
    F = grid.fft(coef)
    dm = grid._cache()["dmul"]
    out_hat = np.zeros((combi.n_combos(grid.d, k + 1),) + grid.shape, dtype=complex)
    for r in range(len(i_hi)):
        out_hat[i_hi[r]] += sign[r] * dm[j[r]] * F[i_lo[r]]
    return grid.ifft(out_hat)


def wedge_f(grid: TorusGrid, a: np.ndarray, b: np.ndarray,
            p: int | None = None, q: int | None = None) -> np.ndarray:
    if p is None:
        p = form_degree(grid, a)
    if q is None:
        q = form_degree(grid, b)
    if p + q > grid.d:
        raise UsageError("wedge_f: degree exceeds dimension")
    return combi.wedge_coef(a, b, grid.d, p, q)


def interior_f(grid: TorusGrid, v: np.ndarray, a: np.ndarray, k: int | None = None) -> np.ndarray:
    if k is None:
        k = form_degree(grid, a)
    if k < 1:
        raise UsageError("interior_f: form must have degree >= 1")
    return combi.interior_coef(v, a, grid.d, k)


def integrate(grid: TorusGrid, coef: np.ndarray) -> float | complex:
    """Integral of a top-degree form field."""
    if coef.shape[0] != 1 or coef.ndim != grid.d + 1:
        raise UsageError("integrate expects a top-degree form field")
    return vol_sign(grid.n) * grid.integrate_scalar(coef[0])


def integrate_against_volume(grid: TorusGrid, f: np.ndarray, rho: np.ndarray) -> float | complex:
    """∫ f ρ for a scalar f and a top-degree form ρ."""
    return vol_sign(grid.n) * grid.integrate_scalar(f * rho[0])


def metric_inverse(g: np.ndarray) -> np.ndarray:
    return np.moveaxis(np.linalg.inv(np.moveaxis(g, (0, 1), (-2, -1))), (-2, -1), (0, 1))


def metric_sqrt_det(g: np.ndarray) -> np.ndarray:
    det = np.linalg.det(np.moveaxis(g, (0, 1), (-2, -1)))
    if np.any(det <= 0):
        raise DomainError("metric determinant must be positive")
    return np.sqrt(det)


def star_f(grid: TorusGrid, coef: np.ndarray, k: int | None = None,
           g: np.ndarray | None = None) -> np.ndarray:
    """Hodge star; flat metric when g is None."""
    if k is None:
        k = form_degree(grid, coef)
    if g is None:
        ginv = np.eye(grid.d)
        sq = 1.0
    else:
        ginv = metric_inverse(g)
        sq = metric_sqrt_det(g)
    return combi.star_coef(coef, grid.d, k, ginv, sq, vol_sign(grid.n))


def codiff_f(grid: TorusGrid, coef: np.ndarray, k: int | None = None,
             g: np.ndarray | None = None) -> np.ndarray:
    """d* = −*d* (even-dimensional convention, all degrees)."""
    if k is None:
        k = form_degree(grid, coef)
    if k < 1:
        raise UsageError("codiff_f: degree must be >= 1")
    return -star_f(grid, exterior_d(grid, star_f(grid, coef, k, g), grid.d - k), grid.d - k + 1, g)


def form_inner_f(grid: TorusGrid, a: np.ndarray, b: np.ndarray, k: int,
                 g: np.ndarray | None = None) -> np.ndarray:
    ginv = np.eye(grid.d) if g is None else metric_inverse(g)
    return combi.metric_inner_coef(a, b, grid.d, k, ginv)


def l2_inner_form(grid: TorusGrid, a: np.ndarray, b: np.ndarray, k: int,
                  g: np.ndarray | None = None, rho: np.ndarray | None = None):
    """L² pairing ∫ <a, b> vol_g; ρ defaults to the metric volume."""
    if rho is None:
        sq = 1.0 if g is None else metric_sqrt_det(g)
        rho = standard_volume_field(grid) * sq
    return integrate_against_volume(grid, form_inner_f(grid, a, b, k, g), rho)


def pq_project_f(grid: TorusGrid, coef: np.ndarray, k: int, J: np.ndarray,
                 p: int, q: int) -> np.ndarray:
    return combi.pq_project_coef(coef, grid.d, k, J, p, q)


def j_star_form(grid: TorusGrid, coef: np.ndarray, k: int, J: np.ndarray) -> np.ndarray:
    return combi.pullback_linear_coef(coef, grid.d, k, J)


def insert_j_form(grid: TorusGrid, coef: np.ndarray, k: int, J: np.ndarray) -> np.ndarray:
    return combi.derivation_coef(J, coef, grid.d, k)


def one_form_compose_j(lam: np.ndarray, J: np.ndarray) -> np.ndarray:
    """(λ∘J)(u) := λ(J u), i.e. components λ_k J^k_i."""
    return np.einsum("k...,ki...->i...", lam, J)


# ---------------------------------------------------------------------------
# Lie derivatives (spectral, connection-free)


def lie_scalar(grid: TorusGrid, v: np.ndarray, f: np.ndarray) -> np.ndarray:
    return np.einsum("j...,j...->...", v, grid.derivs(f))


def lie_vector(grid: TorusGrid, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    dv = grid.derivs(v)  # dv[j, i] = ∂_j v^i
    dw = grid.derivs(w)
    return (np.einsum("k...,ki...->i...", v, dw)
            - np.einsum("k...,ki...->i...", w, dv))


def lie_endo(grid: TorusGrid, v: np.ndarray, E: np.ndarray) -> np.ndarray:
    dv = grid.derivs(v)  # dv[k, i] = ∂_k v^i
    dE = grid.derivs(E)  # dE[k, i, j]
    return (np.einsum("k...,kij...->ij...", v, dE)
            - np.einsum("ki...,kj...->ij...", dv, E)
            + np.einsum("ik...,jk...->ij...", E, dv))


def lie_form(grid: TorusGrid, v: np.ndarray, a: np.ndarray, k: int | None = None) -> np.ndarray:
    if k is None:
        k = form_degree(grid, a)
    if k == 0:
        return lie_scalar(grid, v, a)
    out = exterior_d(grid, interior_f(grid, v, a, k), k - 1)
    if k < grid.d:
        out = out + interior_f(grid, v, exterior_d(grid, a, k), k + 1)
    return out


def lie_derivative_J(grid: TorusGrid, v: np.ndarray, J: np.ndarray,
                     gamma: np.ndarray, torsion_tol: float = 1e-9) -> np.ndarray:
    """(L_v J)u = J ∇_u v − ∇_{Ju} v + (∇_v J)u for a torsion-free connection."""
    tor = np.max(np.abs(gamma - np.swapaxes(gamma, 1, 2)))
    if tor > torsion_tol:
        raise DomainError(f"lie_derivative_J requires a torsion-free connection (torsion {tor:.2e})")
    dv = grid.derivs(v)
    nabla_v = np.einsum("ji...->ij...", dv) + np.einsum("ijl...,l...->ij...", gamma, v)
    # nabla_v[i, j] = ∇_j v^i
    dJ = grid.derivs(J)
    nabla_J = dJ + np.einsum("ikl...,lj...->kij...", gamma, J) \
        - np.einsum("lkj...,il...->kij...", gamma, J)
    # nabla_J[k, i, j] = (∇_k J)^i_j
    return (np.einsum("ik...,kj...->ij...", J, nabla_v)
            - np.einsum("kj...,ik...->ij...", J, nabla_v)
            + np.einsum("k...,kij...->ij...", v, nabla_J))


def divergence_frho(grid: TorusGrid, v: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """f_v with f_v ρ = dι(v)ρ, for a positive volume form ρ."""
    if np.any(vol_sign(grid.n) * rho[0] <= 0):
        raise DomainError("divergence_frho: volume form must be positive")
    num = exterior_d(grid, interior_f(grid, v, rho, grid.d), grid.d - 1)
    return num[0] / rho[0]


def vector_from_contraction(grid: TorusGrid, rho: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Solve ι(v)ρ = σ pointwise for the top form ρ and (d−1)-form σ."""
    if np.any(np.abs(rho[0]) <= 0):
        raise DomainError("volume form must be nondegenerate")
    d = grid.d
    full = tuple(range(d))
    idx = combi.combo_index(d, d - 1)
    v = np.zeros((d,) + grid.shape, dtype=sigma.dtype)
    for pos in range(d):
        rest = full[:pos] + full[pos + 1:]
        sign = (-1.0) ** pos
        v[pos] = sigma[idx[rest]] / (sign * rho[0])
    return v


# ---------------------------------------------------------------------------
# Poisson solves


def poisson_solve(grid: TorusGrid, f: np.ndarray, g: np.ndarray | None = None,
                  tol: float = 1e-10, max_iter: int = 800) -> np.ndarray:
    """Solve Δu = f with Δ = d*d ≥ 0, mean-zero u.

    Flat metric: exact Fourier division.  Curved metric: preconditioned CG on
    the divergence form −∂_i(√g g^{ij} ∂_j u) = √g f.
    """
    if g is None:
        mean = abs(grid.mean(f))
        if mean > 1e-8 * max(1.0, float(np.max(np.abs(f)))):
            raise DomainError(f"poisson_solve: source has nonzero mean {mean:.3e}")
        ksq = grid._cache()["ksq"]
        F = grid.fft(f)
        with np.errstate(divide="ignore", invalid="ignore"):
            U = np.where(ksq > 0, -F / np.where(ksq > 0, -ksq, 1.0), 0.0)
        u = grid.ifft(U)
        return u.real if np.isrealobj(f) else u

    sq = metric_sqrt_det(g)
    ginv = metric_inverse(g)
    rhs = sq * f
    mean = abs(grid.integrate_scalar(rhs)) / (2 * np.pi) ** grid.d
    if mean > 1e-8 * max(1.0, float(np.max(np.abs(rhs)))):
        raise DomainError(f"poisson_solve: source has nonzero metric mean {mean:.3e}")
    # restrict to the range of the spectral divergence (no Nyquist lines)
    rhs = drop_nyquist(grid, rhs)
    coef = np.einsum("ij...->...", ginv * sq) / grid.d  # scale for the preconditioner

    def op(u):
        du = grid.derivs(u)
        flux = np.einsum("ij...,j...->i...", ginv, du) * sq
        return -sum(grid.deriv(flux[i], i) for i in range(grid.d))

    def precond(r):
        ksq = grid._cache()["ksq"]
        R = grid.fft(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            U = np.where(ksq > 0, R / np.where(ksq > 0, ksq, 1.0), 0.0)
        return grid.ifft(U).real / float(np.mean(coef))

    u = np.zeros_like(rhs)
    r = rhs - op(u)
    z = precond(r)
    p = z
    rz = np.sum(r * z)
    norm_rhs = np.sqrt(np.sum(rhs * rhs))
    for _ in range(max_iter):
        Ap = op(p)
        alpha = rz / np.sum(p * Ap)
        u = u + alpha * p
        r = r - alpha * Ap
        if np.sqrt(np.sum(r * r)) <= tol * norm_rhs:
            break
        z = precond(r)
        rz_new = np.sum(r * z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    else:
        raise NumericError("poisson_solve: CG did not converge",
                           residual=float(np.sqrt(np.sum(r * r)) / norm_rhs))
    u = u - grid.mean(u)
    return u


def laplacian(grid: TorusGrid, u: np.ndarray, g: np.ndarray | None = None) -> np.ndarray:
    """Δu = d*du (≥ 0 convention)."""
    if g is None:
        return grid.ifft(grid._cache()["ksq"] * grid.fft(u)).real
    sq = metric_sqrt_det(g)
    ginv = metric_inverse(g)
    du = grid.derivs(u)
    flux = np.einsum("ij...,j...->i...", ginv, du) * sq
    return -sum(grid.deriv(flux[i], i) for i in range(grid.d)) / sq


# ---------------------------------------------------------------------------
# seeded random fields


def drop_nyquist(grid: TorusGrid, arr: np.ndarray) -> np.ndarray:
    """Remove modes with any |k_j| = m/2 (outside the derivative's range)."""
    kax = grid._cache()["k"]
    mask = np.ones(grid.shape, dtype=bool)
    for j in range(grid.d):
        mask &= np.abs(kax[j]) != grid.m // 2
    out = grid.ifft(grid.fft(arr) * mask)
    return out.real if np.isrealobj(arr) else out


def _band_mask(grid: TorusGrid, kmax: int) -> np.ndarray:
    kax = grid._cache()["k"]
    mask = np.ones(grid.shape, dtype=bool)
    for j in range(grid.d):
        mask &= np.abs(kax[j]) <= kmax
    return mask


def band_limit_residual(grid: TorusGrid, arr: np.ndarray, kmax: int | None = None) -> float:
    """Relative Fourier mass outside |k|∞ <= kmax (tag check)."""
    if kmax is None:
        kmax = grid.m // 4
    F = grid.fft(arr)
    mask = _band_mask(grid, kmax)
    outside = np.abs(F[..., ~mask])
    peak = np.max(np.abs(F))
    return float(outside.max() / peak) if peak > 0 and outside.size else 0.0


def acs_band(m: int) -> int:
    """Default conjugator band: narrow, so Neumann tails stay at machine level."""
    return max(1, m // 20)


def _smooth_channels(grid: TorusGrid, rng: np.random.Generator,
                     shape: tuple[int, ...], amplitude: float,
                     band: int | None = None) -> np.ndarray:
    raw = rng.standard_normal(shape + grid.shape)
    F = grid.fft(raw)
    F *= _band_mask(grid, grid.band if band is None else band)
    out = grid.ifft(F).real
    peak = np.max(np.abs(out))
    if peak > 0:
        out *= amplitude / peak
    return out


def random_band_limited(grid: TorusGrid, kind: str, seed: int, amplitude: float = 0.1,
                        band: int | None = None) -> np.ndarray:
    """Deterministic band-limited field of the requested kind.

    amplitude 0 returns the constant baseline of the kind (J0, standard ρ,
    zero otherwise).
    """
    if amplitude < 0:
        raise UsageError("amplitude must be >= 0")
    rng = np.random.default_rng(seed)
    if kind == "scalar":
        return _smooth_channels(grid, rng, (), amplitude, band) if amplitude else np.zeros(grid.shape)
    if kind == "vector":
        return (_smooth_channels(grid, rng, (grid.d,), amplitude, band) if amplitude
                else np.zeros((grid.d,) + grid.shape))
    if kind.startswith("form:"):
        k = int(kind.split(":")[1])
        c = combi.n_combos(grid.d, k)
        return (_smooth_channels(grid, rng, (c,), amplitude, band) if amplitude
                else np.zeros((c,) + grid.shape))
    if kind == "endo":
        return (_smooth_channels(grid, rng, (grid.d, grid.d), amplitude, band) if amplitude
                else np.zeros((grid.d, grid.d) + grid.shape))
    if kind == "acs":
        if amplitude > 0.2:
            raise UsageError("acs amplitude capped at 0.2 to keep I+K invertible")
        J0 = standard_j_field(grid)
        if not amplitude:
            return J0
        K = _smooth_channels(grid, rng, (grid.d, grid.d), amplitude,
                             acs_band(grid.m) if band is None else band)
        S = constant_field(grid, np.eye(grid.d)) + K
        Sinv = np.moveaxis(np.linalg.inv(np.moveaxis(S, (0, 1), (-2, -1))), (-2, -1), (0, 1))
        return np.einsum("ik...,kl...,lj...->ij...", S, J0, Sinv)
    if kind == "volume":
        s = _smooth_channels(grid, rng, (), amplitude,
                             acs_band(grid.m) if band is None else band) \
            if amplitude else np.zeros(grid.shape)
        return standard_volume_field(grid) * np.exp(2.0 * s)
    raise UsageError(f"unknown field kind {kind!r}")


def matrix_exp_field(F: np.ndarray, order: int = 12) -> np.ndarray:
    """Pointwise exp of an endomorphism field with small entries."""
    d = F.shape[0]
    out = constant_field_like(F, np.eye(d))
    term = out.copy()
    for k in range(1, order + 1):
        term = np.einsum("ik...,kj...->ij...", term, F) / k
        out = out + term
    return out


def constant_field_like(F: np.ndarray, mat: np.ndarray) -> np.ndarray:
    return np.broadcast_to(mat.reshape(mat.shape + (1,) * (F.ndim - 2)), F.shape).copy()


def random_acs_symplectic(grid: TorusGrid, seed: int, amplitude: float = 0.1,
                          band: int | None = None) -> np.ndarray:
    """ω0-compatible almost complex structure field e^ξ J0 e^{−ξ}, ξ ∈ sp(2n)."""
    if amplitude > 0.2:
        raise UsageError("amplitude capped at 0.2")
    if not amplitude:
        return standard_j_field(grid)
    rng = np.random.default_rng(seed)
    S = _smooth_channels(grid, rng, (grid.d, grid.d), amplitude,
                         acs_band(grid.m) if band is None else band)
    S = 0.5 * (S + np.swapaxes(S, 0, 1))
    Winv = np.linalg.inv(standard_omega_matrix(grid.n))
    xi = np.einsum("ik,kj...->ij...", Winv, S)
    E = matrix_exp_field(xi)
    Einv = np.moveaxis(np.linalg.inv(np.moveaxis(E, (0, 1), (-2, -1))), (-2, -1), (0, 1))
    return np.einsum("ik...,kl...,lj...->ij...", E, standard_j_field(grid), Einv)


def random_hamiltonian_matrix_field(grid: TorusGrid, seed: int, amplitude: float = 0.1,
                                    band: int | None = None) -> np.ndarray:
    """Band-limited field with values in sp(2n)."""
    rng = np.random.default_rng(seed)
    S = _smooth_channels(grid, rng, (grid.d, grid.d), amplitude,
                         acs_band(grid.m) if band is None else band)
    S = 0.5 * (S + np.swapaxes(S, 0, 1))
    Winv = np.linalg.inv(standard_omega_matrix(grid.n))
    return np.einsum("ik,kj...->ij...", Winv, S)


# ---------------------------------------------------------------------------
# diffeomorphisms and pullbacks


def fourier_interpolate(grid: TorusGrid, arr: np.ndarray, pts: np.ndarray,
                        rel_cut: float = 1e-14, chunk: int = 4096) -> np.ndarray:
    """Evaluate the trigonometric interpolant of arr at points (d, P)."""
    comp_shape = arr.shape[:-grid.d]
    flat = arr.reshape((-1,) + grid.shape)
    F = grid.fft(flat) / grid.npoints
    mags = np.max(np.abs(F), axis=0)
    mask = mags > rel_cut * np.max(mags)
    kax = grid._cache()["k"]
    kvecs = np.stack([np.broadcast_to(kax[j], grid.shape)[mask] for j in range(grid.d)])
    coefs = F[:, mask]  # (C, nmodes)
    P = pts.shape[1]
    out = np.empty((flat.shape[0], P), dtype=complex)
    for start in range(0, P, chunk):
        sl = slice(start, min(start + chunk, P))
        phase = np.exp(1j * (kvecs.T @ pts[:, sl]))
        out[:, sl] = coefs @ phase
    if np.isrealobj(arr):
        out = out.real
    return out.reshape(comp_shape + (P,))


@dataclass(frozen=True)
class AffineMap:
    """x ↦ A x + shift with A ∈ SL(2n, Z) and a grid-aligned shift (in index units)."""

    A: np.ndarray
    shift: np.ndarray = field(default=None)

    def __post_init__(self):
        A = np.asarray(self.A)
        if not np.issubdtype(A.dtype, np.integer):
            if not np.allclose(A, np.rint(A)):
                raise UsageError("affine matrix must be integer")
            A = np.rint(A).astype(int)
        if round(np.linalg.det(A.astype(float))) != 1:
            raise DomainError("affine matrix must have determinant one")
        object.__setattr__(self, "A", A)
        s = np.zeros(A.shape[0], dtype=int) if self.shift is None else np.asarray(self.shift, dtype=int)
        object.__setattr__(self, "shift", s)


@dataclass(frozen=True)
class DisplacementMap:
    """x ↦ x + u(x) for a band-limited displacement field u."""

    u: np.ndarray


def displacement_jacobian(grid: TorusGrid, u: np.ndarray) -> np.ndarray:
    du = grid.derivs(u)  # du[j, i] = ∂_j u^i
    jac = np.einsum("ji...->ij...", du)
    d = grid.d
    jac = jac + constant_field(grid, np.eye(d))
    det = np.linalg.det(np.moveaxis(jac, (0, 1), (-2, -1)))
    if det.min() < 0.1:
        raise DomainError(f"displacement Jacobian determinant dips to {det.min():.3f}")
    return jac


def _transform_components(grid: TorusGrid, kind: str, vals: np.ndarray,
                          jac: np.ndarray) -> np.ndarray:
    if kind == "scalar":
        return vals
    if kind == "vector":
        jinv = np.moveaxis(np.linalg.inv(np.moveaxis(jac, (0, 1), (-2, -1))), (-2, -1), (0, 1))
        return np.einsum("ij...,j...->i...", jinv, vals)
    if kind == "endo":
        jinv = np.moveaxis(np.linalg.inv(np.moveaxis(jac, (0, 1), (-2, -1))), (-2, -1), (0, 1))
        return np.einsum("ik...,kl...,lj...->ij...", jinv, vals, jac)
    if kind == "metric":
        return np.einsum("ki...,kl...,lj...->ij...", jac, vals, jac)
    if kind.startswith("form:"):
        k = int(kind.split(":")[1])
        return combi.pullback_linear_coef(vals, grid.d, k, jac)
    if kind == "christoffel":
        jinv = np.moveaxis(np.linalg.inv(np.moveaxis(jac, (0, 1), (-2, -1))), (-2, -1), (0, 1))
        return np.einsum("kc...,cab...,ai...,bj...->kij...", jinv, vals, jac, jac)
    raise UsageError(f"unknown field kind {kind!r}")


def pullback(grid: TorusGrid, kind: str, data: np.ndarray,
             phi: AffineMap | DisplacementMap) -> np.ndarray:
    """φ*T for tensor fields; exact regrid for affine maps, trigonometric
    interpolation for displacement maps."""
    if isinstance(phi, AffineMap):
        idx = np.indices(grid.shape)
        target = np.tensordot(phi.A, idx, axes=1) + phi.shift.reshape((grid.d,) + (1,) * grid.d)
        target %= grid.m
        gathered = data[(Ellipsis,) + tuple(target)]
        jac = constant_field(grid, phi.A.astype(float))
        return _transform_components(grid, kind, gathered, jac)
    u = phi.u
    jac = displacement_jacobian(grid, u)
    pts = (grid.coords() + u).reshape(grid.d, -1)
    vals = fourier_interpolate(grid, data, pts)
    vals = vals.reshape(vals.shape[:-1] + grid.shape)
    out = _transform_components(grid, kind, vals, jac)
    if kind == "christoffel":
        # inhomogeneous term (Dφ)^{-1} ∂²φ
        jinv = np.moveaxis(np.linalg.inv(np.moveaxis(jac, (0, 1), (-2, -1))), (-2, -1), (0, 1))
        hess = np.einsum("ijc...->cij...", grid.derivs(grid.derivs(u)))
        out = out + np.einsum("kc...,cij...->kij...", jinv, hess)
    return out


def inverse_displacement(grid: TorusGrid, u: np.ndarray,
                         tol: float = 1e-12, max_iter: int = 100) -> np.ndarray:
    """Displacement w with (id + u) ∘ (id + w) = id, by fixed-point iteration."""
    X = grid.coords().reshape(grid.d, -1)
    w = -u.reshape(grid.d, -1).copy()
    for _ in range(max_iter):
        w_new = -fourier_interpolate(grid, u, X + w)
        delta = np.max(np.abs(w_new - w))
        w = w_new
        if delta <= tol:
            return w.reshape((grid.d,) + grid.shape)
    raise NumericError("inverse_displacement did not converge", residual=float(delta))


def flow_rk4(grid: TorusGrid, v: np.ndarray, time: float, steps: int = 8):
    """Flow of v from the grid points; returns endpoints and Jacobians.

    Integrates dx/dt = v(x) and dD/dt = Dv(x)·D with RK4 and trigonometric
    interpolation of v and Dv.
    """
    d = grid.d
    dv = np.einsum("ji...->ij...", grid.derivs(v))  # Dv[i, j] = ∂_j v^i
    X = grid.coords().reshape(d, -1)
    P = X.shape[1]
    D = np.broadcast_to(np.eye(d)[:, :, None], (d, d, P)).copy()
    h = time / steps

    def rhs(x, dd):
        vx = fourier_interpolate(grid, v, x)
        dvx = fourier_interpolate(grid, dv, x)
        return vx, np.einsum("ikp,kjp->ijp", dvx, dd)

    for _ in range(steps):
        k1x, k1d = rhs(X, D)
        k2x, k2d = rhs(X + 0.5 * h * k1x, D + 0.5 * h * k1d)
        k3x, k3d = rhs(X + 0.5 * h * k2x, D + 0.5 * h * k2d)
        k4x, k4d = rhs(X + h * k3x, D + h * k3d)
        X = X + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        D = D + h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)
    return X, D


# ---------------------------------------------------------------------------
# snapshot container


@dataclass(frozen=True)
class Field:
    grid: TorusGrid
    kind: str
    data: np.ndarray
    lineage: dict = field(default_factory=dict)


def save_field(path, fld: Field) -> None:
    data = fld.data
    is_complex = np.iscomplexobj(data)
    if is_complex:
        data = np.stack([data.real, data.imag])
    data = np.ascontiguousarray(data, dtype="<f8")
    header = {
        "format": "geodesk-field",
        "version": 1,
        "n": fld.grid.n,
        "m": fld.grid.m,
        "kind": fld.kind,
        "complex": is_complex,
        "slot": list(data.shape[:data.ndim - fld.grid.d]),
        "lineage": fld.lineage,
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        fh.write(data.tobytes())


def load_field(path) -> Field:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise UsageError("not a geodesk field snapshot")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode())
        grid = TorusGrid(header["n"], header["m"])
        shape = tuple(header["slot"]) + grid.shape
        raw = np.frombuffer(fh.read(), dtype="<f8").reshape(shape)
    data = raw[0] + 1j * raw[1] if header["complex"] else raw.copy()
    return Field(grid, header["kind"], data, header.get("lineage", {}))

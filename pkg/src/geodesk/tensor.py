"""Pointwise multilinear algebra on an oriented 2n-dimensional real vector space.

Coordinates are ordered (x_1, .., x_n, y_1, .., y_n); the positive orientation
is dx_1∧dy_1∧…∧dx_n∧dy_n, which differs from the lexicographic top basis form
by the sign ``vol_sign(n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import combi
from .errors import DomainError, UsageError

MATRIX_TOL = 1e-12


def vol_sign(n: int) -> int:
    """Sign s with dx_1∧dy_1∧…∧dx_n∧dy_n = s · e_0∧e_1∧…∧e_{2n−1}."""
    return -1 if (n * (n - 1) // 2) % 2 else 1


def standard_j(n: int) -> np.ndarray:
    """J_0 with J_0(x, y) = (−y, x) in block coordinates."""
    z = np.zeros((n, n))
    eye = np.eye(n)
    return np.block([[z, -eye], [eye, z]])


def standard_omega_matrix(n: int) -> np.ndarray:
    """Matrix Ω of ω_0 = Σ dx_i∧dy_i, i.e. ω_0(u, v) = uᵀ Ω v."""
    z = np.zeros((n, n))
    eye = np.eye(n)
    return np.block([[z, eye], [-eye, z]])


@dataclass(frozen=True)
class SquareMatrix:
    """Real 2n×2n matrix; tagged constructors check group/algebra constraints."""

    n: int
    entries: np.ndarray
    tag: str = "general"

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", e)
        if e.shape != (2 * self.n, 2 * self.n):
            raise UsageError(f"expected shape {(2 * self.n, 2 * self.n)}, got {e.shape}")
        if not np.all(np.isfinite(e)):
            raise DomainError("matrix entries must be finite")

    @classmethod
    def general(cls, entries: np.ndarray) -> "SquareMatrix":
        entries = np.asarray(entries, dtype=float)
        return cls(entries.shape[0] // 2, entries)

    @classmethod
    def group(cls, entries: np.ndarray) -> "SquareMatrix":
        """Determinant-one (SL) element."""
        entries = np.asarray(entries, dtype=float)
        resid = abs(np.linalg.det(entries) - 1.0)
        if resid > MATRIX_TOL:
            raise DomainError(f"determinant differs from 1 by {resid:.3e}")
        return cls(entries.shape[0] // 2, entries, tag="group")

    @classmethod
    def algebra(cls, entries: np.ndarray) -> "SquareMatrix":
        """Trace-zero (sl) element."""
        entries = np.asarray(entries, dtype=float)
        resid = abs(np.trace(entries))
        if resid > MATRIX_TOL:
            raise DomainError(f"trace differs from 0 by {resid:.3e}")
        return cls(entries.shape[0] // 2, entries, tag="algebra")


def orientation_frame_det(J: np.ndarray) -> float:
    """Determinant of the greedy frame (e_1, J e_1, .., e_n, J e_n).

    Basis vectors are picked greedily from the standard basis so that each new
    pair is independent of the span built so far.
    """
    d = J.shape[0]
    cols: list[np.ndarray] = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        trial = cols + [e, J @ e]
        if np.linalg.matrix_rank(np.column_stack(trial), tol=1e-9) == len(trial):
            cols = trial
        if len(cols) == d:
            break
    if len(cols) != d:
        raise DomainError("could not complete a (e, Je) frame")
    frame = np.column_stack(cols)
    # Columns are ordered (e, Je, ...): positive det == standard orientation.
    return float(np.linalg.det(frame)) * vol_sign(d // 2)


@dataclass(frozen=True)
class LinCS:
    """Linear complex structure: J² = −1, compatible with the orientation."""

    matrix: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        J = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", J)
        object.__setattr__(self, "n", J.shape[0] // 2)
        resid = np.max(np.abs(J @ J + np.eye(J.shape[0])))
        if resid > MATRIX_TOL:
            raise DomainError(f"J² + 1 residual {resid:.3e}")
        if orientation_frame_det(J) <= 0:
            raise DomainError("J is not compatible with the orientation")

    @classmethod
    def standard(cls, n: int) -> "LinCS":
        return cls(standard_j(n))


@dataclass(frozen=True)
class AltFormPt:
    """Alternating k-form at a point, coefficients over increasing tuples.

    A bidegree tag (p, q, J) asserts the form is the (p, q)-eigencomponent of
    the circle action of J; the residual is checked at construction.
    """

    n: int
    degree: int
    coef: np.ndarray
    bidegree: tuple | None = None

    def __post_init__(self):
        c = np.asarray(self.coef)
        if not np.issubdtype(c.dtype, np.complexfloating):
            c = c.astype(float)
        object.__setattr__(self, "coef", c)
        if not 0 <= self.degree <= 2 * self.n:
            raise UsageError(f"degree {self.degree} out of range for dimension {2 * self.n}")
        if c.shape != (combi.n_combos(2 * self.n, self.degree),):
            raise UsageError(f"coefficient vector has wrong length {c.shape}")
        if not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be finite")
        if self.bidegree is not None:
            p, q, J = self.bidegree
            if p + q != self.degree:
                raise UsageError("bidegree tag must sum to the degree")
            Jm = J.matrix if isinstance(J, LinCS) else np.asarray(J)
            proj = combi.pq_project_coef(c.astype(complex), 2 * self.n, self.degree,
                                         Jm, p, q)
            resid = float(np.max(np.abs(proj - c)))
            if resid > 1e-12 * max(1.0, float(np.max(np.abs(c)))):
                raise DomainError(f"bidegree tag violated (residual {resid:.2e})")

    @classmethod
    def zero(cls, n: int, degree: int, complex_=False) -> "AltFormPt":
        dtype = complex if complex_ else float
        return cls(n, degree, np.zeros(combi.n_combos(2 * n, degree), dtype=dtype))

    @classmethod
    def from_matrix(cls, n: int, mat: np.ndarray) -> "AltFormPt":
        """2-form from its antisymmetric matrix a(e_i, e_j)."""
        mat = np.asarray(mat)
        cs = combi.combos(2 * n, 2)
        return cls(n, 2, np.array([mat[i, j] for i, j in cs]))

    def matrix(self) -> np.ndarray:
        """Antisymmetric matrix of a 2-form."""
        if self.degree != 2:
            raise UsageError("matrix() only applies to 2-forms")
        d = 2 * self.n
        out = np.zeros((d, d), dtype=self.coef.dtype)
        for idx, (i, j) in enumerate(combi.combos(d, 2)):
            out[i, j] = self.coef[idx]
            out[j, i] = -self.coef[idx]
        return out

    def __add__(self, other: "AltFormPt") -> "AltFormPt":
        self._check_same(other)
        return AltFormPt(self.n, self.degree, self.coef + other.coef)

    def __sub__(self, other: "AltFormPt") -> "AltFormPt":
        self._check_same(other)
        return AltFormPt(self.n, self.degree, self.coef - other.coef)

    def __rmul__(self, s) -> "AltFormPt":
        return AltFormPt(self.n, self.degree, s * self.coef)

    def conj(self) -> "AltFormPt":
        return AltFormPt(self.n, self.degree, np.conj(self.coef))

    def _check_same(self, other: "AltFormPt"):
        if self.n != other.n or self.degree != other.degree:
            raise UsageError("mismatched dimension or degree")

    def __call__(self, *vectors: np.ndarray):
        if len(vectors) != self.degree:
            raise UsageError(f"need {self.degree} vectors")
        return combi.eval_form_coef(self.coef, 2 * self.n, self.degree,
                                    [np.asarray(v, dtype=float) for v in vectors])

    def norm(self) -> float:
        return float(np.max(np.abs(self.coef))) if self.coef.size else 0.0


def basis_one_form(n: int, i: int) -> AltFormPt:
    c = np.zeros(2 * n)
    c[i] = 1.0
    return AltFormPt(n, 1, c)


def standard_volume(n: int) -> AltFormPt:
    c = np.zeros(1)
    c[0] = vol_sign(n)
    return AltFormPt(n, 2 * n, c)


def standard_omega(n: int) -> AltFormPt:
    return AltFormPt.from_matrix(n, standard_omega_matrix(n))


def wedge(a: AltFormPt, b: AltFormPt) -> AltFormPt:
    if a.n != b.n:
        raise UsageError("wedge: dimension mismatch")
    if a.degree + b.degree > 2 * a.n:
        raise UsageError("wedge: degree exceeds dimension")
    return AltFormPt(a.n, a.degree + b.degree,
                     combi.wedge_coef(a.coef, b.coef, 2 * a.n, a.degree, b.degree))


def contract(v: np.ndarray, a: AltFormPt) -> AltFormPt:
    if a.degree < 1:
        raise UsageError("contract: form must have degree >= 1")
    v = np.asarray(v)
    return AltFormPt(a.n, a.degree - 1, combi.interior_coef(v, a.coef, 2 * a.n, a.degree))


def pq_project(a: AltFormPt, J: LinCS, p: int, q: int) -> AltFormPt:
    if p + q != a.degree:
        raise UsageError("pq_project: p + q must equal the degree")
    if J.n != a.n:
        raise UsageError("pq_project: dimension mismatch")
    return AltFormPt(a.n, a.degree,
                     combi.pq_project_coef(a.coef, 2 * a.n, a.degree, J.matrix, p, q))


def j_star(a: AltFormPt, J: LinCS | np.ndarray) -> AltFormPt:
    """(J*a)(u_1..u_k) := a(J u_1, .., J u_k)."""
    Jm = J.matrix if isinstance(J, LinCS) else np.asarray(J)
    return AltFormPt(a.n, a.degree, combi.pullback_linear_coef(a.coef, 2 * a.n, a.degree, Jm))


def insert_j(a: AltFormPt, J: LinCS | np.ndarray) -> AltFormPt:
    """(ι(J)a)(u_1..u_k) := Σ_p a(u_1, .., J u_p, .., u_k)."""
    Jm = J.matrix if isinstance(J, LinCS) else np.asarray(J)
    return AltFormPt(a.n, a.degree, combi.derivation_coef(Jm, a.coef, 2 * a.n, a.degree))


def metric_from_pair(omega: AltFormPt, J: LinCS, tol: float = 1e-10) -> np.ndarray:
    """Metric g(u, v) = ω(u, Jv) of a compatible pair; checked SPD/symmetric."""
    W = omega.matrix()
    g = W @ J.matrix
    sym_resid = np.max(np.abs(g - g.T))
    if sym_resid > tol:
        raise DomainError(f"(ω, J) not compatible: g asymmetry {sym_resid:.3e}")
    eigs = np.linalg.eigvalsh(0.5 * (g + g.T))
    if eigs.min() <= 0:
        raise DomainError(f"(ω, J) not compatible: g has eigenvalue {eigs.min():.3e}")
    return 0.5 * (g + g.T)


def hodge_star_pt(a: AltFormPt, J: LinCS, omega: AltFormPt) -> AltFormPt:
    """Hodge star of the metric ω(·, J·) with orientation ω^n/n!."""
    if a.n != J.n or a.n != omega.n:
        raise UsageError("hodge_star_pt: dimension mismatch")
    g = metric_from_pair(omega, J)
    ginv = np.linalg.inv(g)
    sqrt_det = float(np.sqrt(np.linalg.det(g)))
    return AltFormPt(a.n, 2 * a.n - a.degree,
                     combi.star_coef(a.coef, 2 * a.n, a.degree, ginv, sqrt_det, vol_sign(a.n)))


def form_inner_pt(a: AltFormPt, b: AltFormPt, g: np.ndarray):
    """Pointwise inner product of equal-degree forms (Hermitian in the first)."""
    a._check_same(b)
    return combi.metric_inner_coef(a.coef, b.coef, 2 * a.n, a.degree, np.linalg.inv(g))

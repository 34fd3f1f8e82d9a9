"""Exterior-algebra kernels over strictly increasing index tuples.

Coefficient convention: a k-form is stored as an array whose first axis runs
over the lexicographically ordered strictly increasing k-tuples of
``range(dim)``, with ``a[idx(I)] = a(e_{I_0}, ..., e_{I_{k-1}})``.  All kernels
broadcast over arbitrary trailing axes, so the same code serves pointwise
values (no trailing axes) and sampled fields (grid trailing axes).
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np


@lru_cache(maxsize=None)
def combos(dim: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations(range(dim), k))


@lru_cache(maxsize=None)
def combo_index(dim: int, k: int) -> dict[tuple[int, ...], int]:
    return {c: i for i, c in enumerate(combos(dim, k))}


def n_combos(dim: int, k: int) -> int:
    return len(combos(dim, k))


def _merge_sign(I: tuple[int, ...], J: tuple[int, ...]) -> int:
    """Sign of sorting the concatenation I+J (disjoint, each increasing)."""
    inversions = sum(1 for a in I for b in J if a > b)
    return -1 if inversions % 2 else 1


def perm_sign_concat(I: tuple[int, ...], J: tuple[int, ...]) -> int:
    return _merge_sign(I, J)


@lru_cache(maxsize=None)
def _wedge_table(dim: int, p: int, q: int):
    idx_out = combo_index(dim, p + q)
    rows = []
    for ia, I in enumerate(combos(dim, p)):
        set_i = set(I)
        for ib, J in enumerate(combos(dim, q)):
            if set_i & set(J):
                continue
            K = tuple(sorted(I + J))
            rows.append((ia, ib, idx_out[K], _merge_sign(I, J)))
    arr = np.array(rows, dtype=np.int64).reshape(-1, 4)
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3].astype(np.float64)


def wedge_coef(a: np.ndarray, b: np.ndarray, dim: int, p: int, q: int) -> np.ndarray:
    """Coefficients of a ∧ b (shuffle/determinant convention)."""
    ia, ib, iout, sign = _wedge_table(dim, p, q)
    dtype = np.result_type(a.dtype, b.dtype)
    out = np.zeros((n_combos(dim, p + q),) + np.broadcast_shapes(a.shape[1:], b.shape[1:]), dtype=dtype)
    for r in range(len(iout)):
        out[iout[r]] += sign[r] * a[ia[r]] * b[ib[r]]
    return out


@lru_cache(maxsize=None)
def _interior_table(dim: int, k: int):
    idx_out = combo_index(dim, k - 1)
    rows = []
    for i_in, I in enumerate(combos(dim, k)):
        for pos, j in enumerate(I):
            rest = I[:pos] + I[pos + 1:]
            rows.append((i_in, j, idx_out[rest], -1 if pos % 2 else 1))
    arr = np.array(rows, dtype=np.int64).reshape(-1, 4)
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3].astype(np.float64)


def interior_coef(v: np.ndarray, a: np.ndarray, dim: int, k: int) -> np.ndarray:
    """Coefficients of the interior product ι(v) a."""
    i_in, j, i_out, sign = _interior_table(dim, k)
    dtype = np.result_type(v.dtype, a.dtype)
    out = np.zeros((n_combos(dim, k - 1),) + np.broadcast_shapes(a.shape[1:], v.shape[1:]), dtype=dtype)
    for r in range(len(i_out)):
        out[i_out[r]] += sign[r] * v[j[r]] * a[i_in[r]]
    return out


def det_batched(mat: np.ndarray) -> np.ndarray:
    """Determinant of a (k, k) + batch array along the two leading axes."""
    k = mat.shape[0]
    if k == 0:
        return np.ones(mat.shape[2:], dtype=mat.dtype)
    if k == 1:
        return mat[0, 0]
    if k == 2:
        return mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    if k == 3:
        return (mat[0, 0] * (mat[1, 1] * mat[2, 2] - mat[1, 2] * mat[2, 1])
                - mat[0, 1] * (mat[1, 0] * mat[2, 2] - mat[1, 2] * mat[2, 0])
                + mat[0, 2] * (mat[1, 0] * mat[2, 1] - mat[1, 1] * mat[2, 0]))
    return np.linalg.det(np.moveaxis(mat, (0, 1), (-2, -1)))


def pullback_linear_coef(a: np.ndarray, dim: int, k: int, A: np.ndarray) -> np.ndarray:
    """Coefficients of the pullback (A^* a)_I = sum_J a_J det(A[J, I])."""
    if k == 0:
        return a.copy()
    cs = combos(dim, k)
    out = np.zeros((len(cs),) + np.broadcast_shapes(a.shape[1:], A.shape[2:]),
                   dtype=np.result_type(a.dtype, A.dtype))
    for ii, I in enumerate(cs):
        for jj, J in enumerate(cs):
            out[ii] += a[jj] * det_batched(A[np.ix_(J, I)])
    return out


def metric_inner_coef(a: np.ndarray, b: np.ndarray, dim: int, k: int, ginv: np.ndarray) -> np.ndarray:
    """Pointwise inner product <a, b> of k-forms for the metric with inverse ginv.

    Hermitian in the first slot when coefficients are complex.
    """
    if k == 0:
        return np.conj(a[0]) * b[0]
    cs = combos(dim, k)
    out = 0.0
    for ii, I in enumerate(cs):
        for jj, J in enumerate(cs):
            out = out + np.conj(a[ii]) * b[jj] * det_batched(ginv[np.ix_(I, J)])
    return out


def star_coef(a: np.ndarray, dim: int, k: int, ginv: np.ndarray,
              sqrt_det_g: np.ndarray, orient_sign: int) -> np.ndarray:
    """Hodge star determined by a∧(*b) = <a,b> vol, vol the positive volume form.

    ``orient_sign`` is the sign making the lexicographic top basis form
    positively oriented (+1) or negatively oriented (−1).
    """
    cs_in = combos(dim, k)
    idx_out = combo_index(dim, dim - k)
    out = np.zeros((n_combos(dim, dim - k),) + np.broadcast_shapes(a.shape[1:], np.shape(sqrt_det_g)),
                   dtype=np.result_type(a.dtype, ginv.dtype))
    full = set(range(dim))
    for ii, I in enumerate(cs_in):
        comp = tuple(sorted(full - set(I)))
        eps = _merge_sign(I, comp)
        acc = 0.0
        for jj, J in enumerate(cs_in):
            acc = acc + a[jj] * det_batched(ginv[np.ix_(I, J)])
        out[idx_out[comp]] += eps * orient_sign * sqrt_det_g * acc
    return out


@lru_cache(maxsize=None)
def _derivation_table(dim: int, k: int):
    """Table for (E ▷ a)(v_1..v_k) = sum_p a(v_1, .., E v_p, .., v_k)."""
    idx = combo_index(dim, k)
    rows = []
    for i_out, I in enumerate(combos(dim, k)):
        for pos, col in enumerate(I):
            others = set(I) - {col}
            for j in range(dim):
                if j in others:
                    continue
                src = tuple(sorted(others | {j}))
                before = sum(1 for x in src if x < j)
                sign = (-1) ** (pos + before)
                rows.append((i_out, idx[src], j, col, sign))
    arr = np.array(rows, dtype=np.int64).reshape(-1, 5)
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4].astype(np.float64)


def derivation_coef(E: np.ndarray, a: np.ndarray, dim: int, k: int) -> np.ndarray:
    """Coefficients of the form whose value inserts E into one slot at a time."""
    i_out, i_src, j, col, sign = _derivation_table(dim, k)
    out = np.zeros((n_combos(dim, k),) + np.broadcast_shapes(a.shape[1:], E.shape[2:]),
                   dtype=np.result_type(a.dtype, E.dtype))
    for r in range(len(i_out)):
        out[i_out[r]] += sign[r] * E[j[r], col[r]] * a[i_src[r]]
    return out


def eval_form_coef(a: np.ndarray, dim: int, k: int, vectors: list[np.ndarray]) -> np.ndarray:
    """Evaluate a k-form on k vectors: sum_I a_I det(rows I of [v_1 .. v_k])."""
    if k == 0:
        return a[0]
    U = np.stack(vectors, axis=1)  # (dim, k) + batch
    out = 0.0
    for ii, I in enumerate(combos(dim, k)):
        out = out + a[ii] * det_batched(U[list(I)])
    return out


def pq_project_coef(a: np.ndarray, dim: int, k: int, J: np.ndarray, p: int, q: int) -> np.ndarray:
    """(p, q)-component relative to J via an exact circle average.

    Pulls back by R_t = cos(t) + sin(t) J (exact since J² = −1) and weights by
    e^{−i(p−q)t}; the integrand is a trig polynomial of degree ≤ k in t, so
    2k + 2 equispaced samples integrate it exactly.
    """
    if p + q != k:
        raise ValueError("p + q must equal the form degree")
    nsamp = 2 * k + 2
    eye = np.eye(dim)
    if J.ndim > 2:
        eye = eye.reshape((dim, dim) + (1,) * (J.ndim - 2))
    out = np.zeros(a.shape, dtype=complex)
    for s in range(nsamp):
        t = 2.0 * np.pi * s / nsamp
        R = np.cos(t) * eye + np.sin(t) * J
        out = out + np.exp(-1j * (p - q) * t) * pullback_linear_coef(a, dim, k, R)
    return out / nsamp


def interior_pairs_coef(N: np.ndarray, theta: np.ndarray, dim: int, k: int) -> np.ndarray:
    """Insert a TM-valued 2-form N into a k-form θ over all slot pairs.

    Returns the (k+1)-form with value
    sum_{i<j} (−1)^{i+j−1} θ(N(v_i, v_j), v_1, .., v̂_i, .., v̂_j, .., v_{k+1});
    N has layout N[l, i, j] = l-th component of N(e_i, e_j).
    """
    idx_th = combo_index(dim, k)
    cs_out = combos(dim, k + 1)
    out = np.zeros((len(cs_out),) + np.broadcast_shapes(theta.shape[1:], N.shape[3:]),
                   dtype=np.result_type(theta.dtype, N.dtype))
    for i_out, K in enumerate(cs_out):
        acc = 0.0
        for pi in range(k + 1):
            for pj in range(pi + 1, k + 1):
                rest = tuple(x for r, x in enumerate(K) if r not in (pi, pj))
                pair_sign = (-1) ** (pi + pj - 1)
                for l in range(dim):
                    if l in rest:
                        continue
                    ins = tuple(sorted((l,) + rest))
                    before = sum(1 for x in rest if x < l)
                    sgn = pair_sign * ((-1) ** before)
                    acc = acc + sgn * N[l, K[pi], K[pj]] * theta[idx_th[ins]]
        out[i_out] = acc
    return out

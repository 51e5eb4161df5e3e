"""Dense matrix kernel.

Vectorization is *row* stacking throughout: ``vec_row([[a, b], [c, d]]) ==
(a, b, c, d)``.  In that convention ``vec_row(A @ B @ C) == kron(A, C.T) @
vec_row(B)``, which is the identity the moment lifts are written in.

``svec`` keeps the upper triangle row by row (diagonal included), and
``dup_matrix(n)`` is the 0/1 matrix with ``vec_row(X) == H @ svec(X)`` for
symmetric ``X``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ModelError, NonRegularPencilError

SYM_TOL = 1e-9


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.atleast_2d(np.asarray(a, dtype=float))
    if m.ndim != 2:
        raise ModelError(f"{name}: expected a 2-D array, got shape {m.shape}")
    if m.size == 0:
        raise ModelError(f"{name}: empty matrix")
    if not np.all(np.isfinite(m)):
        raise ModelError(f"{name}: non-finite entries")
    return m


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def vec_row(a) -> np.ndarray:
    return np.asarray(a, dtype=float).reshape(-1)


def mat_from_vec(v, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != rows * cols:
        raise ValueError(f"length {v.size} does not match {rows}x{cols}")
    return v.reshape(rows, cols).copy()


def svec_dim(n: int) -> int:
    return n * (n + 1) // 2


def _svec_order(n: int) -> list[tuple[int, int]]:
    return [(k, s) for k in range(n) for s in range(k, n)]


def is_symmetric(x, tol: float = SYM_TOL) -> bool:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        return False
    return bool(np.max(np.abs(x - x.T), initial=0.0) <= tol * max(1.0, np.max(np.abs(x), initial=0.0)))


def svec(x, tol: float = SYM_TOL) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not is_symmetric(x, tol):
        raise ValueError("svec: input is not symmetric")
    iu = np.triu_indices(x.shape[0])
    # row-major upper triangle, matches _svec_order
    return x[iu].copy()


def smat(v, n: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if n is None:
        n = int(round((math.sqrt(8 * v.size + 1) - 1) / 2))
    if v.size != svec_dim(n):
        raise ValueError(f"smat: length {v.size} is not n(n+1)/2 for n={n}")
    x = np.zeros((n, n))
    x[np.triu_indices(n)] = v
    return x + np.triu(x, 1).T


def dup_matrix(n: int, blocks: int = 1) -> np.ndarray:
    """Duplication matrix H_n (blocks=1) or diag(H_n, ..., H_n).

    ``H[k*n + s, idx(min(k, s), max(k, s))] = 1`` where ``idx`` enumerates
    the svec order.
    """
    if n < 1 or blocks < 1:
        raise ValueError("dup_matrix: n and blocks must be >= 1")
    idx = {ks: c for c, ks in enumerate(_svec_order(n))}
    h = np.zeros((n * n, svec_dim(n)))
    for k in range(n):
        for s in range(n):
            h[k * n + s, idx[(min(k, s), max(k, s))]] = 1.0
    if blocks == 1:
        return h
    return sla.block_diag(*([h] * blocks))


def svec_operator(kmat: np.ndarray, n: int) -> np.ndarray:
    """Matrix of X -> mat(kmat @ vec_row(X)) in svec coordinates.

    Only meaningful when kmat maps symmetric matrices to symmetric matrices.
    """
    h = dup_matrix(n)
    return np.linalg.solve(h.T @ h, h.T @ kmat @ h)


def default_tol(a: np.ndarray, smax: float | None = None) -> float:
    if smax is None:
        smax = np.linalg.norm(a, 2) if a.size else 0.0
    return max(a.shape) * np.finfo(float).eps * smax


def rank(a, tol: float | None = None) -> int:
    """Number of singular values above ``tol`` (relative to the largest).

    ``tol=None`` uses max(m, n) * eps.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    rel = max(a.shape) * np.finfo(float).eps if tol is None else tol
    return int(np.sum(s > rel * s[0]))


def pinv(a) -> np.ndarray:
    try:
        return np.linalg.pinv(np.asarray(a, dtype=float))
    except np.linalg.LinAlgError as exc:  # SVD did not converge
        raise ArithmeticError(f"pinv: {exc}") from exc


def null_basis(a, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis of {x : a @ x = 0}; shape (cols, 0) for a trivial kernel."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    _, s, vt = np.linalg.svd(a)
    r = rank(a, tol) if s.size else 0
    return vt[r:].T.copy()


def eig_sym(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if not is_symmetric(s, 1e-8):
        raise ValueError("eig_sym: input is not symmetric")
    return np.linalg.eigvalsh((s + s.T) / 2)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    abscissa: float
    radius: float


def spectrum_of(eigenvalues) -> Spectrum:
    ev = np.asarray(eigenvalues, dtype=complex)
    if ev.size == 0:
        return Spectrum(ev, -math.inf, 0.0)
    return Spectrum(ev, float(np.max(ev.real)), float(np.max(np.abs(ev))))


def eig_general(m) -> Spectrum:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("eig_general: square matrix required")
    return spectrum_of(np.linalg.eigvals(m))


def pencil_degree(e, a, rel_tol: float = 1e-8) -> float:
    """Degree of s -> det(sE - A).

    Returns ``-math.inf`` when the polynomial vanishes identically (the
    pencil is not regular); callers must not read that as degree 0.
    """
    e = np.asarray(e, dtype=float)
    a = np.asarray(a, dtype=float)
    if e.shape != a.shape or e.shape[0] != e.shape[1]:
        raise ValueError("pencil_degree: E and A must be square and of equal shape")
    n = e.shape[0]
    ne = np.linalg.norm(e, 2)
    na = np.linalg.norm(a, 2)
    scale = na / ne if ne > 0 and na > 0 else 1.0
    k = np.arange(n + 1)
    u = 2.0 * np.cos((2 * k + 1) * np.pi / (2 * (n + 1)))  # Chebyshev nodes in [-2, 2]
    dets = np.array([np.linalg.det(ui * scale * e - a) for ui in u])
    ref = max((abs(ui) * scale * ne + na) ** n for ui in u)
    if ref == 0.0 or np.max(np.abs(dets)) <= 1e-12 * ref:
        return -math.inf
    coef = np.linalg.solve(np.vander(u, increasing=True), dets)
    big = np.max(np.abs(coef))
    return float(np.flatnonzero(np.abs(coef) > rel_tol * big).max())


def pencil_regular(e, a) -> bool:
    return pencil_degree(e, a) != -math.inf


def pencil_finite_eigs_by_fit(e, a) -> np.ndarray:
    """Roots of det(sE - A) via polynomial interpolation (independent oracle)."""
    e = np.asarray(e, dtype=float)
    a = np.asarray(a, dtype=float)
    deg = pencil_degree(e, a)
    if deg == -math.inf:
        raise NonRegularPencilError("pencil is not regular")
    n = e.shape[0]
    k = np.arange(n + 1)
    u = 2.0 * np.cos((2 * k + 1) * np.pi / (2 * (n + 1)))
    dets = np.array([np.linalg.det(ui * e - a) for ui in u])
    coef = np.linalg.solve(np.vander(u, increasing=True), dets)[: int(deg) + 1]
    return np.roots(coef[::-1])

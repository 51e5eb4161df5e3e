"""Restricted equivalence forms, impulse/causality tests and slow subsystems.

A single (mode independent) pair M, N is taken from the SVD of E::

    E = U diag(s_r, 0) V^T,   M = diag(s_r^-1, I) U^T,   N = V

so that ``M E N = diag(I_r, 0)``.  Under rank[E C(i)] = rank E the bottom
n - r rows of ``M C(i) N`` vanish, and the slow coordinate xi1 (first block
of ``N^-1 x``) is the same for every mode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import linalg
from .errors import AssumptionError, ImpulsiveError, ModelError, NonRegularPencilError
from .model import Model

FORM_TOL = 1e-9
INVERT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class RestrictedForm:
    M: np.ndarray
    N: np.ndarray
    r: int
    A11: tuple
    A12: tuple
    A21: tuple
    A22: tuple
    C11: tuple
    C12: tuple

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def modes(self) -> int:
        return len(self.A11)

    def drift(self, i: int) -> np.ndarray:
        """The full transformed drift M A(i) N."""
        return np.block([[self.A11[i], self.A12[i]], [self.A21[i], self.A22[i]]])


@dataclass(frozen=True, eq=False)
class SlowSubsystem:
    """Per-mode slow dynamics on xi1 plus what is needed to rebuild x.

    ``K[i] = A22(i)^-1 A21(i)`` so that ``xi2 = -K[i] xi1`` in mode i, and
    ``x = N @ concat(xi1, xi2)``.
    """
    A1: tuple
    C1: tuple
    K: tuple
    N: np.ndarray
    r: int

    def embedding(self, i: int) -> np.ndarray:
        """n x r matrix T with x = T @ xi1 in mode i."""
        return self.N @ np.vstack([np.eye(self.r), -self.K[i]])


@dataclass
class StructureVerdict:
    kind: str
    regular: list[bool]
    impulse_free: list[bool]
    degree_matches_rank: list[bool]
    mechanism: list[str]
    diagnostics: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return all(a == b for a, b in zip(self.impulse_free, self.degree_matches_rank))

    @property
    def ok(self) -> bool:
        return all(self.impulse_free)

    @property
    def label(self) -> str:
        return "impulse_free" if self.kind == "continuous" else "causal"

    def to_dict(self) -> dict:
        return {
            "regular": self.regular,
            self.label: self.impulse_free,
            "degree_equals_rank": self.degree_matches_rank,
            "mechanism": self.mechanism,
            "diagnostics": list(self.diagnostics),
        }


def _rel(x: np.ndarray, scale: float) -> float:
    return float(np.max(np.abs(x), initial=0.0)) / max(1.0, scale)


def svd_pair(E: np.ndarray, tol: float | None = None) -> tuple[np.ndarray, np.ndarray, int]:
    u, s, vt = np.linalg.svd(E)
    r = linalg.rank(E, tol)
    d = np.ones(E.shape[0])
    d[:r] = 1.0 / s[:r]
    return d[:, None] * u.T, vt.T.copy(), r


def restricted_form(m: Model, M=None, N=None) -> RestrictedForm:
    """Common restricted form of all modes; M, N may be supplied and are checked."""
    E = m.E
    if M is None and N is None:
        M, N, r = svd_pair(E)
    elif M is None or N is None:
        raise ValueError("supply both M and N, or neither")
    else:
        M = np.asarray(M, dtype=float)
        N = np.asarray(N, dtype=float)
        r = m.r
    n = m.n
    if linalg.rank(M) < n or linalg.rank(N) < n:
        raise ModelError("M and N must be nonsingular")
    scale = np.linalg.norm(M, 2) * np.linalg.norm(N, 2)
    target = np.zeros((n, n))
    target[:r, :r] = np.eye(r)
    res = _rel(M @ E @ N - target, scale * np.linalg.norm(E, 2))
    if res > FORM_TOL:
        raise ModelError(f"M E N differs from diag(I_r, 0) by {res:.2e}")
    blocks = {k: [] for k in ("A11", "A12", "A21", "A22", "C11", "C12")}
    for i, (a, c) in enumerate(zip(m.A, m.C)):
        ab = M @ a @ N
        cb = M @ c @ N
        bottom = _rel(cb[r:], scale * np.linalg.norm(c, 2))
        if bottom > FORM_TOL:
            raise AssumptionError(
                f"mode {i + 1}: bottom rows of M C N are nonzero ({bottom:.2e}); rank[E C] > rank E"
            )
        blocks["A11"].append(ab[:r, :r])
        blocks["A12"].append(ab[:r, r:])
        blocks["A21"].append(ab[r:, :r])
        blocks["A22"].append(ab[r:, r:])
        blocks["C11"].append(cb[:r, :r])
        blocks["C12"].append(cb[:r, r:])
    return RestrictedForm(M=M, N=N, r=r, **{k: tuple(v) for k, v in blocks.items()})


def fast_block_invertible(a22: np.ndarray, scale: float | None = None, tol: float = INVERT_TOL) -> bool:
    """Smallest singular value of A22 above tol * scale.

    ``scale`` should be the norm of the whole transformed drift; the norm of
    A22 alone makes the test vacuous for a 1x1 block.
    """
    if a22.size == 0:
        return True
    s = np.linalg.svd(a22, compute_uv=False)
    ref = s[0] if scale is None else max(scale, s[0])
    return bool(s[-1] > tol * max(ref, np.finfo(float).tiny))


def impulse_check(m: Model, rf: RestrictedForm) -> StructureVerdict:
    """Invertibility of A22(i), cross-checked against deg det(sE - A(i)) = rank E."""
    regular, free, deg_ok, mech, diag = [], [], [], [], []
    for i, a in enumerate(m.A):
        deg = linalg.pencil_degree(m.E, a)
        inv = fast_block_invertible(rf.A22[i], np.linalg.norm(rf.drift(i), 2))
        regular.append(deg != -math.inf)
        free.append(inv)
        deg_ok.append(deg == rf.r)
        if rf.r == m.n:
            mech.append("full-rank E")
        elif inv:
            mech.append("A22 invertible")
        else:
            mech.append("A22 singular")
        if inv != (deg == rf.r):
            diag.append(
                f"mode {i + 1}: numerical failure, A22 invertibility ({inv}) disagrees with "
                f"deg det(sE-A) = {deg} vs rank E = {rf.r}"
            )
    return StructureVerdict(m.kind, regular, free, deg_ok, mech, diag)


def slow_subsystem(rf: RestrictedForm) -> SlowSubsystem:
    A1, C1, K = [], [], []
    for i in range(rf.modes):
        if not fast_block_invertible(rf.A22[i], np.linalg.norm(rf.drift(i), 2)):
            raise ImpulsiveError(f"mode {i + 1}: A22 is singular")
        k = np.linalg.solve(rf.A22[i], rf.A21[i]) if rf.r < rf.n else np.zeros((0, rf.r))
        A1.append(rf.A11[i] - rf.A12[i] @ k)
        C1.append(rf.C11[i] - rf.C12[i] @ k)
        K.append(k)
    return SlowSubsystem(tuple(A1), tuple(C1), tuple(K), rf.N, rf.r)


ALPHA_CANDIDATES = (0.0, 1.0, -1.0, 2.0, -2.0, 5.0, -5.0, 10.0, -10.0)


def pencil_slow_part(E, A, rel_tol: float = 1e-8) -> tuple[np.ndarray, int]:
    """Real matrix J whose spectrum is the finite spectrum of (E, A).

    With ``W = (aE - A)^-1 E`` a finite eigenvalue lam of the pencil maps to
    ``1 / (a - lam)`` and infinite ones to 0; the dominant invariant subspace
    of W (ordered real Schur form) gives J = a I - T11^-1.
    """
    E = np.asarray(E, dtype=float)
    A = np.asarray(A, dtype=float)
    ne, na = np.linalg.norm(E, 2), np.linalg.norm(A, 2)
    if ne == 0.0:
        return np.zeros((0, 0)), 0
    scale = na / ne if na > 0 else 1.0
    for c in ALPHA_CANDIDATES:
        alpha = c * scale
        pen = alpha * E - A
        s = np.linalg.svd(pen, compute_uv=False)
        if s[-1] > 1e-10 * max(s[0], np.finfo(float).tiny):
            break
    else:
        raise NonRegularPencilError("alpha E - A singular for every candidate alpha")
    W = np.linalg.solve(pen, E)
    cut = rel_tol * np.linalg.norm(W, 2)
    T, Z, dim = sla.schur(W, output="real", sort=lambda x, y: math.hypot(x, y) > cut)
    if dim == 0:
        return np.zeros((0, 0)), 0
    T11 = T[:dim, :dim]
    J = alpha * np.eye(dim) - np.linalg.inv(T11)
    return J, int(dim)

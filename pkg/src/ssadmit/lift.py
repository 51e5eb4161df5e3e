"""Second-moment lifts onto svec coordinates.

Continuous::

    Es = H^T diag(E (x) E) H
    As = H^T [diag(A(i) (x) E + E (x) A(i) + C(i) (x) C(i)) + K diag(E (x) E)] H

with ``K = Pi (x) I`` (``coupling="as-paper"``) or ``K = Pi^T (x) I``
(``coupling="adjoint"``, the default).  The adjoint form is the one the
per-mode moments X_i = E[x x^T 1{r=i}] actually obey.

Discrete::

    As = H^T (Lam^T (x) I) diag(A(i) (x) A(i) + C(i) (x) C(i)) H

For a singular E the continuous lift has identically zero rows (the
F^T(.)F block of every mode equation reads 0 = 0), so det(s Es - As) is
identically zero.  ``closure=True`` adds ``H^T diag((P_F A(i)) (x) (P_F A(i))) H``
with P_F the orthogonal projector onto null(E^T); this fills exactly those
rows with the algebraic constraint F^T A(i) X_i A(i)^T F = 0 and leaves all
other rows untouched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import linalg
from .errors import ModelError
from .model import Model

COUPLINGS = ("adjoint", "as-paper")


@dataclass(frozen=True, eq=False)
class LiftedSystem:
    Escript: np.ndarray
    Ascript: np.ndarray
    kind: str
    coupling: str
    closure: bool
    n: int
    N: int

    @property
    def dim(self) -> int:
        return self.Escript.shape[0]

    def as_model(self) -> Model:
        """The lift as an N=1, C=0 model of the same kind."""
        trans = [[0.0]] if self.kind == "continuous" else [[1.0]]
        d = self.dim
        return Model(kind=self.kind, E=self.Escript, A=(self.Ascript,), C=(np.zeros((d, d)),),
                     transition=np.array(trans), name=f"lift ({self.coupling})")


def _ee_blocks(E: np.ndarray, N: int) -> np.ndarray:
    return sla.block_diag(*([np.kron(E, E)] * N))


def lifted_E(m: Model) -> np.ndarray:
    H = linalg.dup_matrix(m.n, m.N)
    return H.T @ _ee_blocks(m.E, m.N) @ H


def null_projector(E: np.ndarray) -> np.ndarray:
    F = linalg.null_basis(E.T)
    return F @ F.T


def lift_continuous(m: Model, coupling: str = "adjoint", closure: bool = False) -> LiftedSystem:
    if m.kind != "continuous":
        raise ModelError("lift_continuous needs a continuous model")
    if coupling not in COUPLINGS:
        raise ValueError(f"coupling must be one of {COUPLINGS}")
    n, N, E = m.n, m.N, m.E
    H = linalg.dup_matrix(n, N)
    EE = _ee_blocks(E, N)
    drift = sla.block_diag(*[
        np.kron(a, E) + np.kron(E, a) + np.kron(c, c) for a, c in zip(m.A, m.C)
    ])
    Pi = m.transition if coupling == "as-paper" else m.transition.T
    inner = drift + np.kron(Pi, np.eye(n * n)) @ EE
    if closure:
        PF = null_projector(E)
        inner = inner + sla.block_diag(*[np.kron(PF @ a, PF @ a) for a in m.A])
    return LiftedSystem(H.T @ EE @ H, H.T @ inner @ H, "continuous", coupling, closure, n, N)


def lift_discrete(m: Model) -> LiftedSystem:
    if m.kind != "discrete":
        raise ModelError("lift_discrete needs a discrete model")
    n, N = m.n, m.N
    H = linalg.dup_matrix(n, N)
    D = sla.block_diag(*[np.kron(a, a) + np.kron(c, c) for a, c in zip(m.A, m.C)])
    As = H.T @ np.kron(m.transition.T, np.eye(n * n)) @ D @ H
    return LiftedSystem(lifted_E(m), As, "discrete", "adjoint", False, n, N)


def lift(m: Model, coupling: str = "adjoint", closure: bool = False) -> LiftedSystem:
    if m.kind == "continuous":
        return lift_continuous(m, coupling, closure)
    return lift_discrete(m)


def moment_rate(m: Model, X: list[np.ndarray], coupling: str = "adjoint") -> list[np.ndarray]:
    """Right-hand side of the E-weighted moment equation, computed matrix-wise.

    Returns, per mode i, ``A X_i E^T + E X_i A^T + C X_i C^T + sum_j p_ji E X_j E^T``
    (``p_ij`` instead for the as-paper coupling).  Used to check the lift.
    """
    E = m.E
    Pi = m.transition if coupling == "as-paper" else m.transition.T
    out = []
    for i, (a, c) in enumerate(zip(m.A, m.C)):
        y = a @ X[i] @ E.T + E @ X[i] @ a.T + c @ X[i] @ c.T
        for j in range(m.N):
            y = y + Pi[i, j] * E @ X[j] @ E.T
        out.append(y)
    return out

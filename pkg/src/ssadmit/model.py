"""System quintuple, model-file I/O and structural validation.

Model file (JSON)::

    {"kind": "continuous" | "discrete", "n": 2, "N": 2,
     "E": [[...]], "A": [[[...]], ...] | "G": [[[...]], ...],
     "C": [[[...]], ...], "transition": [[...]],
     "x0": [...], "r0": 1, "name": "..."}

``G`` (discrete only) is the Leontief input-output form; it is converted on
load with ``A(i) = I - G(i) + E``.  ``x0``/``r0`` are optional simulation
defaults; ``r0`` counts modes from 1 as the file does everywhere (the
in-memory ``Model.r0`` is zero-based).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import linalg
from .errors import ModelError

KINDS = ("continuous", "discrete")
ROW_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Model:
    kind: str
    E: np.ndarray
    A: tuple
    C: tuple
    transition: np.ndarray
    x0: np.ndarray | None = None
    r0: int = 0
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        E = linalg.as_matrix(self.E, "E")
        if E.shape[0] != E.shape[1]:
            raise ModelError(f"E must be square, got {E.shape}")
        n = E.shape[0]
        A = tuple(linalg.as_matrix(a, f"A({i + 1})") for i, a in enumerate(self.A))
        C = tuple(linalg.as_matrix(c, f"C({i + 1})") for i, c in enumerate(self.C))
        if not A:
            raise ModelError("at least one mode is required")
        if len(C) != len(A):
            raise ModelError(f"{len(A)} drift matrices but {len(C)} diffusion matrices")
        for label, mats in (("A", A), ("C", C)):
            for i, m in enumerate(mats):
                if m.shape != (n, n):
                    raise ModelError(f"{label}({i + 1}) has shape {m.shape}, expected {(n, n)}")
        T = linalg.as_matrix(self.transition, "transition")
        if T.shape != (len(A), len(A)):
            raise ModelError(f"transition has shape {T.shape}, expected {(len(A), len(A))}")
        x0 = None
        if self.x0 is not None:
            x0 = np.asarray(self.x0, dtype=float).reshape(-1)
            if x0.size != n or not np.all(np.isfinite(x0)):
                raise ModelError(f"x0 must be a finite vector of length {n}")
        if not 0 <= int(self.r0) < len(A):
            raise ModelError(f"r0={self.r0} out of range for {len(A)} modes")
        for arr in (E, T, *A, *C):
            arr.setflags(write=False)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "transition", T)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "r0", int(self.r0))

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @property
    def N(self) -> int:
        return len(self.A)

    @property
    def r(self) -> int:
        return linalg.rank(self.E)

    @property
    def continuous(self) -> bool:
        return self.kind == "continuous"

    def summary(self) -> dict:
        return {"name": self.name, "kind": self.kind, "n": self.n, "N": self.N, "rank_E": self.r}


def _mats(obj, key, count=None):
    try:
        arr = [np.asarray(m, dtype=float) for m in obj[key]]
    except (TypeError, ValueError) as exc:
        raise ModelError(f"{key}: {exc}") from exc
    if count is not None and len(arr) != count:
        raise ModelError(f"{key}: expected {count} matrices, got {len(arr)}")
    return arr


def _file_mode(r0, N: int) -> int:
    if not isinstance(r0, int) or not 1 <= r0 <= N:
        raise ModelError(f"r0 must be a mode number in 1..{N}")
    return r0 - 1


def model_from_dict(obj: dict) -> Model:
    if not isinstance(obj, dict):
        raise ModelError("model file must contain a JSON object")
    for key in ("kind", "n", "N", "E", "C", "transition"):
        if key not in obj:
            raise ModelError(f"missing field {key!r}")
    kind = obj["kind"]
    if kind not in KINDS:
        raise ModelError(f"unknown kind {kind!r}")
    n, N = obj["n"], obj["N"]
    if not (isinstance(n, int) and isinstance(N, int)) or n < 1 or N < 1:
        raise ModelError("n and N must be positive integers")
    try:
        E = np.asarray(obj["E"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"E: {exc}") from exc
    if E.shape != (n, n):
        raise ModelError(f"E has shape {E.shape}, declared n={n}")
    if ("A" in obj) == ("G" in obj):
        raise ModelError("exactly one of 'A' and 'G' must be given")
    if "G" in obj:
        if kind != "discrete":
            raise ModelError("'G' (Leontief form) is only defined for discrete models")
        G = _mats(obj, "G", N)
        for i, g in enumerate(G):
            if g.shape != (n, n):
                raise ModelError(f"G({i + 1}) has shape {g.shape}, expected {(n, n)}")
        A = [np.eye(n) - g + E for g in G]
    else:
        A = _mats(obj, "A", N)
    C = _mats(obj, "C", N)
    return Model(
        kind=kind,
        E=E,
        A=tuple(A),
        C=tuple(C),
        transition=np.asarray(obj["transition"], dtype=float),
        x0=obj.get("x0"),
        r0=_file_mode(obj.get("r0", 1), N),
        name=str(obj.get("name", "")),
    )


def load_model(text: str) -> Model:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON: {exc}") from exc
    return model_from_dict(obj)


def read_model(path) -> Model:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelError(f"cannot read {path}: {exc}") from exc
    return load_model(text)


def model_to_dict(m: Model) -> dict:
    out = {
        "kind": m.kind,
        "n": m.n,
        "N": m.N,
        "E": m.E.tolist(),
        "A": [a.tolist() for a in m.A],
        "C": [c.tolist() for c in m.C],
        "transition": m.transition.tolist(),
    }
    if m.x0 is not None:
        out["x0"] = m.x0.tolist()
    if m.r0:
        out["r0"] = m.r0 + 1
    if m.name:
        out["name"] = m.name
    return out


def save_model(m: Model) -> str:
    return json.dumps(model_to_dict(m), indent=2)


@dataclass
class ValidationReport:
    rank_E: int
    assumption1: list[bool]
    regular: list[bool]
    transition_ok: bool
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.transition_ok and all(self.assumption1) and all(self.regular)

    def to_dict(self) -> dict:
        return {
            "rank_E": self.rank_E,
            "assumption1": self.assumption1,
            "regular": self.regular,
            "transition_ok": self.transition_ok,
            "notes": list(self.notes),
        }


def check_transition(kind: str, T: np.ndarray) -> list[str]:
    problems = []
    off = T - np.diag(np.diag(T))
    if kind == "continuous":
        if np.any(off < -ROW_TOL):
            problems.append("generator has negative off-diagonal rates")
        sums = T.sum(axis=1)
        if np.any(np.abs(sums) > ROW_TOL):
            problems.append(f"generator rows must sum to 0 (got {sums.tolist()})")
    else:
        if np.any(T < -ROW_TOL):
            problems.append("transition matrix has negative probabilities")
        sums = T.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ROW_TOL):
            problems.append(f"transition rows must sum to 1 (got {sums.tolist()})")
    return problems


def assumption1(m: Model, tol: float | None = None) -> list[bool]:
    r = linalg.rank(m.E, tol)
    return [linalg.rank(np.hstack([m.E, c]), tol) == r for c in m.C]


def validate(m: Model) -> ValidationReport:
    """Structural checks; never raises on a failed check, the report carries it."""
    r = m.r
    a1 = assumption1(m)
    regular = [linalg.pencil_degree(m.E, a) != -math.inf for a in m.A]
    problems = check_transition(m.kind, m.transition)
    notes = list(problems)
    for i, ok in enumerate(a1):
        if not ok:
            notes.append(f"mode {i + 1}: rank[E C] > rank E (common restricted form unavailable)")
    for i, ok in enumerate(regular):
        if not ok:
            notes.append(f"mode {i + 1}: det(sE - A) vanishes identically")
    return ValidationReport(rank_E=r, assumption1=a1, regular=regular,
                            transition_ok=not problems, notes=notes)

"""LMI criteria, feasibility engine and plug-in certificate verification.

Every criterion is assembled as a list of :class:`AffineMatrixForm`, a
symmetric matrix-valued function affine in named decision variables.  The
same forms are evaluated with numpy arrays (verification) or cvxpy
variables (solving), so a certificate is always re-checked by plain
eigenvalue computation before it is reported.

Methods
-------
thm3  continuous, strict:  A'(PE+FQ) + (PE+FQ)'A + sum_j pi_ij E'P_j E + C'E+'E'P E E+C < 0, P > 0
thm6  discrete, strict:    A'(sum_j lam_ij P_j + FQF')A + C'(...)C - E'P_i E < 0, P > 0
cor1  lifted continuous:   (P Es + S Q)' As + As'(P Es + S Q) < 0, P > 0
thm2  continuous, verification only (equality E'P = P'E, E'P >= 0)
thm5  discrete, verification only (E'PE >= 0, P symmetric indefinite)
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import linalg
from .errors import ModelError
from .lift import LiftedSystem, lift
from .model import Model, assumption1

log = logging.getLogger(__name__)

METHODS = ("thm2", "thm3", "thm5", "thm6", "cor1")
F_TOL = 1e-10
DEFAULT_EPS = 1e-6


@dataclass(frozen=True)
class Variable:
    name: str
    shape: tuple
    symmetric: bool


@dataclass(frozen=True, eq=False)
class Term:
    """weight * L @ V @ R, plus its transpose when ``herm`` is set."""
    var: str
    left: np.ndarray
    right: np.ndarray
    herm: bool = False
    weight: float = 1.0


@dataclass(eq=False)
class AffineMatrixForm:
    name: str
    sense: str  # "neg": < 0, "pos": > 0, "psd": >= 0
    constant: np.ndarray
    terms: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.constant.shape[0]

    def evaluate(self, values: dict):
        out = self.constant
        for t in self.terms:
            x = t.left @ values[t.var] @ t.right
            if t.herm:
                x = x + x.T
            out = out + t.weight * x
        return out


@dataclass(eq=False)
class LmiProblem:
    method: str
    variables: list
    forms: list
    F: np.ndarray
    equalities: list = field(default_factory=list)  # (name, callable(values) -> residual)

    def variable(self, name: str) -> Variable:
        return next(v for v in self.variables if v.name == name)


# -- null-space factor -----------------------------------------------------

def build_F(E) -> np.ndarray:
    """Orthonormal basis of null(E^T), n x (n - r)."""
    return linalg.null_basis(np.asarray(E, dtype=float).T)


def check_F(E: np.ndarray, F: np.ndarray, tol: float = F_TOL) -> dict:
    """Residuals of both E^T F = 0 (required) and E F = 0 (informational)."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if F.size and F.shape[0] != E.shape[0]:
        raise ModelError(f"F has {F.shape[0]} rows, expected {E.shape[0]}")
    fscale = max(1.0, float(np.linalg.norm(F, 2))) if F.size else 1.0
    scale = fscale * max(1.0, float(np.linalg.norm(E, 2)))
    etf = E.T @ F if F.size else np.zeros((E.shape[0], 0))
    ef = E @ F if F.size else np.zeros((E.shape[0], 0))
    want = E.shape[0] - linalg.rank(E)
    full = F.shape[1] == want and (want == 0 or linalg.rank(F) == want)
    res = float(np.max(np.abs(etf), initial=0.0))
    return {
        "EtF": etf.reshape(-1).tolist(),
        "EtF_residual": res,
        "EF_residual": float(np.max(np.abs(ef), initial=0.0)),
        "full_column_rank": bool(full),
        "passed": bool(res <= tol * scale and full),
    }


def _empty_F(n: int) -> np.ndarray:
    return np.zeros((n, 0))


# -- assembly --------------------------------------------------------------

def assemble_thm3(m: Model, F=None) -> LmiProblem:
    if m.kind != "continuous":
        raise ModelError("thm3 applies to continuous models")
    E = m.E
    n, N = m.n, m.N
    F = build_F(E) if F is None else np.atleast_2d(np.asarray(F, dtype=float))
    k = F.shape[1] if F.size else 0
    EEp = E @ linalg.pinv(E)
    variables = [Variable(f"P{i + 1}", (n, n), True) for i in range(N)]
    if k:
        variables += [Variable(f"Q{i + 1}", (k, n), False) for i in range(N)]
    forms = []
    I = np.eye(n)
    for i in range(N):
        a, c = m.A[i], m.C[i]
        terms = [Term(f"P{i + 1}", a.T, E, herm=True)]
        if k:
            terms.append(Term(f"Q{i + 1}", a.T @ F, I, herm=True))
        for j in range(N):
            if m.transition[i, j] != 0.0:
                terms.append(Term(f"P{j + 1}", E.T, E, weight=float(m.transition[i, j])))
        G = EEp @ c  # (E E+ C), so C'(E+)'E' P E E+ C = G' P G
        terms.append(Term(f"P{i + 1}", G.T, G))
        forms.append(AffineMatrixForm(f"lmi[{i + 1}]", "neg", np.zeros((n, n)), terms))
    for i in range(N):
        forms.append(AffineMatrixForm(f"P{i + 1}>0", "pos", np.zeros((n, n)), [Term(f"P{i + 1}", I, I)]))
    return LmiProblem("thm3", variables, forms, F if k else _empty_F(n))


def assemble_thm2(m: Model) -> LmiProblem:
    """Non-strict criterion with general P(i); for checking supplied matrices only."""
    if m.kind != "continuous":
        raise ModelError("thm2 applies to continuous models")
    E = m.E
    n, N = m.n, m.N
    Ep = linalg.pinv(E)
    I = np.eye(n)
    variables = [Variable(f"P{i + 1}", (n, n), False) for i in range(N)]
    forms, equalities = [], []
    for i in range(N):
        a, c = m.A[i], m.C[i]
        # sum_j pi_ij E'P_j and the diffusion term are symmetric once E'P = P'E
        terms = [Term(f"P{i + 1}", a.T, I, herm=True)]
        for j in range(N):
            if m.transition[i, j] != 0.0:
                terms.append(Term(f"P{j + 1}", E.T, I, herm=True, weight=0.5 * float(m.transition[i, j])))
        terms.append(Term(f"P{i + 1}", c.T @ Ep.T @ E.T, Ep @ c, herm=True, weight=0.5))
        forms.append(AffineMatrixForm(f"lmi[{i + 1}]", "neg", np.zeros((n, n)), terms))
        forms.append(AffineMatrixForm(f"E'P{i + 1}>=0", "psd", np.zeros((n, n)),
                                      [Term(f"P{i + 1}", E.T, I, herm=True, weight=0.5)]))
        name = f"P{i + 1}"
        equalities.append((f"E'P{i + 1}=P{i + 1}'E", lambda v, name=name: E.T @ v[name] - v[name].T @ E))
    return LmiProblem("thm2", variables, forms, _empty_F(n), equalities)


def _discrete_terms(m: Model, i: int, F: np.ndarray, with_q: bool) -> list:
    a, c = m.A[i], m.C[i]
    terms = []
    for j in range(m.N):
        lam = float(m.transition[i, j])
        if lam != 0.0:
            terms.append(Term(f"P{j + 1}", a.T, a, weight=lam))
            terms.append(Term(f"P{j + 1}", c.T, c, weight=lam))
    if with_q:
        terms.append(Term("Q", a.T @ F, F.T @ a))
        terms.append(Term("Q", c.T @ F, F.T @ c))
    terms.append(Term(f"P{i + 1}", m.E.T, m.E, weight=-1.0))
    return terms


def assemble_thm6(m: Model, F=None) -> LmiProblem:
    if m.kind != "discrete":
        raise ModelError("thm6 applies to discrete models")
    n, N = m.n, m.N
    F = build_F(m.E) if F is None else np.atleast_2d(np.asarray(F, dtype=float))
    k = F.shape[1] if F.size else 0
    I = np.eye(n)
    variables = [Variable(f"P{i + 1}", (n, n), True) for i in range(N)]
    if k:
        variables.append(Variable("Q", (k, k), True))
    forms = [AffineMatrixForm(f"lmi[{i + 1}]", "neg", np.zeros((n, n)), _discrete_terms(m, i, F, bool(k)))
             for i in range(N)]
    forms += [AffineMatrixForm(f"P{i + 1}>0", "pos", np.zeros((n, n)), [Term(f"P{i + 1}", I, I)])
              for i in range(N)]
    return LmiProblem("thm6", variables, forms, F if k else _empty_F(n))


def assemble_thm5(m: Model) -> LmiProblem:
    if m.kind != "discrete":
        raise ModelError("thm5 applies to discrete models")
    n, N = m.n, m.N
    variables = [Variable(f"P{i + 1}", (n, n), True) for i in range(N)]
    forms = [AffineMatrixForm(f"lmi[{i + 1}]", "neg", np.zeros((n, n)), _discrete_terms(m, i, _empty_F(n), False))
             for i in range(N)]
    forms += [AffineMatrixForm(f"E'P{i + 1}E>=0", "psd", np.zeros((n, n)), [Term(f"P{i + 1}", m.E.T, m.E)])
              for i in range(N)]
    return LmiProblem("thm5", variables, forms, _empty_F(n))


def assemble_cor1(ls: LiftedSystem, S=None) -> LmiProblem:
    if ls.kind != "continuous":
        raise ModelError("cor1 applies to continuous lifts")
    Es, As = ls.Escript, ls.Ascript
    d = ls.dim
    S = linalg.null_basis(Es.T) if S is None else np.atleast_2d(np.asarray(S, dtype=float))
    k = S.shape[1] if S.size else 0
    I = np.eye(d)
    variables = [Variable("P", (d, d), True)]
    terms = [Term("P", Es.T, As, herm=True)]
    if k:
        variables.append(Variable("Q", (k, d), False))
        terms.append(Term("Q", As.T @ S, I, herm=True))
    forms = [AffineMatrixForm("lmi", "neg", np.zeros((d, d)), terms),
             AffineMatrixForm("P>0", "pos", np.zeros((d, d)), [Term("P", I, I)])]
    return LmiProblem("cor1", variables, forms, S if k else _empty_F(d))


def assemble(m: Model, method: str, F=None, coupling: str = "adjoint", closure: bool = True) -> LmiProblem:
    if method == "thm3":
        return assemble_thm3(m, F)
    if method == "thm6":
        return assemble_thm6(m, F)
    if method == "thm2":
        return assemble_thm2(m)
    if method == "thm5":
        return assemble_thm5(m)
    if method == "cor1":
        if m.kind != "continuous":
            raise ModelError("cor1 applies to continuous models")
        return assemble_cor1(lift(m, coupling, closure), F)
    raise ModelError(f"unknown method {method!r}")


# -- certificates ----------------------------------------------------------

@dataclass(eq=False)
class Certificate:
    method: str
    P: list
    Q: list
    F: np.ndarray
    margin: float | None = None

    def values(self) -> dict:
        if self.method == "cor1":
            vals = {"P": self.P[0]}
            if self.Q and self.Q[0].size:
                vals["Q"] = self.Q[0]
            return vals
        vals = {f"P{i + 1}": p for i, p in enumerate(self.P)}
        if self.method == "thm3":
            vals.update({f"Q{i + 1}": q for i, q in enumerate(self.Q) if q.size})
        elif self.method == "thm6" and self.Q and self.Q[0].size:
            vals["Q"] = self.Q[0]
        return vals

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "P": [np.asarray(p).tolist() for p in self.P],
            "Q": [np.asarray(q).tolist() for q in self.Q],
            "F": np.asarray(self.F).tolist(),
            "margin": self.margin,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def certificate_from_dict(obj: dict) -> Certificate:
    try:
        method = obj["method"]
        if method not in METHODS:
            raise ModelError(f"unknown certificate method {method!r}")
        P = [np.atleast_2d(np.asarray(p, dtype=float)) for p in obj["P"]]
        Q = obj.get("Q") or []
        if not isinstance(Q, list) or (Q and not isinstance(Q[0], list)):
            Q = [Q]
        Q = [np.atleast_2d(np.asarray(q, dtype=float)) for q in Q]
        F = np.asarray(obj.get("F", []), dtype=float)
        margin = obj.get("margin")
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed certificate: {exc}") from exc
    if F.ndim == 1:
        F = F.reshape(-1, 1) if F.size else F.reshape(0, 0)
    return Certificate(method, P, Q, F, margin)


def read_certificate(path) -> Certificate:
    try:
        return certificate_from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"cannot read certificate {path}: {exc}") from exc


# -- verification ----------------------------------------------------------

@dataclass
class ResidualReport:
    method: str
    tol: float
    constraints: list  # dicts: name, sense, value, passed
    precondition: dict | None = None
    diagnostics: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        pre = self.precondition is None or self.precondition["passed"]
        return pre and all(c["passed"] for c in self.constraints)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "tol": self.tol,
            "passed": self.passed,
            "precondition": self.precondition,
            "constraints": self.constraints,
            "diagnostics": list(self.diagnostics),
        }

    def to_text(self) -> str:
        lines = [f"method {self.method}: {'PASS' if self.passed else 'FAIL'} (tol {self.tol:g})"]
        if self.precondition is not None:
            p = self.precondition
            lines.append(
                f"  precondition E'F = 0: {'ok' if p['passed'] else 'FAILED'} "
                f"(|E'F| = {p['EtF_residual']:.3g}, |EF| = {p['EF_residual']:.3g})"
            )
        for c in self.constraints:
            lines.append(f"  {c['name']:<16} {c['sense']:<4} {c['value']: .6g}  {'ok' if c['passed'] else 'FAIL'}")
        lines += [f"  note: {d}" for d in self.diagnostics]
        return "\n".join(lines)


def evaluate_problem(prob: LmiProblem, values: dict, tol: float) -> list:
    out = []
    for form in prob.forms:
        X = np.asarray(form.evaluate(values), dtype=float)
        ev = linalg.eig_sym((X + X.T) / 2)
        if form.sense == "neg":
            value, ok = float(ev[-1]), bool(ev[-1] < -tol)
        elif form.sense == "pos":
            value, ok = float(ev[0]), bool(ev[0] > tol)
        else:
            value, ok = float(ev[0]), bool(ev[0] >= -tol)
        out.append({"name": form.name, "sense": form.sense, "value": value, "passed": ok})
    for name, fn in prob.equalities:
        R = np.asarray(fn(values))
        value = float(np.max(np.abs(R), initial=0.0))
        out.append({"name": name, "sense": "eq", "value": value, "passed": bool(value <= tol)})
    return out


def _check_shapes(prob: LmiProblem, values: dict):
    for v in prob.variables:
        if v.name not in values:
            raise ModelError(f"certificate lacks variable {v.name}")
        if values[v.name].shape != v.shape:
            raise ModelError(f"{v.name} has shape {values[v.name].shape}, expected {v.shape}")


def verify_certificate(m: Model, cert: Certificate, tol: float = 1e-9,
                       coupling: str = "adjoint", closure: bool = True) -> ResidualReport:
    """Plug-in check of a certificate against the model it claims to certify."""
    method = cert.method
    diagnostics = []
    precondition = None
    if method in ("thm3", "thm6"):
        want = m.n - m.r
        F = np.atleast_2d(np.asarray(cert.F, dtype=float)) if np.asarray(cert.F).size else _empty_F(m.n)
        if F.shape[0] != m.n:
            raise ModelError(f"F has {F.shape[0]} rows, expected {m.n}")
        precondition = check_F(m.E, F)
        if F.shape[1] != want:
            diagnostics.append(f"F has {F.shape[1]} columns, expected n - r = {want}")
        if not precondition["passed"] and precondition["EF_residual"] <= F_TOL * max(1.0, float(np.linalg.norm(F))):
            diagnostics.append(
                "supplied F satisfies E F = 0 but not E^T F = 0 (left/right null space mix-up); "
                "the criterion's precondition fails, so this certificate proves nothing"
            )
        prob = assemble(m, method, F)
    elif method == "cor1":
        ls = lift(m, coupling, closure)
        S = np.asarray(cert.F, dtype=float)
        S = S if S.size else _empty_F(ls.dim)
        res = float(np.max(np.abs(ls.Escript.T @ S), initial=0.0)) if S.size else 0.0
        precondition = {"EtF": [], "EtF_residual": res, "EF_residual": float("nan"),
                        "full_column_rank": True, "passed": res <= F_TOL * max(1.0, float(np.linalg.norm(S)))}
        prob = assemble_cor1(ls, S)
        diagnostics.append(f"lift coupling {coupling}, closure {'on' if closure else 'off'}")
    else:
        prob = assemble(m, method)
    values = cert.values()
    _check_shapes(prob, values)
    if method in ("thm3", "thm6") and not all(assumption1(m)):
        diagnostics.append("rank[E C(i)] > rank E for some mode: the criterion is not applicable")
    if method == "thm6" and "Q" in values:
        if abs(np.linalg.det(values["Q"])) < 1e-12:
            diagnostics.append("Q is singular (not required for sufficiency)")
    return ResidualReport(method, tol, evaluate_problem(prob, values, tol), precondition, diagnostics)


# -- feasibility engine ----------------------------------------------------

@dataclass(eq=False)
class FeasibilityResult:
    status: str  # feasible | infeasible | unknown
    margin: float | None
    certificate: Certificate | None = None
    report: ResidualReport | None = None
    message: str = ""

    def to_dict(self) -> dict:
        out = {"status": self.status, "margin": self.margin, "message": self.message}
        if self.report is not None:
            out["verification"] = self.report.to_dict()
        return out


def _certificate_from_values(prob: LmiProblem, vals: dict, margin: float) -> Certificate:
    if prob.method == "cor1":
        P = [vals["P"]]
        Q = [vals["Q"]] if "Q" in vals else [np.zeros((0, prob.variable("P").shape[0]))]
    else:
        P = [vals[v.name] for v in prob.variables if v.name.startswith("P")]
        n = P[0].shape[0]
        if prob.method == "thm3":
            Q = [vals.get(f"Q{i + 1}", np.zeros((0, n))) for i in range(len(P))]
        else:
            Q = [vals["Q"]] if "Q" in vals else [np.zeros((0, 0))]
    return Certificate(prob.method, P, Q, prob.F, margin)


def solve_feasibility(prob: LmiProblem, eps: float = DEFAULT_EPS, solver: str = "CLARABEL",
                      max_iter: int = 200, verify_with: Model | None = None, **verify_kw) -> FeasibilityResult:
    """max t  s.t.  strict forms <= -t I,  P-variables >= t I,  sum trace(P) <= sum dim(P).

    Feasible only when t* > eps *and* the recovered certificate passes an
    independent eigenvalue check at tol = eps / 10.
    """
    import cvxpy as cp

    if prob.method in ("thm2", "thm5"):
        raise ModelError(f"{prob.method} is a verification-only criterion")
    cvars = {v.name: cp.Variable(v.shape, symmetric=v.symmetric, name=v.name) for v in prob.variables}
    t = cp.Variable(name="t")
    cons = []
    pos_vars = []
    for form in prob.forms:
        expr = form.evaluate(cvars)
        expr = (expr + expr.T) / 2
        eye = np.eye(form.size)
        if form.sense == "neg":
            cons.append(expr << -t * eye)
        elif form.sense == "pos":
            cons.append(expr >> t * eye)
            pos_vars += [term.var for term in form.terms]
        else:
            cons.append(expr >> 0)
    bound = float(sum(prob.variable(v).shape[0] for v in pos_vars))
    cons.append(sum(cp.trace(cvars[v]) for v in pos_vars) <= bound)
    problem = cp.Problem(cp.Maximize(t), cons)
    try:
        if solver == "CLARABEL":
            problem.solve(solver=solver, max_iter=max_iter)
        else:
            problem.solve(solver=solver)
    except cp.error.SolverError as exc:
        return FeasibilityResult("unknown", None, message=f"solver failure: {exc}")
    status = problem.status
    if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or t.value is None:
        return FeasibilityResult("unknown", None, message=f"solver status {status}")
    margin = float(t.value)
    if margin <= eps:
        return FeasibilityResult("infeasible", margin, message=f"best margin {margin:.3g} <= eps {eps:g}")
    vals = {name: np.asarray(v.value, dtype=float) for name, v in cvars.items()}
    for v in prob.variables:
        if v.symmetric:
            vals[v.name] = (vals[v.name] + vals[v.name].T) / 2
    cert = _certificate_from_values(prob, vals, margin)
    if verify_with is not None:
        report = verify_certificate(verify_with, cert, tol=eps / 10, **verify_kw)
    else:
        report = ResidualReport(prob.method, eps / 10, evaluate_problem(prob, vals, eps / 10))
    if not report.passed:
        return FeasibilityResult("unknown", margin, cert, report,
                                 "solver claimed feasibility but the certificate failed plug-in verification")
    return FeasibilityResult("feasible", margin, cert, report)


def check_method(m: Model, method: str, eps: float = DEFAULT_EPS, coupling: str = "adjoint",
                 closure: bool = True, solver: str = "CLARABEL") -> FeasibilityResult:
    prob = assemble(m, method, coupling=coupling, closure=closure)
    kw = {"coupling": coupling, "closure": closure} if method == "cor1" else {}
    return solve_feasibility(prob, eps=eps, solver=solver, verify_with=m, **kw)

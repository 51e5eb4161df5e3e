"""Command-line front end.

Exit codes: 0 success (feasible / stable / passed), 1 definite negative
outcome, 2 input error or unmet precondition, 3 numerical failure / unknown.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, dynamics, lmi, model as model_mod, structure
from .lift import COUPLINGS, lift as build_lift
from .errors import (AssumptionError, ImpulsiveError, InconsistentInitialState, ModelError,
                     NonRegularPencilError)

REPORT_SCHEMA = "ssadmit.report/1"
EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("ssadmit")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class Report:
    def __init__(self, command: str):
        self.data = {"schema": REPORT_SCHEMA, "command": command, "diagnostics": []}
        self.lines: list[str] = []

    def note(self, msg: str):
        self.data["diagnostics"].append(msg)
        self.lines.append(f"note: {msg}")

    def emit(self, code: int, as_json: bool, stream=None) -> int:
        stream = stream or sys.stdout
        self.data["exit_code"] = code
        if as_json:
            stream.write(json.dumps(_jsonable(self.data), indent=2, sort_keys=True) + "\n")
        else:
            stream.write("\n".join(self.lines + [f"exit {code}"]) + "\n")
        return code


def _default_seed() -> int:
    try:
        return int(os.environ.get("SSA_SEED", "0"))
    except ValueError:
        return 0


def _load(path, report: Report):
    try:
        m = model_mod.read_model(path)
    except ModelError as exc:
        report.note(f"input error: {exc}")
        return None
    report.data["model"] = m.summary()
    report.lines.append(f"model {path}: {m.kind}, n={m.n}, N={m.N}, rank E={m.r}")
    return m


def _oracle(m, report: Report, coupling: str, closure: bool):
    """Spectral oracle on the slow subsystem plus the lifted cross-check."""
    try:
        ss, op, verdict = dynamics.analyze(m)
    except (AssumptionError, ImpulsiveError) as exc:
        report.data["oracle"] = {"status": "unavailable", "reason": str(exc)}
        return None
    out = verdict.to_dict()
    report.lines.append(
        f"spectral oracle: {verdict.label} = {verdict.quantity:.6g} -> {'stable' if verdict.stable else 'unstable'}"
    )
    try:
        lv = dynamics.lifted_verdict(build_lift(m, coupling, closure))
        out["lifted"] = lv.to_dict()
        report.lines.append(f"lifted pencil ({coupling}): {lv.label} = {lv.quantity:.6g}")
    except NonRegularPencilError:
        out["lifted"] = {"status": "non-regular lifted pencil"}
        report.lines.append("lifted pencil: non-regular (no algebraic closure)")
    report.data["oracle"] = out
    return verdict


def cmd_check(args) -> int:
    rep = Report("check")
    m = _load(args.model, rep)
    if m is None:
        return rep.emit(EXIT_INPUT, args.json)
    closure = not args.no_closure
    rep.data["coupling"] = args.coupling
    rep.data["closure"] = closure
    method = args.method
    if method == "auto":
        method = "thm3" if m.continuous else "thm6"
    rep.data["method"] = method
    if method in ("thm3", "cor1") and not m.continuous or method == "thm6" and m.continuous:
        rep.note(f"method {method} does not apply to a {m.kind} model")
        return rep.emit(EXIT_INPUT, args.json)

    val = model_mod.validate(m)
    rep.data["validation"] = val.to_dict()
    if not val.transition_ok:
        for n in val.notes:
            rep.note(n)
        return rep.emit(EXIT_INPUT, args.json)
    if not all(val.assumption1) and not args.force:
        rep.note("rank[E C(i)] = rank E fails for some mode; refusing to run (use --force)")
        return rep.emit(EXIT_INPUT, args.json)

    verdict = None
    try:
        rf = structure.restricted_form(m)
        sv = structure.impulse_check(m, rf)
        rep.data["structure"] = sv.to_dict()
        rep.lines.append(f"{sv.label}: {sv.impulse_free}")
        for d in sv.diagnostics:
            rep.note(d)
        if not sv.consistent:
            return rep.emit(EXIT_NUMERIC, args.json)
        if not sv.ok:
            rep.data["outcome"] = {"status": "not admissible", "reason": f"not {sv.label}"}
            rep.lines.append(f"outcome: not admissible (not {sv.label})")
            return rep.emit(EXIT_NEGATIVE, args.json)
        verdict = _oracle(m, rep, args.coupling, closure)
    except AssumptionError as exc:
        rep.note(f"unsupported structure: {exc}")

    if method == "spectral":
        if verdict is None:
            return rep.emit(EXIT_INPUT, args.json)
        rep.data["outcome"] = {"status": "stable" if verdict.stable else "unstable"}
        rep.lines.append(f"outcome: {'mean-square admissible' if verdict.stable else 'not admissible'}")
        return rep.emit(EXIT_OK if verdict.stable else EXIT_NEGATIVE, args.json)

    res = lmi.check_method(m, method, eps=args.eps, coupling=args.coupling, closure=closure,
                           solver=args.solver)
    rep.data["outcome"] = res.to_dict()
    margin = "n/a" if res.margin is None else f"{res.margin:.6g}"
    rep.lines.append(f"{method}: {res.status} (margin {margin})")
    if res.message:
        rep.note(res.message)
    if res.status == "unknown":
        return rep.emit(EXIT_NUMERIC, args.json)
    if res.status == "infeasible":
        return rep.emit(EXIT_NEGATIVE, args.json)
    if verdict is not None and not verdict.stable:
        rep.note("LMI feasible but the spectral oracle reports instability; refusing to certify")
        rep.data["outcome"]["status"] = "inconsistent"
        return rep.emit(EXIT_NUMERIC, args.json)
    if args.out:
        Path(args.out).write_text(res.certificate.to_json() + "\n")
        rep.lines.append(f"certificate written to {args.out}")
    rep.lines.append("outcome: mean-square admissible")
    return rep.emit(EXIT_OK, args.json)


def cmd_verify(args) -> int:
    rep = Report("verify")
    m = _load(args.model, rep)
    if m is None:
        return rep.emit(EXIT_INPUT, args.json)
    try:
        cert = lmi.read_certificate(args.certificate)
        closure = not args.no_closure
        res = lmi.verify_certificate(m, cert, tol=args.tol, coupling=args.coupling, closure=closure)
    except ModelError as exc:
        rep.note(f"input error: {exc}")
        return rep.emit(EXIT_INPUT, args.json)
    rep.data["verification"] = res.to_dict()
    rep.lines.append(res.to_text())
    return rep.emit(EXIT_OK if res.passed else EXIT_NEGATIVE, args.json)


def _parse_vector(text: str | None):
    if text is None:
        return None
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(","))
    except ValueError as exc:
        raise ModelError(f"cannot parse vector {text!r}") from exc


def cmd_simulate(args) -> int:
    rep = Report("simulate")
    m = _load(args.model, rep)
    if m is None:
        return rep.emit(EXIT_INPUT, args.json)
    seed = _default_seed() if args.seed is None else args.seed
    try:
        x0 = _parse_vector(args.x0)
        r0 = m.r0 if args.r0 is None else args.r0 - 1
        if not 0 <= r0 < m.N:
            raise ModelError(f"r0 must be in 1..{m.N}")
        horizon = args.horizon if args.horizon is not None else (5.0 if m.continuous else 5)
        cfg = dynamics.SimConfig(paths=args.paths, horizon=horizon, dt=args.dt, seed=seed,
                                 x0=x0, r0=r0, samples=args.samples, project_x0=args.project_x0)
        stats = dynamics.simulate(m, cfg)
    except (ModelError, InconsistentInitialState, ValueError) as exc:
        rep.note(f"input error: {exc}")
        return rep.emit(EXIT_INPUT, args.json)
    except (AssumptionError, ImpulsiveError) as exc:
        rep.note(f"simulation needs an impulse-free model with a common restricted form: {exc}")
        return rep.emit(EXIT_INPUT, args.json)
    ratio = stats.ratio
    rep.data["simulation"] = {
        "paths": cfg.paths, "horizon": cfg.horizon, "dt": cfg.dt, "seed": seed, "r0": r0 + 1,
        "mean_sq_initial": float(stats.mean_sq[0]), "mean_sq_final": float(stats.mean_sq[-1]),
        "stderr_final": float(stats.stderr[-1]), "ratio": ratio,
    }
    rep.lines.append(
        f"E|x(T)|^2 / E|x(0)|^2 = {ratio:.6g} (final stderr {stats.stderr[-1]:.3g}, {cfg.paths} paths, seed {seed})"
    )
    if args.out:
        Path(args.out).write_text(stats.to_csv())
        rep.lines.append(f"statistics written to {args.out}")
    if ratio > 1.0:
        rep.note("second moment grew over the horizon: divergence detected")
        return rep.emit(EXIT_NEGATIVE, args.json)
    return rep.emit(EXIT_OK, args.json)


def cmd_lift(args) -> int:
    rep = Report("lift")
    m = _load(args.model, rep)
    if m is None:
        return rep.emit(EXIT_INPUT, args.json)
    ls = build_lift(m, args.coupling, args.closure)
    lifted = ls.as_model()
    text = model_mod.save_model(lifted)
    rep.data["lift"] = {"dim": ls.dim, "coupling": ls.coupling, "closure": ls.closure,
                        "regular": structure_regular(ls)}
    rep.lines.append(f"lifted {m.kind} system of dimension {ls.dim} (coupling {ls.coupling}, "
                     f"closure {'on' if ls.closure else 'off'})")
    if args.out:
        Path(args.out).write_text(text + "\n")
        rep.lines.append(f"written to {args.out}")
    elif not args.json:
        rep.lines.append(text)
    return rep.emit(EXIT_OK, args.json)


def structure_regular(ls) -> bool:
    from .linalg import pencil_regular
    return pencil_regular(ls.Escript, ls.Ascript)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssadmit",
                                description="Mean-square admissibility of singular stochastic Markov jump systems")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("model", help="model JSON file")
        sp.add_argument("--json", action="store_true", help="emit a JSON report")

    sp = sub.add_parser("check", help="decide admissibility with an LMI method or the spectral oracle")
    common(sp)
    sp.add_argument("--method", choices=["auto", "thm3", "thm6", "cor1", "spectral"], default="auto")
    sp.add_argument("--eps", type=float, default=lmi.DEFAULT_EPS)
    sp.add_argument("--coupling", choices=list(COUPLINGS), default="adjoint")
    sp.add_argument("--no-closure", action="store_true",
                    help="use the bare continuous lift (non-regular when E is singular)")
    sp.add_argument("--force", action="store_true", help="run even if rank[E C(i)] > rank E")
    sp.add_argument("--out", help="write the certificate here when feasible")
    sp.add_argument("--solver", default="CLARABEL", help="cvxpy SDP solver name")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("verify", help="plug-in verification of a certificate")
    common(sp)
    sp.add_argument("certificate")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--coupling", choices=list(COUPLINGS), default="adjoint")
    sp.add_argument("--no-closure", action="store_true")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("simulate", help="Monte Carlo estimate of E|x(t)|^2")
    common(sp)
    sp.add_argument("--paths", type=int, default=10_000)
    sp.add_argument("--horizon", type=float, default=None, help="time (continuous) or steps (discrete); default 5")
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--samples", type=int, default=51, help="output time points (continuous)")
    sp.add_argument("--seed", type=int, default=None, help="default: $SSA_SEED or 0")
    sp.add_argument("--x0", help="initial state, comma separated")
    sp.add_argument("--r0", type=int, default=None, help="initial mode (1-based)")
    sp.add_argument("--project-x0", action="store_true", help="keep only the slow part of an inconsistent x0")
    sp.add_argument("--out", help="CSV output path")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("lift", help="write the second-moment lift as an N=1 model file")
    common(sp)
    sp.add_argument("--coupling", choices=list(COUPLINGS), default="adjoint")
    sp.add_argument("--closure", action="store_true", help="add the algebraic closure rows")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_lift)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

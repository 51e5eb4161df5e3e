"""Ground-truth oracles: exact second-moment propagation and Monte Carlo.

Everything runs on the slow coordinate xi1 of the common restricted form.
xi1 is carried continuously across mode switches and the algebraic part is
re-solved in the new mode (``xi2 = -K(i) xi1``).
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import linalg
from .errors import InconsistentInitialState
from .lift import LiftedSystem
from .model import Model
from .structure import SlowSubsystem, pencil_slow_part, restricted_form, slow_subsystem

log = logging.getLogger(__name__)

BLOCK_PATHS = 4096


@dataclass(frozen=True, eq=False)
class MomentOperator:
    kind: str
    L: np.ndarray
    r: int
    N: int


@dataclass
class Verdict:
    kind: str
    stable: bool
    quantity: float
    eigenvalues: np.ndarray = field(repr=False)

    @property
    def label(self) -> str:
        return "abscissa" if self.kind == "continuous" else "radius"

    @property
    def margin(self) -> float:
        return -self.quantity if self.kind == "continuous" else 1.0 - self.quantity

    def to_dict(self) -> dict:
        return {"stable": self.stable, self.label: self.quantity, "margin": self.margin}


def _mode_map(a: np.ndarray, c: np.ndarray, kind: str) -> np.ndarray:
    r = a.shape[0]
    eye = np.eye(r)
    if kind == "continuous":
        k = np.kron(a, eye) + np.kron(eye, a) + np.kron(c, c)
    else:
        k = np.kron(a, a) + np.kron(c, c)
    return linalg.svec_operator(k, r)


def moment_operator(m: Model, ss: SlowSubsystem) -> MomentOperator:
    """Operator on stacked svec(E[xi1 xi1^T 1{r=i}]).

    continuous: dM_i/dt = A1 M_i + M_i A1^T + C1 M_i C1^T + sum_j pi_ji M_j
    discrete:   M_j(k+1) = sum_i lam_ij (A1 M_i A1^T + C1 M_i C1^T)
    """
    d = linalg.svec_dim(ss.r)
    blocks = [_mode_map(a, c, m.kind) for a, c in zip(ss.A1, ss.C1)]
    T = m.transition
    if m.kind == "continuous":
        L = sla.block_diag(*blocks) + np.kron(T.T, np.eye(d))
    else:
        L = np.kron(T.T, np.eye(d)) @ sla.block_diag(*blocks)
    return MomentOperator(m.kind, L, ss.r, m.N)


def _verdict(kind: str, eigenvalues) -> Verdict:
    spec = linalg.spectrum_of(eigenvalues)
    if kind == "continuous":
        q = spec.abscissa
        return Verdict(kind, bool(q < 0.0), q, spec.eigenvalues)
    q = spec.radius
    return Verdict(kind, bool(q < 1.0), q, spec.eigenvalues)


def spectral_verdict(op: MomentOperator) -> Verdict:
    return _verdict(op.kind, linalg.eig_general(op.L).eigenvalues)


def lifted_verdict(ls: LiftedSystem) -> Verdict:
    """Stability of the finite part of the lifted pencil.

    Raises NonRegularPencilError for a non-regular lift (every continuous
    lift of a singular E unless built with ``closure=True``).
    """
    J, _ = pencil_slow_part(ls.Escript, ls.Ascript)
    return _verdict(ls.kind, np.linalg.eigvals(J) if J.size else [])


def analyze(m: Model) -> tuple[SlowSubsystem, MomentOperator, Verdict]:
    ss = slow_subsystem(restricted_form(m))
    op = moment_operator(m, ss)
    return ss, op, spectral_verdict(op)


# -- exact moments ---------------------------------------------------------

def initial_moments(ss: SlowSubsystem, xi1: np.ndarray, r0: int) -> np.ndarray:
    d = linalg.svec_dim(ss.r)
    v = np.zeros(d * len(ss.A1))
    v[r0 * d:(r0 + 1) * d] = linalg.svec(np.outer(xi1, xi1))
    return v


def mean_square_weights(ss: SlowSubsystem) -> np.ndarray:
    """Row vector w with E||x||^2 = w @ stacked svec moments."""
    parts = []
    for i in range(len(ss.A1)):
        T = ss.embedding(i)
        G = T.T @ T
        # <G, M> over symmetric M in svec coordinates: off-diagonals count twice
        W = 2.0 * G - np.diag(np.diag(G))
        parts.append(W[np.triu_indices(ss.r)])
    return np.concatenate(parts)


def moment_trajectory(op: MomentOperator, v0: np.ndarray, times) -> np.ndarray:
    """Stacked moments at each time (continuous: expm(L t) v0; discrete: L^k v0)."""
    times = np.asarray(times)
    out = np.empty((times.size, v0.size))
    if op.kind == "continuous":
        for k, t in enumerate(times):
            out[k] = sla.expm(op.L * float(t)) @ v0
    else:
        for k, t in enumerate(times):
            out[k] = np.linalg.matrix_power(op.L, int(t)) @ v0
    return out


# -- Monte Carlo -----------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    paths: int = 10_000
    horizon: float = 5.0
    dt: float = 1e-3
    seed: int = 0
    x0: tuple | None = None
    r0: int = 0
    samples: int = 51
    project_x0: bool = False

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.samples < 2:
            raise ValueError("samples must be >= 2")


@dataclass
class SimStats:
    times: np.ndarray
    mean_sq: np.ndarray
    stderr: np.ndarray
    occupation: np.ndarray
    paths: int

    @property
    def ratio(self) -> float:
        """E||x(T)||^2 / E||x(0)||^2 (inf/nan conventions for a zero start)."""
        if self.mean_sq[0] == 0.0:
            return 0.0 if self.mean_sq[-1] == 0.0 else math.inf
        return float(self.mean_sq[-1] / self.mean_sq[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        N = self.occupation.shape[1]
        w.writerow(["time", "mean_sq_norm", "stderr"] + [f"occupation_{i + 1}" for i in range(N)])
        for k in range(self.times.size):
            w.writerow([repr(float(self.times[k])), repr(float(self.mean_sq[k])),
                        repr(float(self.stderr[k]))]
                       + [repr(float(p)) for p in self.occupation[k]])
        return buf.getvalue()


def initial_slow_state(m: Model, ss: SlowSubsystem, x0, r0: int, project: bool = False) -> np.ndarray:
    """xi1 for the state x(0) = x0; checks the algebraic constraint of mode r0."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    xi = np.linalg.solve(ss.N, x0)
    xi1, xi2 = xi[:ss.r], xi[ss.r:]
    if ss.r < m.n and not project:
        want = -ss.K[r0] @ xi1
        if np.max(np.abs(xi2 - want), initial=0.0) > 1e-8 * max(1.0, float(np.max(np.abs(xi)))):
            raise InconsistentInitialState(
                f"x0 violates the algebraic constraint of mode {r0 + 1}; use project_x0 to keep "
                "only its slow component"
            )
    return xi1


def default_x0(ss: SlowSubsystem, r0: int) -> np.ndarray:
    return ss.embedding(r0) @ np.ones(ss.r)


def _block_rngs(seed: int, paths: int):
    for b, start in enumerate(range(0, paths, BLOCK_PATHS)):
        size = min(BLOCK_PATHS, paths - start)
        yield size, np.random.default_rng(np.random.SeedSequence([int(seed), b]))


def _holding(rng, rates: np.ndarray) -> np.ndarray:
    u = rng.random(rates.size)
    with np.errstate(divide="ignore"):
        return np.where(rates > 0, -np.log1p(-u) / np.where(rates > 0, rates, 1.0), np.inf)


def _next_mode(rng, probs: np.ndarray, mode: np.ndarray) -> np.ndarray:
    cum = np.cumsum(probs[mode], axis=1)
    u = rng.random(mode.size)[:, None]
    return np.minimum((u >= cum).sum(axis=1), probs.shape[1] - 1)


def simulate(m: Model, cfg: SimConfig, ss: SlowSubsystem | None = None) -> SimStats:
    if ss is None:
        ss = slow_subsystem(restricted_form(m))
    x0 = cfg.x0 if cfg.x0 is not None else (m.x0 if m.x0 is not None else default_x0(ss, cfg.r0))
    xi0 = initial_slow_state(m, ss, x0, cfg.r0, cfg.project_x0)
    if m.kind == "continuous":
        hot = max(float(np.linalg.norm(a, 2)) for a in ss.A1) if ss.r else 0.0
        if cfg.dt * hot > 0.1:
            log.warning("dt * ||A1|| = %.3g > 0.1; Euler-Maruyama may be inaccurate", cfg.dt * hot)
        times = np.linspace(0.0, cfg.horizon, cfg.samples)
        runner = _run_continuous_block
    else:
        steps = int(round(cfg.horizon))
        times = np.arange(steps + 1, dtype=float)
        runner = _run_discrete_block
    T = np.stack([ss.embedding(i) for i in range(m.N)])
    A1 = np.stack(ss.A1)
    C1 = np.stack(ss.C1)
    sums = np.zeros(times.size)
    sumsq = np.zeros(times.size)
    occ = np.zeros((times.size, m.N))
    for size, rng in _block_rngs(cfg.seed, cfg.paths):
        xi = np.tile(xi0, (size, 1))
        mode = np.full(size, cfg.r0)
        for k, (xi_k, mode_k) in enumerate(runner(m, cfg, A1, C1, xi, mode, times, rng)):
            x = np.einsum("pij,pj->pi", T[mode_k], xi_k)
            nsq = np.einsum("pi,pi->p", x, x)
            sums[k] += nsq.sum()
            sumsq[k] += (nsq * nsq).sum()
            occ[k] += np.bincount(mode_k, minlength=m.N)
    P = cfg.paths
    mean = sums / P
    if P > 1:
        var = np.maximum(sumsq / P - mean * mean, 0.0) * P / (P - 1)
        se = np.sqrt(var / P)
    else:
        se = np.zeros_like(mean)
    return SimStats(times, mean, se, occ / P, P)


def _em_step(A1, C1, xi, mode, h, rng):
    """One Euler-Maruyama step with per-path step sizes h (h = 0 leaves a path alone)."""
    dw = rng.standard_normal(mode.size) * np.sqrt(h)
    a = A1[mode]
    c = C1[mode]
    return xi + np.einsum("pij,pj->pi", a, xi) * h[:, None] + np.einsum("pij,pj->pi", c, xi) * dw[:, None]


def _run_continuous_block(m, cfg, A1, C1, xi, mode, times, rng):
    Pi = m.transition
    rates = -np.diag(Pi)
    with np.errstate(invalid="ignore", divide="ignore"):
        jump = np.where(rates[:, None] > 0, Pi / np.where(rates > 0, rates, 1.0)[:, None], 0.0)
    np.fill_diagonal(jump, 0.0)
    t = 0.0
    next_jump = _holding(rng, rates[mode])
    yield xi.copy(), mode.copy()
    for k in range(1, times.size):
        target = times[k]
        while t < target - 1e-12:
            step_end = min(t + cfg.dt, target)
            clock = np.full(mode.size, t)
            while True:
                h = np.clip(np.minimum(next_jump, step_end) - clock, 0.0, None)
                if not np.any(h > 0):
                    break
                xi = _em_step(A1, C1, xi, mode, h, rng)
                clock = clock + h
                hit = next_jump <= step_end
                if not np.any(hit):
                    break
                idx = np.flatnonzero(hit)
                mode[idx] = _next_mode(rng, jump, mode[idx])
                next_jump[idx] = clock[idx] + _holding(rng, rates[mode[idx]])
            t = step_end
        yield xi.copy(), mode.copy()


def _run_discrete_block(m, cfg, A1, C1, xi, mode, times, rng):
    Lam = m.transition
    yield xi.copy(), mode.copy()
    for _ in range(1, times.size):
        w = rng.standard_normal(mode.size)
        xi = np.einsum("pij,pj->pi", A1[mode], xi) + np.einsum("pij,pj->pi", C1[mode], xi) * w[:, None]
        mode = _next_mode(rng, Lam, mode)
        yield xi.copy(), mode.copy()


def fit_decay_rate(times, mean_sq, stderr, t0: float, t1: float) -> tuple[float, float]:
    """Weighted least-squares slope of log E||x||^2 on [t0, t1] and its standard error."""
    times = np.asarray(times)
    sel = (times >= t0 - 1e-12) & (times <= t1 + 1e-12) & (np.asarray(mean_sq) > 0)
    t = times[sel]
    y = np.log(np.asarray(mean_sq)[sel])
    sig = np.asarray(stderr)[sel] / np.asarray(mean_sq)[sel]
    if np.any(sig <= 0):
        sig = np.ones_like(sig)
    wts = 1.0 / sig**2
    X = np.column_stack([np.ones_like(t), t])
    cov = np.linalg.inv(X.T @ (wts[:, None] * X))
    beta = cov @ X.T @ (wts * y)
    return float(beta[1]), float(math.sqrt(cov[1, 1]))

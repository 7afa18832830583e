"""One-shot coherence cost and distillation under maximally incoherent
operations, the inequalities linking them to smoothed quantities, and
finite-n regularisation sweeps.

Each candidate target dimension ``M`` is an SDP over the Choi matrix of the
converting map, written as an optimisation whose optimum is compared with
the fidelity threshold ``1 - eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channels as ch
from . import linalg as la
from . import measures as ms
from .sdp import Block, Constraint, MatrixConstraint, SdpProblem, SolverError, solve_sdp, OPTIMAL

FEAS_TOL = 1e-7
BOUND_SLACK = 1e-6


class OneShotError(SolverError):
    """A per-``M`` SDP failed; ``partial`` holds the scan so far."""

    def __init__(self, message, solution=None, partial=None):
        super().__init__(message, solution)
        self.partial = partial or []


@dataclass
class OneShotResult:
    kind: str
    epsilon: float
    m_star: int | None
    certificate: ch.ChoiMatrix | None
    scan: list = field(default_factory=list)

    @property
    def log_m(self) -> float:
        return math.inf if self.m_star is None else math.log2(self.m_star)

    def feasibility_profile(self) -> dict:
        return {rec["M"]: rec["feasible"] for rec in self.scan}

    def to_json(self, witness: bool = False) -> dict:
        out = {"kind": self.kind, "epsilon": self.epsilon, "m_star": self.m_star,
               "log_m": self.log_m, "scan": [dict(r) for r in self.scan]}
        if witness and self.certificate is not None:
            out["certificate"] = ch.channel_to_json(self.certificate)
        return out


def _blocks_of(J, din, dout):
    return J.reshape(din, dout, din, dout).transpose(0, 2, 1, 3)


def _partial_trace_out(din, dout):
    return lambda J: np.einsum("iaja->ij", J.reshape(din, dout, din, dout))


def _mio_constraints(k, din, dout):
    """Off-diagonal part of every ``E(|i><i|)`` vanishes."""
    cons = []
    if dout == 1:
        return cons
    for i in range(din):
        def offdiag(J, i=i):
            b = _blocks_of(J, din, dout)[i, i]
            return b - np.diag(np.diag(b))
        cons.append(MatrixConstraint({k: offdiag}, np.zeros((dout, dout)), "==", f"mio{i}"))
    return cons


def _tp_constraint(k, din, dout):
    return MatrixConstraint({k: _partial_trace_out(din, dout)}, np.eye(din), "==", "tp")


def distill_problem(rho, m: int) -> SdpProblem:
    """Maximise ``<Psi_M| E(rho) |Psi_M>`` over MIO channels ``d -> M``."""
    d = rho.shape[0]
    plus = la.proj(ch.maximally_coherent(m))
    obj = np.kron(rho.T, plus)
    return SdpProblem([Block(d * m)], {0: la.hermitize(obj)},
                      [_tp_constraint(0, d, m)] + _mio_constraints(0, d, m), "max")


def cost_problem(rho, m: int, rank_tol: float = la.RANK_TOL) -> SdpProblem:
    """Maximise ``F(rho, E(Psi_M))`` over MIO channels ``M -> d``.

    With ``rho = V L V^dag`` on its support the fidelity is
    ``max Re Tr(V Y)`` over PSD blocks ``[[L, Y], [Y^dag, X]]`` with
    ``X = E(Psi_M)``.
    """
    d = rho.shape[0]
    w, v = np.linalg.eigh(rho)
    keep = w > rank_tol * w[-1]
    lam, V = w[keep], v[:, keep]
    r = len(lam)
    n = r + d
    c = np.zeros((n, n), dtype=complex)
    c[:r, r:] = V.conj().T / 2
    c[r:, :r] = V / 2

    def output(J):
        return _blocks_of(J, m, d).sum(axis=(0, 1)) / m

    cons = [
        _tp_constraint(0, m, d),
        *_mio_constraints(0, m, d),
        MatrixConstraint({1: lambda B: B[:r, :r]}, np.diag(lam), "==", "support"),
        MatrixConstraint({1: lambda B: B[r:, r:], 0: lambda J: -output(J)}, np.zeros((d, d)), "==", "output"),
    ]
    return SdpProblem([Block(m * d), Block(n)], {1: c}, cons, "max")


def _solve(prob, tol, what, scan):
    sol = solve_sdp(prob, tol, tol)
    if sol.status != OPTIMAL:
        raise OneShotError(f"{what} ended with status {sol.status}", sol, scan)
    return sol


def _check_dims(d, m_max, cap):
    if d * m_max > cap:
        raise la.DimensionCapError(f"Choi dimension {d}*{m_max} exceeds cap {cap}")


def one_shot_distill_mio(rho, eps: float, m_max: int | None = None, tol: float = 1e-9,
                         feas_tol: float = FEAS_TOL, cap: int = la.DIM_CAP) -> OneShotResult:
    """Largest ``M <= m_max`` with ``max_E <Psi_M|E(rho)|Psi_M> >= 1 - eps``; every ``M`` is scanned."""
    if not 0 < eps < 1:
        raise la.ValidationError("epsilon must lie in (0, 1)")
    rho = la.validate_state(rho)
    d = rho.shape[0]
    m_max = d * d if m_max is None else m_max
    _check_dims(d, m_max, cap)
    scan, best, cert = [], 1, None
    for m in range(2, m_max + 1):
        sol = _solve(distill_problem(rho, m), tol, f"distillation M={m}", scan)
        ok = sol.primal_value >= 1.0 - eps - feas_tol
        scan.append({"M": m, "value": float(sol.primal_value), "gap": float(sol.gap), "feasible": bool(ok)})
        if ok:
            best, cert = m, ch.ChoiMatrix(sol.blocks[0], d, m)
    return OneShotResult("distill", eps, best, cert, scan)


def one_shot_cost_mio(rho, eps: float, m_max: int | None = None, tol: float = 1e-9,
                      feas_tol: float = FEAS_TOL, cap: int = la.DIM_CAP) -> OneShotResult:
    """Smallest ``M <= m_max`` with ``max_E F(rho, E(Psi_M))^2 >= 1 - eps``; ``m_star`` is ``None`` if none is."""
    if not 0 < eps < 1:
        raise la.ValidationError("epsilon must lie in (0, 1)")
    rho = la.validate_state(rho)
    d = rho.shape[0]
    m_max = d * d if m_max is None else m_max
    _check_dims(d, m_max, cap)
    scan, best, cert = [], None, None
    for m in range(1, m_max + 1):
        sol = _solve(cost_problem(rho, m), tol, f"cost M={m}", scan)
        fid = max(float(sol.primal_value), 0.0)
        ok = fid * fid >= 1.0 - eps - feas_tol
        scan.append({"M": m, "value": fid * fid, "gap": float(sol.gap), "feasible": bool(ok)})
        if ok and best is None:
            best, cert = m, ch.ChoiMatrix(sol.blocks[0], m, d)
    return OneShotResult("cost", eps, best, cert, scan)


def certificate_residuals(res: OneShotResult) -> dict:
    """MIO and trace-preservation residuals of the achieving Choi matrix."""
    J = res.certificate
    if J is None:
        return {"mio": 0.0, "tp": 0.0, "psd": 0.0}
    return {"mio": ch.is_mio(J).residual, "tp": ch.tp_residual(J), "psd": la.min_eig(J.mat)}


@dataclass
class BoundReport:
    name: str
    lhs: float
    rhs: float
    holds: bool
    slack: float
    detail: dict = field(default_factory=dict)


def check_cost_bound(rho, eps: float, m_max: int | None = None, slack: float = BOUND_SLACK,
                     cost: OneShotResult | None = None) -> BoundReport:
    """``C_max^{2 sqrt(eps)}(rho) <= log2 M*`` with ``M*`` the one-shot cost (recomputed unless given)."""
    cost = cost or one_shot_cost_mio(rho, eps, m_max)
    lhs = ms.smooth_c_max(rho, 2.0 * math.sqrt(eps)).value
    rhs = cost.log_m
    return BoundReport("cost_lower_bound", lhs, rhs, bool(lhs <= rhs + slack), slack,
                       {"m_star": cost.m_star, "certificate": certificate_residuals(cost)})


def check_distill_bound(rho, eps: float, m_max: int | None = None, slack: float = BOUND_SLACK,
                        dist: OneShotResult | None = None) -> BoundReport:
    """``log2 M* <= C_min^eps(rho)`` with ``M*`` the one-shot distillable dimension (recomputed unless given)."""
    dist = dist or one_shot_distill_mio(rho, eps, m_max)
    lhs = dist.log_m
    rhs = ms.smooth_c_min(rho, eps).value
    return BoundReport("distill_upper_bound", lhs, rhs, bool(lhs <= rhs + slack), slack,
                       {"m_star": dist.m_star, "certificate": certificate_residuals(dist)})


@dataclass
class SweepRecord:
    n: int
    value_max_over_n: float
    value_min_over_n: float
    c_r_target: float
    epsilon: float
    c_max_over_n: float
    c_min_over_n: float

    @property
    def gap_max(self) -> float:
        return abs(self.value_max_over_n - self.c_r_target)

    @property
    def gap_min(self) -> float:
        return abs(self.value_min_over_n - self.c_r_target)

    def unsmoothed_chain(self, tol: float = 1e-7) -> bool:
        return self.c_min_over_n <= self.c_r_target + tol and self.c_r_target <= self.c_max_over_n + tol


def regularized_sweep(rho, eps: float, n_max: int, cap: int = la.DIM_CAP) -> list:
    """Per-copy smoothed and unsmoothed quantities of ``rho^(x)n`` for ``n = 1..n_max``."""
    rho = la.validate_state(rho)
    if rho.shape[0] ** n_max > cap:
        raise la.DimensionCapError(f"dimension {rho.shape[0]}^{n_max} exceeds cap {cap}")
    target = ms.c_r(rho)
    out = []
    for n in range(1, n_max + 1):
        big = la.tensor_power(rho, n, cap)
        big = la.hermitize(big / np.trace(big).real)
        smax = ms.smooth_c_max(big, eps).value if eps > 0 else ms.c_max(big)
        smin = ms.smooth_c_min(big, eps).value if eps > 0 else ms.c_min(big)
        out.append(SweepRecord(n, smax / n, smin / n, target, eps, ms.c_max(big) / n, ms.c_min(big) / n))
    return out

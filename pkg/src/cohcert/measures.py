"""Coherence quantifiers with optimizer witnesses.

``c_max`` and ``roc`` come from the unit-diagonal primal/dual pair, ``c_min``
from the support projector, ``c_r`` and ``c_l1`` directly from the matrix.
Smoothed variants are single SDPs solved by :func:`cohcert.sdp.solve_sdp`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import linalg as la
from .sdp import (Block, CmaxCertificate, Constraint, MatrixConstraint, SdpProblem,
                  SolverError, require_optimal, solve_cmax_pair, solve_sdp)

INCOHERENT_TOL = 1e-9
CERT_TOL = 1e-7
PURITY_TOL = 1e-9


class NotFound(RuntimeError):
    """A randomized search exhausted its budget without a certified instance."""


def is_incoherent(rho, tol: float = INCOHERENT_TOL) -> bool:
    return la.offdiag_l1(rho) < tol


def _incoherent_certificate(rho) -> CmaxCertificate:
    s = np.real(np.diag(rho)).copy()
    d = len(s)
    return CmaxCertificate(s, np.eye(d, dtype=complex), float(s.sum()), float(s.sum()), 0.0, 0)


def cmax_certificate(rho, tol: float = CERT_TOL) -> CmaxCertificate:
    """Certified optimum of ``min sum(s) : diag(s) >= rho``; raises :class:`SolverError` on failure."""
    rho = la.validate_state(rho)
    if is_incoherent(rho):
        return _incoherent_certificate(rho)
    cert = solve_cmax_pair(rho)
    res = cert.residuals(rho)
    scale = 1.0 + abs(cert.value)
    if (res["primal_psd"] < -tol or res["tau_psd"] < -tol or res["tau_diag"] > tol
            or abs(res["gap"]) > tol * scale):
        raise SolverError(f"C_max pair did not certify: {res}")
    return cert


def c_max(rho, return_certificate: bool = False):
    cert = cmax_certificate(rho)
    value = max(0.0, math.log2(cert.value))
    return (value, cert) if return_certificate else value


def roc(rho) -> float:
    return 2.0 ** c_max(rho) - 1.0


def c_min(rho, rank_tol: float = la.RANK_TOL) -> float:
    """``-log2 max_i <i|P|i>`` with ``P`` the support projector of ``rho``.

    For a fixed effect ``P`` the minimum of ``-log Tr(P sigma)`` over diagonal
    states is reached at a basis state, since ``Tr(P sigma)`` is a convex
    combination of the diagonal entries of ``P``.
    """
    rho = la.validate_state(rho)
    if is_incoherent(rho):
        return 0.0
    proj = la.support_projector(rho, rank_tol)
    top = float(np.real(np.diag(proj)).max())
    return max(0.0, -math.log2(min(top, 1.0)))


def c_r(rho) -> float:
    rho = la.validate_state(rho)
    if is_incoherent(rho):
        return 0.0
    return max(0.0, la.von_neumann_entropy(la.dephase(rho)) - la.von_neumann_entropy(rho))


def c_l1(rho) -> float:
    return la.offdiag_l1(la.validate_state(rho))


def pure_closed_forms(psi):
    """``(C_max, C_min, max overlap with incoherent states)`` of a pure state."""
    a = np.abs(la.validate_pure(psi))
    top = float((a ** 2).max())
    return 2.0 * math.log2(a.sum()), -math.log2(top), top


def pure_certificate(psi) -> CmaxCertificate:
    """Exact witnesses for a pure state: ``s_i = |psi_i| sum|psi|`` and ``tau = |u><u|`` with ``u_i = psi_i/|psi_i|``."""
    psi = la.validate_pure(psi)
    a = np.abs(psi)
    u = np.where(a > 0, psi / np.where(a > 0, a, 1.0), 1.0)
    s = a * a.sum()
    tau = np.outer(u, u.conj())
    v = float(a.sum() ** 2)
    return CmaxCertificate(s, tau, v, v, 0.0, 0)


def c_min_overlap_bound(rho):
    """``(2^-C_min, 1 - 2^-C_min)``: a bound on the largest incoherent fidelity and on geometric coherence."""
    b = 2.0 ** (-c_min(rho))
    return b, 1.0 - b


def as_pure(rho, tol: float = PURITY_TOL):
    """Return the amplitude vector when ``rho`` is rank one within ``tol``, else ``None``."""
    w, v = np.linalg.eigh(la.hermitize(rho))
    if abs(w[-1] - 1.0) > tol:
        return None
    return v[:, -1]


# -- report -------------------------------------------------------------------

@dataclass
class CoherenceReport:
    c_max: float
    c_min: float
    c_r: float
    c_l1: float
    roc: float
    tau_witness: np.ndarray
    sigma_witness: np.ndarray
    pure_state_closed_form_used: bool
    tolerances: dict = field(default_factory=dict)

    def chain_holds(self, tol: float = 1e-7) -> bool:
        return (self.c_min <= self.c_r + tol and self.c_r <= self.c_max + tol
                and self.c_max <= math.log2(1.0 + self.c_l1) + tol
                and abs(self.roc - (2.0 ** self.c_max - 1.0)) <= tol)

    def to_json(self, witness: bool = False) -> dict:
        out = {
            "c_max": self.c_max,
            "c_min": self.c_min,
            "c_r": self.c_r,
            "c_l1": self.c_l1,
            "roc": self.roc,
            "pure_state_closed_form_used": self.pure_state_closed_form_used,
            "tolerances": dict(self.tolerances),
        }
        if witness:
            out["tau_witness"] = la.matrix_to_json(self.tau_witness)
            out["sigma_witness"] = la.matrix_to_json(self.sigma_witness)
        return out


def coherence_report(rho, rank_tol: float = la.RANK_TOL) -> CoherenceReport:
    rho = la.validate_state(rho)
    psi = as_pure(rho)
    if psi is not None and not is_incoherent(rho):
        cmax, cmin, _ = pure_closed_forms(psi / np.linalg.norm(psi))
        cert = pure_certificate(psi / np.linalg.norm(psi))
        closed = True
    else:
        cmax, cert = c_max(rho, return_certificate=True)
        cmin = c_min(rho, rank_tol)
        closed = False
    tols = {"incoherent": INCOHERENT_TOL, "certificate": CERT_TOL, "rank": rank_tol,
            "purity": PURITY_TOL, "psd": la.TOL_PSD, "trace": la.TOL_TRACE}
    return CoherenceReport(cmax, cmin, c_r(rho), c_l1(rho), 2.0 ** cmax - 1.0,
                           cert.tau, cert.sigma, closed, tols)


# -- smoothed quantities ------------------------------------------------------

@dataclass
class SmoothResult:
    epsilon: float
    value: float
    witness: np.ndarray
    gap: float
    iterations: int = 0

    def check(self, rho, kind: str, tol: float = 1e-6) -> dict:
        """Residuals of the witness constraints; ``kind`` is ``"max"`` or ``"min"``."""
        rho = np.asarray(rho, dtype=complex)
        w = la.hermitize(self.witness)
        if kind == "max":
            return {"psd": la.min_eig(w),
                    "distance_excess": la.trace_norm(w - rho) - self.epsilon,
                    "trace_excess": float(np.trace(w).real - np.trace(rho).real)}
        return {"psd": la.min_eig(w),
                "below_identity": la.min_eig(np.eye(len(w)) - w),
                "acceptance_excess": (1.0 - self.epsilon) - float(np.real(np.trace(w @ rho)))}


def smooth_c_max_problem(rho, eps: float) -> SdpProblem:
    """Blocks ``s >= 0``, ``rho' >= 0``, ``P >= 0``, ``Q >= 0``; minimise ``sum(s)``."""
    d = rho.shape[0]
    eye = np.eye(d)
    return SdpProblem(
        blocks=[Block(d, "nonneg"), Block(d), Block(d), Block(d)],
        objective={0: np.ones(d)},
        constraints=[
            MatrixConstraint({0: lambda s: np.diag(s).astype(complex), 1: lambda r: -r},
                             np.zeros((d, d)), ">=", "dominance"),
            MatrixConstraint({1: lambda r: r, 2: lambda p: -p, 3: lambda q: q}, rho, "==", "ball"),
            Constraint({2: eye, 3: eye}, eps, "<=", "radius"),
            Constraint({1: eye}, float(np.trace(rho).real), "<=", "trace"),
        ],
        sense="min",
    )


def smooth_c_max(rho, eps: float, tol: float = 1e-8) -> SmoothResult:
    """Minimum of ``C_max`` over the trace-distance ball of subnormalized states.

    The value is ``-inf`` once the zero operator is inside the ball, and may
    be negative before that because the ball contains subnormalized states.
    """
    if eps < 0:
        raise la.ValidationError("epsilon must be nonnegative")
    rho = la.validate_state(rho)
    if eps == 0:
        cert = cmax_certificate(rho)
        return SmoothResult(0.0, max(0.0, math.log2(cert.value)), rho, cert.gap, cert.iterations)
    if eps >= float(np.trace(rho).real):
        d = rho.shape[0]
        return SmoothResult(eps, -math.inf, np.zeros((d, d), dtype=complex), 0.0, 0)
    sol = require_optimal(solve_sdp(smooth_c_max_problem(rho, eps), tol, tol), "smooth C_max")
    upper, lower = sol.primal_value, sol.dual_value
    value = math.log2(upper) if upper > 0 else -math.inf
    gap = value - math.log2(lower) if lower > 0 and upper > 0 else math.inf
    return SmoothResult(eps, value, la.hermitize(sol.blocks[1]), gap, sol.iterations)


def smooth_c_min_problem(rho, eps: float) -> SdpProblem:
    """Blocks ``t >= 0`` and ``0 <= A <= I``; minimise ``t`` with ``A_ii <= t`` and ``Tr(A rho) >= 1 - eps``."""
    d = rho.shape[0]
    cons = []
    for i in range(d):
        e = np.zeros((d, d))
        e[i, i] = -1.0
        cons.append(Constraint({0: np.ones(1), 1: e}, 0.0, ">=", f"diag{i}"))
    cons.append(Constraint({1: rho}, 1.0 - eps, ">=", "acceptance"))
    return SdpProblem([Block(1, "nonneg"), Block(d, "box")], {0: np.ones(1)}, cons, "min")


def smooth_c_min(rho, eps: float, tol: float = 1e-8, rank_tol: float = la.RANK_TOL) -> SmoothResult:
    if not 0 <= eps < 1:
        raise la.ValidationError("epsilon must lie in [0, 1)")
    rho = la.validate_state(rho)
    if eps == 0:
        proj = la.support_projector(rho, rank_tol)
        return SmoothResult(0.0, c_min(rho, rank_tol), proj, 0.0, 0)
    sol = require_optimal(solve_sdp(smooth_c_min_problem(rho, eps), tol, tol), "smooth C_min")
    t_up = float(sol.primal_value)
    t_lo = float(sol.dual_value)
    value = -math.log2(t_up)
    gap = (math.log2(t_up) - math.log2(t_lo)) if t_lo > 0 else math.inf
    return SmoothResult(eps, value, la.hermitize(sol.blocks[1]), gap, sol.iterations)


def smoothing_order_check(rho, eps: float, slack: float = 1e-6):
    """``(C^eps_min, C^eps_max - log2(1 - 2 eps), holds)`` for ``0 <= eps < 1/2``."""
    if not 0 <= eps < 0.5:
        raise la.ValidationError("epsilon must lie in [0, 1/2)")
    lhs = smooth_c_min(rho, eps).value
    rhs = smooth_c_max(rho, eps).value - math.log2(1.0 - 2.0 * eps)
    return lhs, rhs, lhs <= rhs + slack


# -- convex roof ----------------------------------------------------------------

@dataclass
class RoofEstimate:
    value: float
    weights: np.ndarray
    states: np.ndarray  # rows are normalized pure states
    restarts: int

    def recompute(self) -> float:
        total = 0.0
        for p, psi in zip(self.weights, self.states):
            if p > 0:
                total += p * 2.0 * math.log2(np.abs(psi).sum())
        return total


def _roof_objective(vecs):
    """``sum_k p_k log2(||v_k||_1^2 / p_k)`` for unnormalized rows ``v_k``."""
    p = np.einsum("ij,ij->i", vecs.conj(), vecs).real
    l1 = np.abs(vecs).sum(axis=1)
    mask = p > 1e-300
    return float(np.sum(p[mask] * np.log2(l1[mask] ** 2 / p[mask])))


def _isometry(z):
    u, _, vh = np.linalg.svd(z, full_matrices=False)
    return u @ vh


def convex_roof_cmax_upper(rho, restarts: int = 8, seed=0, maxiter: int = 200) -> RoofEstimate:
    """Upper estimate of the convex roof of ``C_max`` by searching over pure-state decompositions.

    Decompositions are rows of ``U sqrt(L) E^T`` for isometries ``U`` with up
    to ``d^2`` rows, where ``rho = E L E^dag``.  Start 0 is the eigen
    decomposition; start ``k`` draws its isometry from ``default_rng([seed, k])``
    so the best value never increases as ``restarts`` grows.
    """
    rho = la.validate_state(rho)
    d = rho.shape[0]
    w, v = np.linalg.eigh(rho)
    if is_incoherent(rho):
        diag = np.real(np.diag(rho))
        return RoofEstimate(0.0, diag.copy(), np.eye(d, dtype=complex), 0)
    psi = as_pure(rho)
    if psi is not None:
        psi = psi / np.linalg.norm(psi)
        return RoofEstimate(pure_closed_forms(psi)[0], np.ones(1), psi[None, :], 0)
    keep = w > la.RANK_TOL * w[-1]
    base = (v[:, keep] * np.sqrt(w[keep])).T  # r x d, rows sum to rho
    r = base.shape[0]
    K = d * d

    def unpack(x):
        z = (x[:K * r] + 1j * x[K * r:]).reshape(K, r)
        return _isometry(z) @ base

    def f(x):
        return _roof_objective(unpack(x))

    best_val, best_vecs = _roof_objective(base), base
    for k in range(restarts):
        rng = np.random.default_rng([int(seed), k])
        if k == 0:
            z0 = np.zeros((K, r), dtype=complex)
            z0[:r] = np.eye(r)
            z0 += 1e-3 * (rng.normal(size=(K, r)) + 1j * rng.normal(size=(K, r)))
        else:
            z0 = rng.normal(size=(K, r)) + 1j * rng.normal(size=(K, r))
        x0 = np.concatenate([z0.real.ravel(), z0.imag.ravel()])
        res = optimize.minimize(f, x0, method="L-BFGS-B", options={"maxiter": maxiter})
        vecs = unpack(res.x)
        val = _roof_objective(vecs)
        if val < best_val:
            best_val, best_vecs = val, vecs
    p = np.einsum("ij,ij->i", best_vecs.conj(), best_vecs).real
    mask = p > 1e-14
    states = best_vecs[mask] / np.sqrt(p[mask])[:, None]
    est = RoofEstimate(0.0, p[mask], states, restarts)
    est.value = est.recompute()
    return est


# -- searches and checks --------------------------------------------------------

@dataclass
class IoViolation:
    psi: np.ndarray
    kraus: list
    average_c_min_after: float
    c_min_before: float
    probabilities: np.ndarray

    @property
    def margin(self) -> float:
        return self.average_c_min_after - self.c_min_before


def average_c_min(psi, kraus):
    """Outcome probabilities and the probability-weighted ``C_min`` of the post-measurement pure states."""
    probs, total = [], 0.0
    for k in kraus:
        out = np.asarray(k) @ psi
        p = float(np.vdot(out, out).real)
        probs.append(p)
        if p > 1e-14:
            total += p * pure_closed_forms(out / math.sqrt(p))[1]
    return np.array(probs), total


def cmin_io_violation_demo(seed=0, trials: int = 2000, margin: float = 1e-3) -> IoViolation:
    """Search pure qubit/qutrit states and two-outcome incoherent operations for a rise of average ``C_min``.

    The first operator is a random permutation times a diagonal contraction,
    the second is the diagonal completion, so both are incoherent.
    """
    from .channels import is_io, completeness_residual

    rng = np.random.default_rng(seed)
    for _ in range(trials):
        d = int(rng.integers(2, 4))
        psi = la.random_pure_state(d, rng)
        perm = np.eye(d)[rng.permutation(d)]
        amp = rng.uniform(0.0, 1.0, size=d) * np.exp(1j * rng.uniform(0, 2 * np.pi, size=d))
        k1 = perm @ np.diag(amp)
        k2 = np.diag(np.sqrt(np.clip(1.0 - np.abs(amp) ** 2, 0.0, None))).astype(complex)
        kraus = [k1, k2]
        probs, after = average_c_min(psi, kraus)
        before = pure_closed_forms(psi)[1]
        if after > before + margin and is_io(kraus) and completeness_residual(kraus) < 1e-12:
            return IoViolation(psi, kraus, after, before, probs)
    raise NotFound(f"no average C_min increase found in {trials} trials")


def quasi_convexity_check(states, weights, tol: float = 1e-7) -> bool:
    """``C_max(sum p_i rho_i) <= max_i C_max(rho_i) + tol``."""
    weights = np.asarray(weights, dtype=float)
    if len(states) != len(weights) or len(states) == 0:
        raise la.ValidationError("need one weight per state")
    if np.any(weights < -1e-12) or abs(weights.sum() - 1.0) > 1e-9:
        raise la.ValidationError("weights must be a probability vector")
    mats = [la.validate_state(s) for s in states]
    if len({m.shape for m in mats}) != 1:
        raise la.ValidationError("states have different dimensions")
    mix = sum(p * m for p, m in zip(weights, mats))
    return c_max(mix) <= max(c_max(m) for m in mats) + tol

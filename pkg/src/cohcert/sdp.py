"""Small dense SDP engine over complex Hermitian blocks.

Two solvers live here:

* :func:`solve_sdp` -- an infeasible-start primal-dual path-following method
  (Nesterov-Todd scaling, Mehrotra predictor-corrector) for problems built with
  :class:`SdpProblem`.
* :func:`solve_cmax_pair` -- a feasible-start method for the unit-diagonal
  program ``max Tr(rho tau), diag(tau) = 1, tau >= 0`` and its dual
  ``min sum(s), diag(s) >= rho``, whose common value is ``2**C_max(rho)``.

Hermitian matrices are handled natively through an orthonormal real
coordinate system (``svec``), so no real embedding doubles the sizes.
"""

from __future__ import annotations

import contextlib
import contextvars
import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .linalg import hermitize, validate_state

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
ITER_LIMIT = "IterLimit"

TOL_GAP = 1e-8
TOL_FEAS = 1e-8
MAX_ITER = 200

_trace_sink: contextvars.ContextVar = contextvars.ContextVar("sdp_trace_sink", default=None)


@contextlib.contextmanager
def trace_to(stream):
    """Write one CSV row per interior-point iteration of every solve in this context."""
    writer = csv.writer(stream)
    writer.writerow(["solver", "iter", "primal", "dual", "gap", "pres", "dres", "mu"])
    token = _trace_sink.set(writer)
    try:
        yield writer
    finally:
        _trace_sink.reset(token)


def _emit(solver, it, pobj, dobj, gap, pres, dres, mu):
    writer = _trace_sink.get()
    if writer is not None:
        writer.writerow([solver, it] + [f"{v:.17g}" for v in (pobj, dobj, gap, pres, dres, mu)])


# -- Hermitian real coordinates -------------------------------------------

_BASIS_CACHE: dict[int, tuple] = {}


def _hbasis(n: int):
    """Index/coefficient arrays of the orthonormal Hermitian basis.

    Coordinate k of X is ``Re(conj(ca[k]) X.flat[ia[k]] + conj(cb[k]) X.flat[ib[k]])``.
    """
    if n in _BASIS_CACHE:
        return _BASIS_CACHE[n]
    ia, ib, ca, cb = [], [], [], []
    r = 1.0 / math.sqrt(2.0)
    for i in range(n):
        ia.append(i * n + i)
        ib.append(i * n + i)
        ca.append(1.0)
        cb.append(0.0)
    for i in range(n):
        for j in range(i + 1, n):
            ia.append(i * n + j)
            ib.append(j * n + i)
            ca.append(r)
            cb.append(r)
            ia.append(i * n + j)
            ib.append(j * n + i)
            ca.append(1j * r)
            cb.append(-1j * r)
    out = (np.array(ia), np.array(ib), np.array(ca, dtype=complex), np.array(cb, dtype=complex))
    _BASIS_CACHE[n] = out
    return out


def svec(x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    ia, ib, ca, cb = _hbasis(x.shape[0])
    f = x.ravel()
    return np.real(np.conj(ca) * f[ia] + np.conj(cb) * f[ib])


def smat(v, n: int) -> np.ndarray:
    ia, ib, ca, cb = _hbasis(n)
    v = np.asarray(v, dtype=float)
    f = np.zeros(n * n, dtype=complex)
    np.add.at(f, ia, ca * v)
    np.add.at(f, ib, cb * v)
    return f.reshape(n, n)


def map_matrix(fn: Callable, n_in: int, n_out: int, kind_in: str = "psd") -> np.ndarray:
    """Real matrix of a Hermitian-preserving linear map in svec coordinates."""
    size_in = n_in if kind_in == "nonneg" else n_in * n_in
    cols = []
    for k in range(size_in):
        if kind_in == "nonneg":
            e = np.zeros(n_in)
            e[k] = 1.0
        else:
            e = np.zeros(size_in)
            e[k] = 1.0
            e = smat(e, n_in)
        cols.append(svec(np.asarray(fn(e), dtype=complex).reshape(n_out, n_out)))
    return np.array(cols).T


def _scaling_matrix(w: np.ndarray) -> np.ndarray:
    """svec matrix of X -> W X W for Hermitian W."""
    n = w.shape[0]
    ia, ib, ca, cb = _hbasis(n)
    k = np.kron(w, w.T)
    ku = k[:, ia] * ca + k[:, ib] * cb
    return np.real(np.conj(ca)[:, None] * ku[ia, :] + np.conj(cb)[:, None] * ku[ib, :])


# -- problem description ----------------------------------------------------

@dataclass
class Block:
    """A matrix variable: ``psd`` (X >= 0), ``box`` (0 <= X <= I) or ``nonneg`` (x in R^n_+)."""

    dim: int
    kind: str = "psd"


@dataclass
class Constraint:
    """Scalar constraint ``sum_k <coeffs[k], X_k>  (sense)  rhs``."""

    coeffs: dict
    rhs: float
    sense: str = "=="
    name: str = ""


@dataclass
class MatrixConstraint:
    """Hermitian-valued constraint ``sum_k maps[k](X_k)  (sense)  rhs``.

    ``>=`` and ``<=`` are semidefinite orderings; a slack block is added.
    """

    maps: dict
    rhs: np.ndarray
    sense: str = "=="
    name: str = ""


@dataclass
class SdpProblem:
    blocks: list
    objective: dict
    constraints: list = field(default_factory=list)
    sense: str = "min"

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("an SDP needs at least one variable block")
        if self.sense not in ("min", "max"):
            raise ValueError(f"unknown objective sense {self.sense!r}")
        for k, blk in enumerate(self.blocks):
            if blk.kind not in ("psd", "box", "nonneg") or blk.dim < 1:
                raise ValueError(f"bad block {k}: {blk}")
        for k, coef in self.objective.items():
            self._check_coeff(k, coef)
        for con in self.constraints:
            if con.sense not in ("==", "<=", ">="):
                raise ValueError(f"unknown constraint sense {con.sense!r}")
            if isinstance(con, Constraint):
                for k, coef in con.coeffs.items():
                    self._check_coeff(k, coef)
            else:
                rhs = np.asarray(con.rhs)
                if rhs.ndim != 2 or rhs.shape[0] != rhs.shape[1]:
                    raise ValueError("matrix constraint rhs must be square")
                if np.abs(rhs - rhs.conj().T).max(initial=0) > 1e-12 * max(1, np.abs(rhs).max(initial=0)):
                    raise ValueError("matrix constraint rhs must be Hermitian")

    def _check_coeff(self, k, coef):
        if not 0 <= k < len(self.blocks):
            raise ValueError(f"coefficient refers to missing block {k}")
        blk = self.blocks[k]
        a = np.asarray(coef)
        if blk.kind == "nonneg":
            if a.shape != (blk.dim,):
                raise ValueError(f"block {k} coefficient must have shape ({blk.dim},)")
        elif a.shape != (blk.dim, blk.dim) or np.abs(a - a.conj().T).max(initial=0) > 1e-12 * max(1, np.abs(a).max(initial=0)):
            raise ValueError(f"block {k} coefficient must be a Hermitian {blk.dim}x{blk.dim} matrix")


@dataclass
class SdpSolution:
    status: str
    blocks: list
    duals: list
    primal_value: float
    dual_value: float
    gap: float
    primal_residual: float
    dual_residual: float
    min_eig: float
    iterations: int
    history: list = field(default_factory=list)
    ray: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class SolverError(RuntimeError):
    """Raised by callers that require an optimal certificate and did not get one."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


# -- compilation to standard form ------------------------------------------
#   min c.x  s.t.  A x = b,  x in K = prod S^n_+ x R^l_+

@dataclass
class _Std:
    cones: list
    offsets: list
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    block_cone: list
    row_groups: list
    sign: float


def _cone_size(cone):
    kind, n = cone
    return n * n if kind == "s" else n


def _compile(prob: SdpProblem) -> _Std:
    cones, block_cone = [], []
    for blk in prob.blocks:
        block_cone.append(len(cones))
        cones.append(("l" if blk.kind == "nonneg" else "s", blk.dim))

    rows: list[dict] = []  # each row: {cone index: coefficient vector}, plus rhs
    rhs: list[float] = []
    row_groups = []
    scalar_slacks = []  # (row index, +1/-1)

    def block_vec(k, coef):
        return np.asarray(coef, dtype=float) if prob.blocks[k].kind == "nonneg" else svec(coef)

    for con in prob.constraints:
        if isinstance(con, Constraint):
            row = {block_cone[k]: block_vec(k, coef) for k, coef in con.coeffs.items()}
            if con.sense != "==":
                scalar_slacks.append((len(rows), 1.0 if con.sense == "<=" else -1.0))
            row_groups.append(("scalar", len(rows), len(rows) + 1))
            rows.append(row)
            rhs.append(float(con.rhs))
            continue
        r = np.asarray(con.rhs, dtype=complex)
        n_out = r.shape[0]
        mats = {}
        for k, fn in con.maps.items():
            blk = prob.blocks[k]
            mats[block_cone[k]] = map_matrix(fn, blk.dim, n_out, blk.kind)
        if con.sense != "==":
            cones.append(("s", n_out))
            sgn = 1.0 if con.sense == "<=" else -1.0
            mats[len(cones) - 1] = sgn * np.eye(n_out * n_out)
        start = len(rows)
        rv = svec(r)
        for i in range(n_out * n_out):
            rows.append({ci: m[i] for ci, m in mats.items()})
            rhs.append(float(rv[i]))
        row_groups.append(("matrix", start, len(rows), n_out))

    for k, blk in enumerate(prob.blocks):
        if blk.kind == "box":
            cones.append(("s", blk.dim))
            eye = np.eye(blk.dim * blk.dim)
            rv = svec(np.eye(blk.dim))
            for i in range(blk.dim * blk.dim):
                rows.append({block_cone[k]: eye[i], len(cones) - 1: eye[i]})
                rhs.append(float(rv[i]))

    if scalar_slacks:
        cones.append(("l", len(scalar_slacks)))
        li = len(cones) - 1
        for j, (ri, sgn) in enumerate(scalar_slacks):
            e = np.zeros(len(scalar_slacks))
            e[j] = sgn
            rows[ri][li] = e

    offsets = [0]
    for cone in cones:
        offsets.append(offsets[-1] + _cone_size(cone))
    A = np.zeros((len(rows), offsets[-1]))
    for i, row in enumerate(rows):
        for ci, v in row.items():
            A[i, offsets[ci]:offsets[ci + 1]] = v
    sign = 1.0 if prob.sense == "min" else -1.0
    c = np.zeros(offsets[-1])
    for k, coef in prob.objective.items():
        ci = block_cone[k]
        c[offsets[ci]:offsets[ci + 1]] = sign * block_vec(k, coef)
    return _Std(cones, offsets, A, np.array(rhs, dtype=float), c, block_cone, row_groups, sign)


# -- interior point core ----------------------------------------------------

def _identity(std):
    e = np.zeros(std.offsets[-1])
    for ci, (kind, n) in enumerate(std.cones):
        sl = slice(std.offsets[ci], std.offsets[ci + 1])
        e[sl] = svec(np.eye(n)) if kind == "s" else 1.0
    return e


def _max_step(std, x, dx):
    """Largest alpha with x + alpha dx in K (inf if unbounded)."""
    alpha = math.inf
    for ci, (kind, n) in enumerate(std.cones):
        sl = slice(std.offsets[ci], std.offsets[ci + 1])
        if kind == "l":
            neg = dx[sl] < 0
            if np.any(neg):
                alpha = min(alpha, float(np.min(-x[sl][neg] / dx[sl][neg])))
            continue
        X = smat(x[sl], n)
        dX = smat(dx[sl], n)
        try:
            L = np.linalg.cholesky(hermitize(X))
            Li = sla.solve_triangular(L, np.eye(n), lower=True)
            lam = np.linalg.eigvalsh(hermitize(Li @ dX @ Li.conj().T))[0]
        except np.linalg.LinAlgError:
            return 0.0
        if lam < 0:
            alpha = min(alpha, -1.0 / lam)
    return alpha


def _in_cone_min(std, v):
    """Smallest eigenvalue (or entry) of v over all cones."""
    out = math.inf
    for ci, (kind, n) in enumerate(std.cones):
        sl = slice(std.offsets[ci], std.offsets[ci + 1])
        if kind == "l":
            if n:
                out = min(out, float(v[sl].min()))
        else:
            out = min(out, float(np.linalg.eigvalsh(hermitize(smat(v[sl], n)))[0]))
    return out


def _independent_rows(A, b):
    """Drop linearly dependent equality rows; report an inconsistency ray if any."""
    m = A.shape[0]
    if m == 0:
        return np.arange(0), None
    q, r, piv = sla.qr(A.T, mode="economic", pivoting=True)
    d = np.abs(np.diag(r))
    tol = max(A.shape) * np.finfo(float).eps * (d[0] if d.size else 1.0) * 10
    rank = int(np.sum(d > tol))
    keep = np.sort(piv[:rank])
    if rank == m:
        return keep, None
    # consistency: b must lie in the row space image
    Ak = A[keep]
    coef, *_ = np.linalg.lstsq(Ak.T, A.T, rcond=None)  # A^T = Ak^T coef
    resid = b - coef.T @ b[keep]
    j = int(np.argmax(np.abs(resid)))
    if abs(resid[j]) > 1e-9 * (1 + np.abs(b).max()):
        y = np.zeros(m)
        y[j] = 1.0
        y[keep] -= coef[:, j]
        y /= float(b @ y)
        return keep, y
    return keep, None


def solve_sdp(prob: SdpProblem, tol_gap: float = TOL_GAP, tol_feas: float = TOL_FEAS,
              max_iter: int = MAX_ITER) -> SdpSolution:
    """Solve ``prob`` to relative gap ``tol_gap`` and relative residuals ``tol_feas``.

    Status is ``Optimal`` only when every tolerance is met.  ``Infeasible`` is
    returned only together with a verified Farkas ray ``y`` (``b.y = 1``,
    ``-A^T y`` in the cone) in ``solution.ray``; otherwise ``IterLimit``.
    Multipliers refer to the minimisation form of the problem.
    """
    std = _compile(prob)
    keep, ray = _independent_rows(std.A, std.b)
    if ray is not None:
        return _infeasible(prob, std, ray, 0)
    A = std.A[keep]
    b = std.b[keep]
    c = std.c
    m, N = A.shape
    nu = sum(n for _, n in std.cones)
    e = _identity(std)

    # starting point in the spirit of SDPT3
    x = np.zeros(N)
    z = np.zeros(N)
    for ci, (kind, n) in enumerate(std.cones):
        sl = slice(std.offsets[ci], std.offsets[ci + 1])
        Ak = A[:, sl]
        an = np.linalg.norm(Ak, axis=1) if m else np.zeros(0)
        xi = max(10.0, math.sqrt(n), n * float(np.max((1 + np.abs(b)) / (1 + an), initial=0.0)))
        eta = max(10.0, math.sqrt(n), float(np.max(an, initial=0.0)), float(np.linalg.norm(c[sl])))
        x[sl] = xi * e[sl]
        z[sl] = eta * e[sl]
    y = np.zeros(m)

    bnorm = 1.0 + float(np.linalg.norm(b))
    cnorm = 1.0 + float(np.linalg.norm(c))
    history = []
    status = ITER_LIMIT
    it = 0
    for it in range(1, max_iter + 1):
        rp = b - A @ x
        rd = c - A.T @ y - z
        pobj = float(c @ x)
        dobj = float(b @ y)
        mu = float(x @ z) / nu
        pres = float(np.linalg.norm(rp)) / bnorm
        dres = float(np.linalg.norm(rd)) / cnorm
        gap = abs(pobj - dobj)
        history.append({"iter": it, "primal": pobj, "dual": dobj, "gap": gap,
                        "pres": pres, "dres": dres, "mu": mu})
        _emit("sdp", it, pobj, dobj, gap, pres, dres, mu)
        if pres <= tol_feas and dres <= tol_feas and gap <= tol_gap * (1 + abs(pobj)):
            status = OPTIMAL
            break
        if dobj > 0:
            cand = np.zeros(std.A.shape[0])
            cand[keep] = y / dobj
            if _is_ray(std, cand):
                return _infeasible(prob, std, cand, it)

        # NT scaling per cone
        scal = []
        for ci, (kind, n) in enumerate(std.cones):
            sl = slice(std.offsets[ci], std.offsets[ci + 1])
            if kind == "l":
                xs, zs = x[sl], z[sl]
                scal.append((xs / zs, (xs / zs) ** 0.25, np.sqrt(xs * zs)))
                continue
            X = hermitize(smat(x[sl], n))
            Z = hermitize(smat(z[sl], n))
            try:
                L = np.linalg.cholesky(X)
            except np.linalg.LinAlgError:
                break
            lam, U = np.linalg.eigh(hermitize(L.conj().T @ Z @ L))
            lam = np.clip(lam, 1e-300, None)
            G = (L @ U) * lam ** -0.25
            W = G @ G.conj().T
            scal.append((_scaling_matrix(W), G, np.sqrt(lam)))
        if len(scal) != len(std.cones):
            break

        Msch = np.zeros((m, m))
        for ci, (kind, n) in enumerate(std.cones):
            sl = slice(std.offsets[ci], std.offsets[ci + 1])
            T = scal[ci][0]
            Ak = A[:, sl]
            Msch += (Ak * T) @ Ak.T if kind == "l" else Ak @ T @ Ak.T
        try:
            Msch = 0.5 * (Msch + Msch.T)
            try:
                cho = sla.cho_factor(Msch)
            except np.linalg.LinAlgError:
                cho = sla.cho_factor(Msch + 1e-14 * np.eye(m) * max(1.0, np.abs(Msch).max()))
            solve = lambda r: sla.cho_solve(cho, r)
        except (np.linalg.LinAlgError, ValueError):
            lu = sla.lu_factor(Msch)
            solve = lambda r: sla.lu_solve(lu, r)

        def apply_T(v):
            out = np.empty_like(v)
            for ci, (kind, n) in enumerate(std.cones):
                sl = slice(std.offsets[ci], std.offsets[ci + 1])
                T = scal[ci][0]
                out[sl] = T * v[sl] if kind == "l" else T @ v[sl]
            return out

        def direction(D):
            # D: per-cone scaled target, returns dx, dy, dz
            gdg = np.empty(N)
            for ci, (kind, n) in enumerate(std.cones):
                sl = slice(std.offsets[ci], std.offsets[ci + 1])
                if kind == "l":
                    g = scal[ci][1]
                    gdg[sl] = g * g * D[ci]
                else:
                    G = scal[ci][1]
                    gdg[sl] = svec(G @ D[ci] @ G.conj().T)
            rhs = rp - A @ gdg + A @ apply_T(rd)
            dy = solve(rhs)
            for _ in range(2):  # iterative refinement against the unregularised Schur matrix
                dy = dy + solve(rhs - Msch @ dy)
            dz = rd - A.T @ dy
            dx = gdg - apply_T(dz)
            return dx, dy, dz

        def scaled(dx, dz):
            out = []
            for ci, (kind, n) in enumerate(std.cones):
                sl = slice(std.offsets[ci], std.offsets[ci + 1])
                if kind == "l":
                    g = scal[ci][1]
                    out.append((dx[sl] / g, dz[sl] * g))
                else:
                    G = scal[ci][1]
                    Gi = np.linalg.inv(G)
                    out.append((Gi @ smat(dx[sl], n) @ Gi.conj().T, G.conj().T @ smat(dz[sl], n) @ G))
            return out

        def target(sigma_mu, corr):
            D = []
            for ci, (kind, n) in enumerate(std.cones):
                v = scal[ci][2]
                if kind == "l":
                    R = sigma_mu - v * v
                    if corr is not None:
                        R = R - corr[ci][0] * corr[ci][1]
                    D.append(R / v)
                else:
                    R = np.diag(sigma_mu - v * v).astype(complex)
                    if corr is not None:
                        P = corr[ci][0] @ corr[ci][1]
                        R = R - 0.5 * (P + P.conj().T)
                    D.append(2.0 * R / (v[:, None] + v[None, :]))
            return D

        dx, dy, dz = direction(target(0.0, None))
        ap = min(1.0, _max_step(std, x, dx))
        ad = min(1.0, _max_step(std, z, dz))
        mu_aff = float((x + ap * dx) @ (z + ad * dz)) / nu
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        dx, dy, dz = direction(target(sigma * mu, scaled(dx, dz)))
        gamma = 0.9 + 0.09 * min(ap, ad)
        ap = min(1.0, gamma * _max_step(std, x, dx))
        ad = min(1.0, gamma * _max_step(std, z, dz))
        if max(ap, ad) < 1e-8:
            # lost centrality: fall back to a pure centering step toward the current mu
            dx, dy, dz = direction(target(mu, None))
            ap = min(1.0, 0.95 * _max_step(std, x, dx))
            ad = min(1.0, 0.95 * _max_step(std, z, dz))
            if ap < 1e-12 and ad < 1e-12:
                break
        x = x + ap * dx
        y = y + ad * dy
        z = z + ad * dz

    return _package(prob, std, keep, x, y, z, status, it, history)


def _is_ray(std, y_full, tol=1e-8):
    if not np.all(np.isfinite(y_full)):
        return False
    s = -(std.A.T @ y_full)
    scale = max(1.0, float(np.abs(y_full).max()))
    return abs(float(std.b @ y_full) - 1.0) < 1e-9 and _in_cone_min(std, s) >= -tol * scale


def _infeasible(prob, std, ray, it):
    return SdpSolution(INFEASIBLE, [], [], math.nan, math.nan, math.nan, math.nan, math.nan,
                       math.nan, it, [], ray)


def _package(prob, std, keep, x, y, z, status, it, history):
    blocks = []
    for k, blk in enumerate(prob.blocks):
        ci = std.block_cone[k]
        sl = slice(std.offsets[ci], std.offsets[ci + 1])
        blocks.append(x[sl].copy() if blk.kind == "nonneg" else hermitize(smat(x[sl], blk.dim)))
    yfull = np.zeros(std.A.shape[0])
    yfull[keep] = y
    duals = []
    for grp in std.row_groups:
        if grp[0] == "scalar":
            duals.append(float(yfull[grp[1]]))
        else:
            duals.append(hermitize(smat(yfull[grp[1]:grp[2]], grp[3])))
    pobj = float(std.c @ x)
    dobj = float(std.b @ yfull)
    rp = std.b - std.A @ x
    rd = std.c - std.A.T @ yfull - z
    return SdpSolution(
        status=status,
        blocks=blocks,
        duals=duals,
        primal_value=std.sign * pobj,
        dual_value=std.sign * dobj,
        gap=abs(pobj - dobj),
        primal_residual=float(np.linalg.norm(rp)) / (1.0 + float(np.linalg.norm(std.b))),
        dual_residual=float(np.linalg.norm(rd)) / (1.0 + float(np.linalg.norm(std.c))),
        min_eig=_in_cone_min(std, x),
        iterations=it,
        history=history,
    )


def require_optimal(sol: SdpSolution, what: str = "SDP") -> SdpSolution:
    if sol.status != OPTIMAL:
        raise SolverError(f"{what} ended with status {sol.status}", sol)
    return sol


# -- the C_max primal/dual pair --------------------------------------------

@dataclass
class CmaxCertificate:
    """Both sides of ``min sum(s) : diag(s) >= rho`` = ``max Tr(rho tau) : diag(tau) = 1``."""

    s: np.ndarray
    tau: np.ndarray
    value: float
    lower: float
    gap: float
    iterations: int
    history: list = field(default_factory=list, repr=False)

    @property
    def sigma(self) -> np.ndarray:
        """Optimal incoherent state ``diag(s) / sum(s)``."""
        return np.diag(self.s / self.s.sum()).astype(complex)

    def residuals(self, rho) -> dict:
        rho = np.asarray(rho, dtype=complex)
        return {
            "primal_psd": float(np.linalg.eigvalsh(hermitize(np.diag(self.s) - rho))[0]),
            "tau_psd": float(np.linalg.eigvalsh(hermitize(self.tau))[0]),
            "tau_diag": float(np.abs(np.diag(self.tau) - 1.0).max()),
            "gap": float(self.s.sum() - np.real(np.trace(rho @ self.tau))),
        }


def strictly_feasible_start(rho) -> np.ndarray:
    """``s0_i = 2 lambda_max(rho)``, so that ``diag(s0) - rho`` is positive definite."""
    rho = np.asarray(rho, dtype=complex)
    lmax = float(np.linalg.eigvalsh(hermitize(rho))[-1])
    return np.full(rho.shape[0], 2.0 * lmax)


CMAX_TOL = 1e-11


def solve_cmax_pair(rho, tol: float = CMAX_TOL, max_iter: int = MAX_ITER,
                    check_state: bool = False) -> CmaxCertificate:
    """Feasible primal-dual interior point for the unit-diagonal program.

    The primal variable ``sigma`` of the minimisation is taken diagonal: only
    ``Delta(sigma)`` enters the constraint and ``Tr sigma = Tr Delta(sigma)``.
    ``rho`` may be any PSD matrix (subnormalized inputs are used by smoothing);
    the value is positively homogeneous in ``rho``.
    """
    rho = validate_state(rho, subnormalized=True) if check_state else hermitize(rho)
    d = rho.shape[0]
    lmax = float(np.linalg.eigvalsh(rho)[-1])
    if lmax <= 1e-300:
        return CmaxCertificate(np.zeros(d), np.eye(d, dtype=complex), 0.0, 0.0, 0.0, 0)
    s = strictly_feasible_start(rho)
    X = np.eye(d, dtype=complex)
    eye = np.eye(d)
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        Z = np.diag(s) - rho
        upper = float(s.sum())
        lower = float(np.real(np.trace(rho @ X)))
        gap = float(np.real(np.sum(X * Z.T)))
        history.append((upper, lower))
        _emit("cmax", it, upper, lower, gap, float(np.abs(np.diag(X) - 1).max()), 0.0, gap / d)
        if gap <= tol * (1.0 + abs(upper)) and abs(upper - lower) <= tol * (1.0 + abs(upper)):
            break
        try:
            Lz = np.linalg.cholesky(hermitize(Z))
        except np.linalg.LinAlgError:
            break
        Zi = sla.cho_solve((Lz, True), eye.astype(complex))
        Zi = hermitize(Zi)
        H = np.real(X * Zi.T)
        try:
            hf = sla.cho_factor(H)
        except np.linalg.LinAlgError:
            break
        mu = gap / d

        def step(sigma_mu, corr):
            rhs = sigma_mu * np.real(np.diag(Zi)) - 1.0
            if corr is not None:
                rhs = rhs - np.real(np.diag(corr))
            ds = sla.cho_solve(hf, rhs)
            dX = sigma_mu * Zi - X - (X * ds[None, :]) @ Zi
            if corr is not None:
                dX = dX - corr
            return hermitize(dX), ds

        dX, ds = step(0.0, None)
        ap = min(1.0, _psd_step(X, dX))
        ad = min(1.0, _psd_step(Z, np.diag(ds).astype(complex)))
        mu_aff = float(np.real(np.sum((X + ap * dX) * (Z + ad * np.diag(ds)).T))) / d
        sigma = min(1.0, (max(mu_aff, 0.0) / mu) ** 3) if mu > 0 else 0.0
        corr = (dX * ds[None, :]) @ Zi
        dX, ds = step(sigma * mu, corr)
        gamma = 0.9 + 0.09 * min(ap, ad)
        ap = min(1.0, gamma * _psd_step(X, dX))
        ad = min(1.0, gamma * _psd_step(Z, np.diag(ds).astype(complex)))
        X = hermitize(X + ap * dX)
        s = s + ad * ds
    Z = np.diag(s) - rho
    upper = float(s.sum())
    lower = float(np.real(np.trace(rho @ X)))
    return CmaxCertificate(s, X, upper, lower, upper - lower, it, history)


def _psd_step(X, dX) -> float:
    n = X.shape[0]
    try:
        L = np.linalg.cholesky(hermitize(X))
    except np.linalg.LinAlgError:
        return 0.0
    Li = sla.solve_triangular(L, np.eye(n), lower=True)
    lam = float(np.linalg.eigvalsh(hermitize(Li @ dX @ Li.conj().T))[0])
    return math.inf if lam >= 0 else -1.0 / lam


def cmax_unreduced_problem(rho) -> SdpProblem:
    """Full matrix form ``min Tr sigma : sigma >= 0, Delta(sigma) >= rho``."""
    rho = hermitize(rho)
    d = rho.shape[0]
    return SdpProblem(
        blocks=[Block(d)],
        objective={0: np.eye(d)},
        constraints=[MatrixConstraint({0: lambda X: np.diag(np.diag(X))}, rho, ">=")],
        sense="min",
    )

"""Channels in Kraus and Choi form, free-operation membership tests, and the
optimal-overlap channel built from a unit-diagonal certificate.

Choi convention (input index first)::

    J = sum_ij |i><j| (x) E(|i><j|)

so the ``(i, j)`` block of ``J`` is ``E(|i><j|)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .sdp import CmaxCertificate, solve_cmax_pair

TOL_COMPLETE = 1e-9
TOL_CLASS = 1e-9
CHOI_CONVENTION = "J = sum_ij |i><j| (x) E(|i><j|), input index first"


class ChannelError(la.ValidationError):
    pass


@dataclass(frozen=True)
class KrausChannel:
    kraus: tuple

    def __init__(self, kraus, check: bool = True, tol: float = TOL_COMPLETE):
        ops = tuple(np.asarray(k, dtype=complex) for k in kraus)
        if not ops:
            raise ChannelError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(k.ndim != 2 or k.shape != shape for k in ops):
            raise ChannelError("Kraus operators must be equal-shape matrices")
        object.__setattr__(self, "kraus", ops)
        if check:
            res = completeness_residual(ops)
            if res > tol:
                raise ChannelError(f"Kraus operators are not trace preserving (residual {res:.3e})")

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def __len__(self):
        return len(self.kraus)


@dataclass(frozen=True)
class ChoiMatrix:
    mat: np.ndarray
    dim_in: int
    dim_out: int

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=complex)
        n = self.dim_in * self.dim_out
        if m.shape != (n, n):
            raise ChannelError(f"Choi matrix must be {n}x{n}, got {m.shape}")
        object.__setattr__(self, "mat", la.hermitize(m))

    def check(self, tol: float = 1e-8) -> None:
        """Raise unless the matrix is PSD and trace preserving within ``tol``."""
        if la.min_eig(self.mat) < -tol:
            raise ChannelError("Choi matrix is not positive semidefinite")
        if tp_residual(self) > tol:
            raise ChannelError("Choi matrix is not trace preserving")


@dataclass
class Membership:
    ok: bool
    residual: float

    def __bool__(self):
        return self.ok


@dataclass
class ChannelClassReport:
    is_mio: Membership
    is_io: Membership
    is_sio: Membership
    is_dio: Membership

    def consistent(self) -> bool:
        """Class hierarchy: SIO within IO and DIO, both within MIO."""
        ok = True
        if self.is_sio:
            ok &= bool(self.is_io) and bool(self.is_dio)
        if self.is_io or self.is_dio:
            ok &= bool(self.is_mio)
        return ok


def _ops(ch):
    return ch.kraus if isinstance(ch, KrausChannel) else tuple(np.asarray(k, dtype=complex) for k in ch)


def completeness_residual(kraus) -> float:
    ops = _ops(kraus)
    s = sum(k.conj().T @ k for k in ops)
    return float(np.abs(s - np.eye(s.shape[0])).max())


def apply(ch, rho) -> np.ndarray:
    """``sum_i K_i rho K_i^dag``; accepts a channel, a Kraus list or a :class:`ChoiMatrix`."""
    if isinstance(ch, ChoiMatrix):
        return apply_choi(ch, rho)
    rho = np.asarray(rho, dtype=complex)
    ops = _ops(ch)
    if rho.shape != (ops[0].shape[1],) * 2:
        raise ChannelError(f"input of shape {rho.shape} does not match channel input {ops[0].shape[1]}")
    return sum(k @ rho @ k.conj().T for k in ops)


def adjoint_apply(ch, x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    ops = _ops(ch)
    if x.shape != (ops[0].shape[0],) * 2:
        raise ChannelError(f"input of shape {x.shape} does not match channel output {ops[0].shape[0]}")
    return sum(k.conj().T @ x @ k for k in ops)


def to_choi(ch) -> ChoiMatrix:
    ops = _ops(ch)
    dout, din = ops[0].shape
    # vec of K in input-first ordering: |i>|K e_i>
    J = np.zeros((din * dout, din * dout), dtype=complex)
    for k in ops:
        v = k.T.reshape(-1)
        J += np.outer(v, v.conj())
    return ChoiMatrix(J, din, dout)


def choi_blocks(J: ChoiMatrix) -> np.ndarray:
    """View of ``J`` as ``[i, j] -> E(|i><j|)`` with shape (din, din, dout, dout)."""
    return J.mat.reshape(J.dim_in, J.dim_out, J.dim_in, J.dim_out).transpose(0, 2, 1, 3)


def apply_choi(J: ChoiMatrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return np.einsum("ij,ijab->ab", x, choi_blocks(J))


def tp_residual(J: ChoiMatrix) -> float:
    blocks = choi_blocks(J)
    ptr = np.einsum("ijaa->ij", blocks)
    return float(np.abs(ptr - np.eye(J.dim_in)).max())


def from_choi(J: ChoiMatrix, rank_tol: float = la.RANK_TOL, tol: float = 1e-8) -> KrausChannel:
    J.check(tol)
    w, v = np.linalg.eigh(J.mat)
    top = max(w[-1], 0.0)
    ops = []
    for lam, vec in zip(w, v.T):
        if lam > rank_tol * top:
            ops.append(np.sqrt(lam) * vec.reshape(J.dim_in, J.dim_out).T)
    return KrausChannel(ops, tol=max(tol, TOL_COMPLETE))


def _as_kraus(ch):
    if isinstance(ch, ChoiMatrix):
        return from_choi(ch)
    return ch if isinstance(ch, KrausChannel) else KrausChannel(ch, check=False)


def _unit(d, i, j):
    e = np.zeros((d, d), dtype=complex)
    e[i, j] = 1.0
    return e


def is_mio(ch, tol: float = TOL_CLASS) -> Membership:
    """Every basis state is mapped to a diagonal output."""
    J = ch if isinstance(ch, ChoiMatrix) else to_choi(ch)
    blocks = choi_blocks(J)
    res = max(la.offdiag_l1(blocks[i, i]) for i in range(J.dim_in))
    return Membership(res <= tol, res)


def _column_excess(k, tol):
    """Largest number of above-tol entries in any column, and the mass beyond the largest entry."""
    a = np.abs(k)
    count = int((a > tol).sum(axis=0).max())
    srt = np.sort(a, axis=0)
    excess = float(srt[:-1].sum(axis=0).max()) if a.shape[0] > 1 else 0.0
    return count, excess


def is_io(ch, tol: float = TOL_CLASS) -> Membership:
    """Each Kraus operator has at most one entry above ``tol`` per column."""
    ok, res = True, 0.0
    for k in _ops(_as_kraus(ch)):
        count, excess = _column_excess(k, tol)
        ok &= count <= 1
        res = max(res, excess)
    return Membership(ok, res)


def is_sio(ch, tol: float = TOL_CLASS) -> Membership:
    """At most one above-``tol`` entry per column and per row of every Kraus operator."""
    ok, res = True, 0.0
    for k in _ops(_as_kraus(ch)):
        c1, e1 = _column_excess(k, tol)
        c2, e2 = _column_excess(k.T, tol)
        ok &= c1 <= 1 and c2 <= 1
        res = max(res, e1, e2)
    return Membership(ok, res)


def is_sio_identity(ch, tol: float = TOL_CLASS) -> Membership:
    """SIO test by the defining identity ``Delta(K X K^dag) = K Delta(X) K^dag`` on matrix units."""
    ops = _ops(_as_kraus(ch))
    din = ops[0].shape[1]
    res = 0.0
    for k in ops:
        kd = k.conj().T
        for i in range(din):
            for j in range(din):
                e = _unit(din, i, j)
                lhs = la.dephase(k @ e @ kd)
                rhs = k @ la.dephase(e) @ kd
                res = max(res, float(np.abs(lhs - rhs).max()))
    return Membership(res <= tol, res)


def is_dio(ch, tol: float = TOL_CLASS) -> Membership:
    """``Delta(E(B)) = E(Delta(B))`` for all d^2 matrix units ``B``."""
    J = ch if isinstance(ch, ChoiMatrix) else to_choi(ch)
    din = J.dim_in
    res = 0.0
    for i in range(din):
        for j in range(din):
            e = _unit(din, i, j)
            lhs = la.dephase(apply_choi(J, e))
            rhs = apply_choi(J, la.dephase(e))
            res = max(res, float(np.abs(lhs - rhs).max()))
    return Membership(res <= tol, res)


def classify(ch, tol: float = TOL_CLASS) -> ChannelClassReport:
    return ChannelClassReport(is_mio(ch, tol), is_io(ch, tol), is_sio(ch, tol), is_dio(ch, tol))


# -- maximally coherent states ------------------------------------------------

def maximally_coherent(d: int, phases=None) -> np.ndarray:
    if phases is None:
        phases = np.zeros(d)
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (d,):
        raise la.ValidationError(f"need {d} phases, got {phases.shape}")
    return np.exp(1j * phases) / np.sqrt(d)


def diagonal_unitary(phases) -> np.ndarray:
    return np.diag(np.exp(1j * np.asarray(phases, dtype=float)))


def overlap_with_plus(ch, rho) -> float:
    """``d F(E(rho), Psi_+)^2 = d <Psi_+| E(rho) |Psi_+>``."""
    out = apply(ch, rho)
    d = out.shape[0]
    plus = maximally_coherent(d)
    return float(d * np.real(plus.conj() @ out @ plus))


def _check_unit_diag(tau, tol):
    tau = la.hermitize(tau)
    if la.min_eig(tau) < -tol or np.abs(np.diag(tau) - 1).max() > tol:
        raise ChannelError("certificate tau is not a unit-diagonal PSD matrix")
    return tau


def optimal_overlap_channel(rho, cert: CmaxCertificate | None = None, tol: float = 1e-7) -> KrausChannel:
    """Diagonal-Kraus channel whose adjoint maps ``|Psi_+><Psi_+|`` to ``tau / d``.

    With ``tau / d = sum_i lam_i |psi_i><psi_i|`` the Kraus operators are
    ``sqrt(d lam_i) diag(conj(psi_i))``; completeness follows from
    ``diag(tau) = 1``.  Any residual completeness error from the numerical
    certificate is removed by a diagonal rescaling.
    """
    if cert is None:
        cert = solve_cmax_pair(rho)
    tau = _check_unit_diag(cert.tau, tol)
    d = tau.shape[0]
    lam, vecs = np.linalg.eigh(tau / d)
    ops = []
    for li, v in zip(lam, vecs.T):
        if li > 0:
            ops.append(np.sqrt(d * li) * np.diag(v.conj()))
    s = np.real(np.diag(sum(k.conj().T @ k for k in ops)))
    fix = np.diag(1.0 / np.sqrt(s))
    return KrausChannel([k @ fix for k in ops])


def overlap_channel_full(tau) -> KrausChannel:
    """The same construction with the d-fold repeated operators ``sqrt(lam_i) diag(conj(psi_i))``."""
    tau = _check_unit_diag(tau, 1e-7)
    d = tau.shape[0]
    lam, vecs = np.linalg.eigh(tau / d)
    ops = [np.sqrt(max(li, 0.0)) * np.diag(v.conj()) for li, v in zip(lam, vecs.T) for _ in range(d)]
    return KrausChannel(ops, tol=1e-7)


# -- random channels ----------------------------------------------------------

CLASSES = ("ANY", "MIO", "IO", "SIO", "DIO")


def _complex_normal(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def _depolarizing_mix(J: np.ndarray, din: int, dout: int) -> np.ndarray:
    """Mix toward the completely depolarizing Choi until J is positive definite."""
    dep = np.eye(din * dout) / dout
    lmin = la.min_eig(J)
    if lmin >= 1e-6 / dout:
        return J
    t = (1e-6 / dout - lmin) / (1.0 / dout - lmin)
    t = min(1.0, t * 1.05)
    return (1 - t) * J + t * dep


def random_channel(dim: int, kraus_count: int = 2, cls: str = "ANY", seed=None) -> KrausChannel:
    """Random channel of a given free-operation class, deterministic per seed.

    ``kraus_count`` fixes the number of random operators for ``ANY``, ``IO``
    and ``SIO``; completion operators may be appended for ``IO``.  ``MIO`` and
    ``DIO`` are projected Choi matrices, so their Kraus count is the Choi rank.
    """
    cls = cls.upper()
    if cls not in CLASSES:
        raise ValueError(f"unknown channel class {cls!r}")
    if kraus_count < 1:
        raise ValueError("kraus_count must be positive")
    rng = np.random.default_rng(seed)
    d = dim
    if cls == "ANY":
        q, _ = np.linalg.qr(_complex_normal(rng, (kraus_count * d, d)))
        return KrausChannel([q[i * d:(i + 1) * d] for i in range(kraus_count)])
    if cls == "SIO":
        ops = []
        for _ in range(max(kraus_count - 1, 1)):
            perm = rng.permutation(d)
            ops.append(np.eye(d)[perm] @ np.diag(_complex_normal(rng, d)))
        if kraus_count == 1:
            k = ops[0]
            return KrausChannel([k @ np.diag(1.0 / np.abs(np.diag(k.conj().T @ k)) ** 0.5)])
        return KrausChannel(_complete_diagonal(ops, rng))
    if cls == "IO":
        ops = []
        for _ in range(kraus_count):
            k = np.zeros((d, d), dtype=complex)
            rows = rng.integers(0, d, size=d)
            k[rows, np.arange(d)] = _complex_normal(rng, d)
            ops.append(k)
        s = sum(k.conj().T @ k for k in ops)
        scale = np.sqrt(np.linalg.eigvalsh(s)[-1] * (1.0 + rng.uniform(0.05, 1.0)))
        ops = [k / scale for k in ops]
        rem = la.hermitize(np.eye(d) - sum(k.conj().T @ k for k in ops))
        w, v = np.linalg.eigh(rem)
        for lam, vec in zip(w, v.T):
            if lam > 1e-14:
                row = np.zeros((d, 1))
                row[rng.integers(0, d)] = 1.0
                ops.append(np.sqrt(lam) * row @ vec.conj()[None, :])
        return KrausChannel(ops)
    base = random_channel(d, max(kraus_count, 2), "ANY", rng)
    blocks = choi_blocks(to_choi(base)).copy()
    for i in range(d):
        for j in range(d):
            if i == j:
                blocks[i, j] = la.dephase(blocks[i, j])
            elif cls == "DIO":
                blocks[i, j] = blocks[i, j] - la.dephase(blocks[i, j])
    J = blocks.transpose(0, 2, 1, 3).reshape(d * d, d * d)
    J = _depolarizing_mix(la.hermitize(J), d, d)
    return from_choi(ChoiMatrix(J, d, d))


def _complete_diagonal(ops, rng):
    d = ops[0].shape[1]
    s = np.real(np.diag(sum(k.conj().T @ k for k in ops)))
    scale = np.sqrt(s.max() * (1.0 + rng.uniform(0.05, 1.0)))
    ops = [k / scale for k in ops]
    rest = 1.0 - s / scale ** 2
    return ops + [np.diag(np.sqrt(np.clip(rest, 0.0, None))).astype(complex)]


# -- JSON -----------------------------------------------------------------------

def channel_to_json(ch, include_class: bool = False) -> dict:
    if isinstance(ch, ChoiMatrix):
        out = {"dim_in": ch.dim_in, "dim_out": ch.dim_out, "choi": la.matrix_to_json(ch.mat),
               "choi_convention": CHOI_CONVENTION}
    else:
        ch = _as_kraus(ch)
        out = {"dim_in": ch.dim_in, "dim_out": ch.dim_out,
               "kraus": [la.matrix_to_json(k) for k in ch.kraus]}
    if include_class:
        rep = classify(ch)
        out["class"] = {name: {"ok": m.ok, "residual": m.residual}
                        for name, m in vars(rep).items()}
    return out


def channel_from_json(obj):
    try:
        if "kraus" in obj:
            ch = KrausChannel([la.matrix_from_json(k) for k in obj["kraus"]])
            if "dim_in" in obj and (ch.dim_in, ch.dim_out) != (obj["dim_in"], obj["dim_out"]):
                raise ChannelError("declared dimensions do not match Kraus shapes")
            return ch
        J = ChoiMatrix(la.matrix_from_json(obj["choi"]), int(obj["dim_in"]), int(obj["dim_out"]))
    except (KeyError, TypeError) as exc:
        raise ChannelError(f"malformed channel object: {exc}") from exc
    J.check()
    return J

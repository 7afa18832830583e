"""Subchannel discrimination: instruments, POVMs, optimal and incoherent success
probabilities, the coherence advantage ratio, and Monte Carlo play."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channels as ch
from . import linalg as la
from .measures import cmax_certificate
from .sdp import Block, MatrixConstraint, SdpProblem, require_optimal, solve_sdp

TOL_POVM = 1e-8


class CertificationFailure(AssertionError):
    """A numerically evaluated identity or inequality missed its tolerance."""


@dataclass(frozen=True)
class Povm:
    effects: tuple

    def __init__(self, effects, tol: float = TOL_POVM):
        mats = tuple(la.hermitize(np.asarray(m, dtype=complex)) for m in effects)
        if not mats:
            raise la.ValidationError("a POVM needs at least one effect")
        d = mats[0].shape[0]
        if any(m.shape != (d, d) for m in mats):
            raise la.ValidationError("POVM effects must share one square shape")
        if min(la.min_eig(m) for m in mats) < -tol:
            raise la.ValidationError("POVM effect is not PSD")
        if np.abs(sum(mats) - np.eye(d)).max() > tol:
            raise la.ValidationError("POVM effects do not sum to the identity")
        object.__setattr__(self, "effects", mats)

    def __len__(self):
        return len(self.effects)


@dataclass(frozen=True)
class Instrument:
    """Branches given as Kraus sets whose completeness operators sum to the identity."""

    subchannels: tuple

    def __init__(self, subchannels, tol: float = ch.TOL_COMPLETE):
        subs = tuple(tuple(np.asarray(k, dtype=complex) for k in sub) for sub in subchannels)
        if not subs or any(not s for s in subs):
            raise la.ValidationError("an instrument needs nonempty branches")
        object.__setattr__(self, "subchannels", subs)
        res = ch.completeness_residual([k for sub in subs for k in sub])
        if res > tol:
            raise la.ValidationError(f"branches do not sum to a channel (residual {res:.3e})")

    @property
    def total(self) -> ch.KrausChannel:
        return ch.KrausChannel([k for sub in self.subchannels for k in sub])

    @property
    def dim_in(self) -> int:
        return self.subchannels[0][0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.subchannels[0][0].shape[0]

    def __len__(self):
        return len(self.subchannels)

    def outputs(self, rho) -> list:
        return [ch.apply(sub, rho) for sub in self.subchannels]

    def class_report(self) -> ch.ChannelClassReport:
        return ch.classify(self.total)


def fourier_unitary(d: int, k: int) -> np.ndarray:
    """``U_k = sum_j exp(2 pi i j k / d) |j><j|``."""
    return np.diag(np.exp(2j * np.pi * np.arange(d) * k / d))


def build_cmax_instrument(rho, cert=None) -> Instrument:
    """``d`` branches ``E_k = U_k E(.) U_k^dag / d`` from the optimal-overlap channel ``E`` of ``rho``."""
    rho = la.validate_state(rho)
    if cert is None:
        cert = cmax_certificate(rho)
    E = ch.optimal_overlap_channel(rho, cert)
    d = rho.shape[0]
    subs = []
    for k in range(d):
        u = fourier_unitary(d, k)
        subs.append([u @ m / math.sqrt(d) for m in E.kraus])
    return Instrument(subs)


def canonical_povm(d: int) -> Povm:
    if d < 2:
        raise la.ValidationError("need d >= 2")
    plus = ch.maximally_coherent(d)
    return Povm([la.proj(fourier_unitary(d, k) @ plus) for k in range(d)])


def _check_pair(inst: Instrument, povm: Povm):
    if len(inst) != len(povm):
        raise la.ValidationError(f"{len(inst)} branches but {len(povm)} effects")
    if povm.effects[0].shape[0] != inst.dim_out:
        raise la.ValidationError("POVM dimension does not match instrument output")


def branch_success(inst: Instrument, povm: Povm, rho) -> np.ndarray:
    """``Tr(E_a(rho) M_a)`` per branch."""
    _check_pair(inst, povm)
    return np.array([float(np.real(np.trace(out @ m)))
                     for out, m in zip(inst.outputs(rho), povm.effects)])


def p_succ_fixed(inst: Instrument, povm: Povm, rho) -> float:
    return float(branch_success(inst, povm, rho).sum())


def p_succ_opt(inst: Instrument, rho, tol: float = 1e-9):
    """Optimal discrimination probability and an optimal POVM, by SDP over the effects."""
    outs = inst.outputs(np.asarray(rho, dtype=complex))
    n = inst.dim_out
    if len(outs) == 1:
        return float(np.trace(outs[0]).real), Povm([np.eye(n)])
    prob = SdpProblem(
        blocks=[Block(n) for _ in outs],
        objective={a: la.hermitize(o) for a, o in enumerate(outs)},
        constraints=[MatrixConstraint({a: (lambda m: m) for a in range(len(outs))}, np.eye(n), "==", "povm")],
        sense="max",
    )
    sol = require_optimal(solve_sdp(prob, tol, tol), "POVM optimisation")
    effects = [la.hermitize(b) for b in sol.blocks]
    # restore exact completeness before wrapping; the solver residual is below tol
    effects[-1] = effects[-1] + (np.eye(n) - sum(effects))
    return float(sol.primal_value), Povm(effects, tol=max(TOL_POVM, 10 * tol))


def p_succ_ico(inst: Instrument, tol: float = 1e-9) -> float:
    """Best incoherent-input success probability.

    The optimum is convex in the input state, so over the diagonal states it
    is attained at a basis state.
    """
    d = inst.dim_in
    best = 0.0
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        best = max(best, p_succ_opt(inst, e, tol)[0])
    return best


def build_phase_instrument(phases, priors, dim: int | None = None) -> Instrument:
    """Branches ``p_k U_k (.) U_k^dag`` with diagonal phase unitaries.

    Each entry of ``phases`` is either a length-``d`` phase vector or a scalar
    ``phi`` giving ``diag(exp(i j phi))``; scalars require ``dim``.
    """
    priors = np.asarray(priors, dtype=float)
    if len(phases) != len(priors) or len(priors) == 0:
        raise la.ValidationError("need one prior per phase")
    if np.any(priors < 0) or abs(priors.sum() - 1.0) > 1e-12:
        raise la.ValidationError("priors must be a probability vector")
    subs = []
    for ph, p in zip(phases, priors):
        ph = np.asarray(ph, dtype=float)
        if ph.ndim == 0:
            if dim is None:
                raise la.ValidationError("scalar phases need dim")
            ph = ph * np.arange(dim)
        elif dim is not None and ph.shape != (dim,):
            raise la.ValidationError("phase vector length does not match dim")
        subs.append([math.sqrt(p) * ch.diagonal_unitary(ph)])
    return Instrument(subs)


def random_instrument(dim: int, branches: int = 2, cls: str = "DIO", seed=None) -> Instrument:
    """Split the Kraus operators of a random channel of class ``cls`` into ``branches`` groups."""
    rng = np.random.default_rng(seed)
    base = ch.random_channel(dim, max(branches, 2), cls, rng)
    ops = list(base.kraus)
    while len(ops) < branches:
        # split an operator into two weighted copies to create more branches
        k = ops.pop(0)
        w = rng.uniform(0.2, 0.8)
        ops += [math.sqrt(w) * k, math.sqrt(1 - w) * k]
    order = rng.permutation(len(ops))
    cuts = np.sort(rng.choice(np.arange(1, len(ops)), size=branches - 1, replace=False))
    groups = np.split(order, cuts)
    return Instrument([[ops[i] for i in g] for g in groups])


@dataclass
class GameResult:
    p_succ: float
    povm_witness: Povm
    p_ico: float
    ratio: float
    branch_probabilities: np.ndarray
    p_succ_fixed: float
    target: float
    sampled_ratios: list = field(default_factory=list)

    def to_json(self, witness: bool = False) -> dict:
        out = {
            "p_succ": self.p_succ,
            "p_succ_fixed": self.p_succ_fixed,
            "p_ico": self.p_ico,
            "ratio": self.ratio,
            "target_2_pow_cmax": self.target,
            "branch_probabilities": [float(x) for x in self.branch_probabilities],
            "max_sampled_ratio": max(self.sampled_ratios) if self.sampled_ratios else None,
        }
        if witness:
            out["povm"] = [la.matrix_to_json(m) for m in self.povm_witness.effects]
        return out


def advantage_ratio(rho, tol: float = 1e-5, samples: int = 0, seed=0,
                    bound_tol: float = 1e-6) -> GameResult:
    """Play the constructed instrument and compare ``p_succ / p_ico`` with ``2^C_max``.

    ``samples`` random DIO instruments are also checked against the upper
    bound ``p_succ / p_ico <= 2^C_max``.  Any miss raises
    :class:`CertificationFailure`.
    """
    rho = la.validate_state(rho)
    d = rho.shape[0]
    cert = cmax_certificate(rho)
    target = cert.value
    inst = build_cmax_instrument(rho, cert)
    fixed = p_succ_fixed(inst, canonical_povm(d), rho)
    p_opt, povm = p_succ_opt(inst, rho)
    p_ico = p_succ_ico(inst)
    ratio = p_opt / p_ico
    if abs(ratio - target) > tol:
        raise CertificationFailure(f"advantage ratio {ratio!r} differs from 2^C_max {target!r}")
    rng = np.random.default_rng(seed)
    sampled = []
    for _ in range(samples):
        r_inst = random_instrument(d, int(rng.integers(2, d + 2)), "DIO", rng)
        r = p_succ_opt(r_inst, rho)[0] / p_succ_ico(r_inst)
        sampled.append(r)
        if r > target + bound_tol:
            raise CertificationFailure(f"sampled instrument ratio {r!r} exceeds 2^C_max {target!r}")
    probs = np.array([float(np.trace(o).real) for o in inst.outputs(rho)])
    return GameResult(p_opt, povm, p_ico, ratio, probs, fixed, target, sampled)


@dataclass
class SimulationResult:
    frequency: float
    successes: int
    trials: int
    p_exact: float
    stderr: float
    branches: np.ndarray = field(repr=False)
    outcomes: np.ndarray = field(repr=False)

    @property
    def z_score(self) -> float:
        if self.stderr == 0:
            return 0.0 if self.frequency == self.p_exact else math.inf
        return abs(self.frequency - self.p_exact) / self.stderr

    def within(self, sigmas: float = 5.0) -> bool:
        return self.z_score <= sigmas


def simulate_game(inst: Instrument, povm: Povm, rho, trials: int, seed=None) -> SimulationResult:
    """Sample a branch, then a measurement outcome, by inverse CDF from one seeded generator."""
    if trials < 1:
        raise la.ValidationError("trials must be positive")
    _check_pair(inst, povm)
    outs = inst.outputs(np.asarray(rho, dtype=complex))
    joint = np.array([[max(float(np.real(np.trace(o @ m))), 0.0) for m in povm.effects] for o in outs])
    p_branch = joint.sum(axis=1)
    cond = np.divide(joint, p_branch[:, None], out=np.full_like(joint, 1.0 / joint.shape[1]),
                     where=p_branch[:, None] > 0)
    rng = np.random.default_rng(seed)
    u = rng.random((2, trials))
    cdf_a = np.cumsum(p_branch / p_branch.sum())
    a = np.minimum(np.searchsorted(cdf_a, u[0], side="right"), len(cdf_a) - 1)
    cdf_b = np.cumsum(cond, axis=1)
    cdf_b /= cdf_b[:, -1:]
    b = np.minimum((u[1][:, None] >= cdf_b[a]).sum(axis=1), joint.shape[1] - 1)
    wins = int(np.count_nonzero(a == b))
    p = float(np.trace(joint).real) / p_branch.sum()
    return SimulationResult(wins / trials, wins, trials, p, math.sqrt(max(p * (1 - p), 0.0) / trials), a, b)

"""Seeded certification suite: every identity and inequality the package
implements, evaluated on random states and collected into one report."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channels as ch
from . import games as gm
from . import linalg as la
from . import measures as ms
from . import oneshot as osh
from .sdp import SolverError

PASS, FAIL, ERROR = "pass", "fail", "solver_error"

DEFAULT_TOLERANCES = {
    "chain": 3e-7,
    "certificate": 1e-8,
    "overlap": 1e-6,
    "adjoint": 1e-8,
    "membership": 1e-9,
    "ratio": 1e-5,
    "baseline": 1e-7,
    "smooth_zero": 1e-7,
    "smooth": 1e-6,
    "oneshot": 1e-6,
    "choi": 1e-8,
    "violation": 1e-3,
}

SMOOTH_EPS = (0.01, 0.05, 0.1)
ONESHOT_EPS = (0.01, 0.05)

# what each check asserts, carried in every record
ANCHORS = {
    "chain_min_r": "C_min(rho) <= C_r(rho)",
    "chain_r_max": "C_r(rho) <= C_max(rho)",
    "chain_max_l1": "C_max(rho) <= log(1 + C_l1(rho))",
    "cmax_certificate": "C_max as min over incoherent sigma of D_max, certified by a unit-diagonal dual",
    "robustness": "2^C_max(rho) = 1 + RoC(rho)",
    "overlap_theorem": "2^C_max(rho) = d max over DIO/IO/SIO of F(E(rho), Psi_+)^2",
    "adjoint_image": "tau = d E^dag(|Psi_+><Psi_+|) for the constructed channel",
    "overlap_channel_sio": "constructed channel is strictly incoherent",
    "baseline_ico": "best incoherent success probability of the constructed instrument is 1/d",
    "advantage_ratio": "2^C_max(rho) = max over instruments of p_succ / p_succ_ICO",
    "smooth_max_zero": "C^0_max = C_max",
    "smooth_min_zero": "C^0_min = C_min",
    "smooth_order": "C^eps_min(rho) <= C^eps_max(rho) - log(1 - 2 eps)",
    "cost_bound": "C^{2 sqrt(eps)}_max(rho) <= one-shot MIO coherence cost",
    "distill_bound": "one-shot MIO distillable coherence <= C^eps_min(rho)",
    "choi_certificate": "one-shot certificates are MIO and trace preserving",
    "io_violation": "C_min may increase on average under IO",
}


@dataclass
class CheckRecord:
    name: str
    anchor: str
    status: str
    lhs: float
    rhs: float
    tolerance: float
    runtime: float = 0.0
    state: int | None = None
    message: str = ""

    def body(self) -> dict:
        out = {"name": self.name, "anchor": self.anchor, "status": self.status,
               "lhs": self.lhs, "rhs": self.rhs, "tolerance": self.tolerance}
        if self.state is not None:
            out["state"] = self.state
        if self.message:
            out["message"] = self.message
        return out


@dataclass
class CertificationReport:
    dim: int
    count: int
    seed: int
    tolerances: dict
    records: list = field(default_factory=list)
    seed_manifest: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.status == PASS for r in self.records)

    @property
    def solver_failed(self) -> bool:
        return any(r.status == ERROR for r in self.records)

    def summary(self) -> dict:
        out = {PASS: 0, FAIL: 0, ERROR: 0}
        for r in self.records:
            out[r.status] += 1
        return out

    def body(self) -> dict:
        return {"dim": self.dim, "count": self.count, "seed": self.seed,
                "tolerances": dict(self.tolerances), "seed_manifest": list(self.seed_manifest),
                "aggregate_pass": self.passed, "summary": self.summary(),
                "records": [r.body() for r in self.records]}

    def runtimes(self) -> dict:
        return {f"{i:04d}:{r.name}": r.runtime for i, r in enumerate(self.records)}


class _Recorder:
    def __init__(self, tolerances, state=None):
        self.tol = tolerances
        self.state = state
        self.records = []

    def leq(self, name, lhs, rhs, tol_key):
        """Record ``lhs <= rhs + tol``."""
        tol = self.tol[tol_key]
        ok = bool(lhs <= rhs + tol)
        self._add(name, ok, lhs, rhs, tol)

    def close(self, name, lhs, rhs, tol_key):
        tol = self.tol[tol_key]
        ok = bool(abs(lhs - rhs) <= tol)
        self._add(name, ok, lhs, rhs, tol)

    def _add(self, name, ok, lhs, rhs, tol, message=""):
        base = name.split("@")[0].split(":")[0]
        self.records.append(CheckRecord(name, ANCHORS[base], PASS if ok else FAIL, float(lhs), float(rhs),
                                        float(tol), 0.0, self.state, message))

    def error(self, name, exc):
        base = name.split("@")[0].split(":")[0]
        self.records.append(CheckRecord(name, ANCHORS[base], ERROR, math.nan, math.nan, math.nan, 0.0,
                                        self.state, f"{type(exc).__name__}: {exc}"))

    def timed(self, name, fn):
        start = len(self.records)
        t0 = time.perf_counter()
        try:
            fn()
        except SolverError as exc:
            self.error(name, exc)
        dt = time.perf_counter() - t0
        new = self.records[start:]
        for r in new:
            r.runtime = dt / max(len(new), 1)


def _state_checks(rho, idx, tol, oneshot: bool, m_max: int):
    rec = _Recorder(tol, idx)
    d = rho.shape[0]
    box = {}

    def measures():
        cmax, cert = ms.c_max(rho, return_certificate=True)
        box["cmax"], box["cert"] = cmax, cert
        cmin, cr, cl1 = ms.c_min(rho), ms.c_r(rho), ms.c_l1(rho)
        rec.leq("chain_min_r", cmin, cr, "chain")
        rec.leq("chain_r_max", cr, cmax, "chain")
        rec.leq("chain_max_l1", cmax, math.log2(1.0 + cl1), "chain")
        res = cert.residuals(rho)
        viol = max(-res["primal_psd"], -res["tau_psd"], res["tau_diag"], 0.0)
        rec.leq("cmax_certificate:feasibility", viol, 0.0, "certificate")
        rec.leq("cmax_certificate:gap", abs(res["gap"]) / (1.0 + cert.value), 0.0, "certificate")
        rec.close("robustness", 2.0 ** cmax, 1.0 + ms.roc(rho), "certificate")

    def overlap():
        cert = box["cert"]
        E = ch.optimal_overlap_channel(rho, cert)
        rec.close("overlap_theorem", ch.overlap_with_plus(E, rho), cert.value, "overlap")
        tau = d * ch.adjoint_apply(E, la.proj(ch.maximally_coherent(d)))
        rec.leq("adjoint_image", float(np.abs(tau - cert.tau).max()), 0.0, "adjoint")
        cls = ch.classify(E)
        worst = max(cls.is_sio.residual, cls.is_io.residual, cls.is_dio.residual)
        rec.leq("overlap_channel_sio", worst, 0.0, "membership")

    def game():
        cert = box["cert"]
        inst = gm.build_cmax_instrument(rho, cert)
        p_ico = gm.p_succ_ico(inst)
        rec.close("baseline_ico", p_ico, 1.0 / d, "baseline")
        p_opt, _ = gm.p_succ_opt(inst, rho)
        rec.close("advantage_ratio", p_opt / p_ico, cert.value, "ratio")

    def smooth():
        rec.close("smooth_max_zero", ms.smooth_c_max(rho, 0.0).value, box["cmax"], "smooth_zero")
        rec.close("smooth_min_zero", ms.smooth_c_min(rho, 0.0).value, ms.c_min(rho), "smooth_zero")
        for eps in SMOOTH_EPS:
            lhs, rhs, _ = ms.smoothing_order_check(rho, eps)
            rec.leq(f"smooth_order@{eps:g}", lhs, rhs, "smooth")

    def one_shot():
        for eps in ONESHOT_EPS:
            cost = osh.one_shot_cost_mio(rho, eps, m_max)
            dist = osh.one_shot_distill_mio(rho, eps, m_max)
            b = osh.check_cost_bound(rho, eps, m_max, cost=cost)
            rec.leq(f"cost_bound@{eps:g}", b.lhs, b.rhs, "oneshot")
            b = osh.check_distill_bound(rho, eps, m_max, dist=dist)
            rec.leq(f"distill_bound@{eps:g}", b.lhs, b.rhs, "oneshot")
            for res in (cost, dist):
                r = osh.certificate_residuals(res)
                rec.leq(f"choi_certificate@{res.kind}:{eps:g}", max(r["mio"], r["tp"], -r["psd"]), 0.0, "choi")

    rec.timed("cmax_certificate", measures)
    if "cert" in box:
        rec.timed("overlap_theorem", overlap)
        rec.timed("advantage_ratio", game)
        rec.timed("smooth_order", smooth)
        if oneshot:
            rec.timed("cost_bound", one_shot)
    return rec.records


def _suite_states(dim, count, seed):
    """Seeded random states cycling through ranks 1..dim."""
    children = np.random.SeedSequence(seed).spawn(count)
    states, manifest = [], []
    for i, child in enumerate(children):
        rank = 1 + i % dim
        s = int(child.generate_state(1)[0])
        states.append(la.random_density_matrix(dim, rank, s))
        manifest.append({"index": i, "rank": rank, "seed": s})
    return states, manifest


def certify_suite(dim: int, count: int = 5, seed: int = 0, tolerances: dict | None = None,
                  oneshot: bool | None = None, m_max: int | None = None,
                  threads: int | None = None) -> CertificationReport:
    """Run every check on ``count`` seeded random states of dimension ``dim``.

    One-shot scans run by default only for ``dim <= 3`` and over target
    dimensions ``M <= 2 dim``; their cost grows with the Choi dimension
    ``dim * M``.
    """
    if not 2 <= dim <= la.DIM_CAP:
        raise la.ValidationError(f"dim must lie in [2, {la.DIM_CAP}]")
    if count < 1:
        raise la.ValidationError("count must be positive")
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    if any(v < 0 for v in tol.values()):
        raise la.ValidationError("tolerances must be nonnegative")
    oneshot = dim <= 3 if oneshot is None else oneshot
    m_max = min(2 * dim, la.DIM_CAP // dim) if m_max is None else m_max
    states, manifest = _suite_states(dim, count, seed)
    if threads is None:
        threads = int(os.environ.get("COHCERT_THREADS", "1") or 1)

    def run(args):
        i, rho = args
        return _state_checks(rho, i, tol, oneshot, m_max)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_state = list(pool.map(run, enumerate(states)))
    else:
        per_state = [run(a) for a in enumerate(states)]
    report = CertificationReport(dim, count, seed, tol, [r for rs in per_state for r in rs], manifest)

    rec = _Recorder(tol)

    def violation():
        try:
            v = ms.cmin_io_violation_demo(seed)
        except ms.NotFound as exc:
            rec._add("io_violation", False, math.nan, math.nan, tol["violation"], str(exc))
            return
        _, after = ms.average_c_min(v.psi, v.kraus)
        before = ms.pure_closed_forms(v.psi)[1]
        ok = after > before + tol["violation"] and bool(ch.is_io(v.kraus))
        rec._add("io_violation", ok, after, before, tol["violation"])

    rec.timed("io_violation", violation)
    report.records.extend(rec.records)
    return report

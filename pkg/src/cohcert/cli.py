"""``cohcert`` command line.

Exit codes: 0 success, 1 certification failure, 2 input error, 3 solver failure.
Reports are JSON objects ``{"header": ..., "body": ...}``; the header holds
the timestamp and runtimes, the body is deterministic for a fixed config.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import datetime as _dt
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import certify as cert_mod
from . import channels as ch
from . import games as gm
from . import jsonio
from . import linalg as la
from . import measures as ms
from . import oneshot as osh
from .sdp import SolverError, trace_to

EXIT_OK, EXIT_CERT, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3
COMMANDS = ("measure", "channel", "game", "oneshot", "sweep", "certify", "demo")


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    state_source: dict | None = None
    eps: list = field(default_factory=list)
    tol: float | None = None
    trials: int = 100000
    out: str | None = None
    witness: bool = False
    seed: int = 0
    dim: int | None = None
    count: int = 5
    instrument: str = "cmax"
    m_max: int | None = None
    n_max: int = 3
    channel_class: str = "DIO"
    kraus: int = 2
    csv: str | None = None
    trace_csv: str | None = None

    def body(self) -> dict:
        """The parts of the configuration that determine the report body."""
        out = {"command": self.command, "state_source": self.state_source, "eps": list(self.eps),
               "tol": self.tol, "seed": self.seed, "witness": self.witness}
        extra = {
            "game": {"trials": self.trials, "instrument": self.instrument},
            "oneshot": {"m_max": self.m_max},
            "sweep": {"n_max": self.n_max},
            "certify": {"dim": self.dim, "count": self.count, "m_max": self.m_max},
            "channel": {"dim": self.dim, "class": self.channel_class, "kraus": self.kraus},
        }.get(self.command, {})
        out.update(extra)
        return out


# -- state ingestion ----------------------------------------------------------

def _parse_complex(tok: str) -> complex:
    try:
        return complex(tok.strip().replace(" ", ""))
    except ValueError as exc:
        raise InputError(f"cannot parse amplitude {tok!r}") from exc


def _ints(text, n, flag):
    try:
        vals = [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise InputError(f"{flag} expects {n} comma-separated integers") from exc
    if len(vals) != n:
        raise InputError(f"{flag} expects {n} comma-separated integers")
    return vals


def load_state_file(path: str) -> np.ndarray:
    """Density matrix from JSON: a matrix object, ``{"state": matrix}`` or ``{"pure": {"re", "im"}}``."""
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read state file {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise InputError("state file must hold a JSON object")
    if "pure" in obj:
        p = obj["pure"]
        try:
            vec = np.asarray(p["re"], dtype=float) + 1j * np.asarray(p.get("im", np.zeros(len(p["re"]))), dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed pure state: {exc}") from exc
        return la.proj(la.validate_pure(vec))
    return la.state_from_json(obj.get("state", obj))


def resolve_state(src: dict) -> np.ndarray:
    kind = src["kind"]
    if kind == "file":
        return load_state_file(src["path"])
    if kind == "pure":
        vec = np.array([_parse_complex(t) for t in src["amplitudes"].split(",")])
        nrm = np.linalg.norm(vec)
        if vec.size < 2 or not np.isfinite(nrm) or nrm == 0:
            raise InputError("--pure needs at least two amplitudes, not all zero")
        return la.proj(vec / nrm)
    if kind == "random":
        dim, rank, seed = src["dim"], src["rank"], src["seed"]
        if not 1 <= dim <= la.DIM_CAP:
            raise InputError(f"dimension must lie in [1, {la.DIM_CAP}]")
        return la.random_density_matrix(dim, rank, seed)
    if kind == "maxcoh":
        d = src["dim"]
        if not 2 <= d <= la.DIM_CAP:
            raise InputError(f"dimension must lie in [2, {la.DIM_CAP}]")
        return la.proj(ch.maximally_coherent(d))
    raise InputError(f"unknown state source {kind!r}")


def _state_source(args) -> dict | None:
    given = [(k, v) for k, v in (("file", args.state), ("pure", args.pure),
                                 ("random", args.random), ("maxcoh", args.maxcoh)) if v is not None]
    if len(given) > 1:
        raise InputError("give exactly one state source")
    if not given:
        return None
    kind, val = given[0]
    if kind == "file":
        return {"kind": "file", "path": val}
    if kind == "pure":
        return {"kind": "pure", "amplitudes": val}
    if kind == "random":
        dim, rank, seed = _ints(val, 3, "--random")
        return {"kind": "random", "dim": dim, "rank": rank, "seed": seed}
    return {"kind": "maxcoh", "dim": int(val)}


def _eps_list(text):
    if text is None:
        return []
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"--eps expects comma-separated numbers, got {text!r}") from exc
    if any(not math.isfinite(v) or v < 0 for v in vals):
        raise InputError("epsilons must be finite and nonnegative")
    return vals


# -- subcommands ----------------------------------------------------------------

def _need_state(cfg):
    if cfg.state_source is None:
        raise InputError(f"{cfg.command} needs a state (--state, --pure, --random or --maxcoh)")
    return resolve_state(cfg.state_source)


def cmd_measure(cfg):
    """C_max, C_min, C_r, C_l1 and RoC of a state, plus smoothed values for each --eps."""
    rho = _need_state(cfg)
    rep = ms.coherence_report(rho)
    body = {"report": rep.to_json(cfg.witness), "chain_holds": rep.chain_holds()}
    bound, cg = ms.c_min_overlap_bound(rho)
    body["overlap_bound"] = {"max_incoherent_fidelity_sq_upper": bound, "geometric_coherence_lower": cg}
    smooth = []
    for eps in cfg.eps:
        item = {"epsilon": eps, "smooth_c_max": ms.smooth_c_max(rho, eps).value}
        item["smooth_c_min"] = ms.smooth_c_min(rho, eps).value if eps < 1 else None
        smooth.append(item)
    body["smooth"] = smooth
    return EXIT_OK, body


def cmd_channel(cfg):
    """Overlap-optimal channel for a state, or class membership of a given or random channel."""
    if cfg.state_source is None:
        if cfg.dim is None:
            raise InputError("channel needs a state or --dim for a random channel")
        E = ch.random_channel(cfg.dim, cfg.kraus, cfg.channel_class, cfg.seed)
        rep = ch.classify(E)
        body = {"channel": ch.channel_to_json(E, include_class=True) if cfg.witness else None,
                "class": {k: {"ok": m.ok, "residual": m.residual} for k, m in vars(rep).items()},
                "hierarchy_consistent": rep.consistent(), "kraus_count": len(E)}
        return (EXIT_OK if rep.consistent() else EXIT_CERT), body
    rho = _need_state(cfg)
    d = rho.shape[0]
    cmax, cert = ms.c_max(rho, return_certificate=True)
    E = ch.optimal_overlap_channel(rho, cert)
    overlap = ch.overlap_with_plus(E, rho)
    tol = cfg.tol if cfg.tol is not None else 1e-6
    rep = ch.classify(E)
    ok = abs(overlap - cert.value) <= tol and bool(rep.is_sio) and bool(rep.is_io) and bool(rep.is_dio)
    body = {"c_max": cmax, "two_pow_c_max": cert.value, "d_fidelity_sq": overlap, "dim": d,
            "class": {k: {"ok": m.ok, "residual": m.residual} for k, m in vars(rep).items()},
            "pass": ok, "tolerance": tol}
    if cfg.witness:
        body["channel"] = ch.channel_to_json(E)
        body["tau"] = la.matrix_to_json(cert.tau)
    return (EXIT_OK if ok else EXIT_CERT), body


def cmd_game(cfg):
    """Discrimination advantage p_succ / p_succ_ICO against 2^C_max, with a Monte Carlo replay."""
    rho = _need_state(cfg)
    d = rho.shape[0]
    if d < 2:
        raise InputError("the discrimination game needs d >= 2")
    if cfg.trials < 1:
        raise InputError("--trials must be positive")
    body = {"dim": d}
    if cfg.instrument == "cmax":
        tol = cfg.tol if cfg.tol is not None else 1e-5
        try:
            res = gm.advantage_ratio(rho, tol=tol)
            ok = True
        except gm.CertificationFailure as exc:
            body["failure"] = str(exc)
            return EXIT_CERT, body
        inst = gm.build_cmax_instrument(rho)
        povm = gm.canonical_povm(d)
        body["result"] = res.to_json(cfg.witness)
    else:
        phases = [2 * math.pi * k / d for k in range(d)]
        inst = gm.build_phase_instrument(phases, np.full(d, 1.0 / d), dim=d)
        p_opt, povm = gm.p_succ_opt(inst, rho)
        p_ico = gm.p_succ_ico(inst)
        body["result"] = {"p_succ": p_opt, "p_ico": p_ico, "ratio": p_opt / p_ico,
                          "phases": phases, "two_pow_c_max": 2.0 ** ms.c_max(rho)}
        if cfg.witness:
            body["result"]["povm"] = [la.matrix_to_json(m) for m in povm.effects]
        ok = p_opt / p_ico <= 2.0 ** ms.c_max(rho) + (cfg.tol if cfg.tol is not None else 1e-6)
    sim = gm.simulate_game(inst, povm, rho, cfg.trials, cfg.seed)
    body["simulation"] = {"trials": sim.trials, "successes": sim.successes, "frequency": sim.frequency,
                          "p_exact": sim.p_exact, "stderr": sim.stderr, "z_score": sim.z_score,
                          "within_5_sigma": sim.within(5.0)}
    ok = ok and sim.within(5.0)
    body["pass"] = bool(ok)
    return (EXIT_OK if ok else EXIT_CERT), body


def cmd_oneshot(cfg):
    """One-shot MIO distillation and cost scans with their smoothed bounds."""
    rho = _need_state(cfg)
    eps_list = cfg.eps or [0.05]
    if any(not 0 < e < 1 for e in eps_list):
        raise InputError("one-shot epsilons must lie in (0, 1)")
    runs, ok = [], True
    for eps in eps_list:
        dist = osh.one_shot_distill_mio(rho, eps, cfg.m_max)
        cost = osh.one_shot_cost_mio(rho, eps, cfg.m_max)
        b1 = osh.check_cost_bound(rho, eps, cfg.m_max, cost=cost)
        b2 = osh.check_distill_bound(rho, eps, cfg.m_max, dist=dist)
        ok = ok and b1.holds and b2.holds
        runs.append({"epsilon": eps, "distill": dist.to_json(cfg.witness), "cost": cost.to_json(cfg.witness),
                     "bounds": [{"name": b.name, "lhs": b.lhs, "rhs": b.rhs, "holds": b.holds,
                                 "certificate": b.detail["certificate"]} for b in (b1, b2)]})
    return (EXIT_OK if ok else EXIT_CERT), {"runs": runs, "pass": bool(ok)}


def cmd_sweep(cfg):
    """Per-copy smoothed values of tensor powers against C_r."""
    rho = _need_state(cfg)
    eps = cfg.eps[0] if cfg.eps else 0.1
    recs = osh.regularized_sweep(rho, eps, cfg.n_max)
    rows = [{"n": r.n, "smooth_c_max_per_copy": r.value_max_over_n, "smooth_c_min_per_copy": r.value_min_over_n,
             "c_max_per_copy": r.c_max_over_n, "c_min_per_copy": r.c_min_over_n, "c_r": r.c_r_target,
             "gap_max": r.gap_max, "gap_min": r.gap_min, "unsmoothed_chain": r.unsmoothed_chain()} for r in recs]
    gaps = [r.gap_max for r in recs]
    trend = all(b <= a + 1e-9 for a, b in zip(gaps, gaps[1:]))
    if cfg.csv:
        with contextlib.ExitStack() as stack:
            path = cfg.csv
            tmp = path + ".tmp"
            fh = stack.enter_context(open(tmp, "w", newline="", encoding="utf-8"))
            w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            w.writeheader()
            for r in rows:
                w.writerow({k: (format(v, ".17g") if isinstance(v, float) else v) for k, v in r.items()})
        os.replace(tmp, path)
    chain = all(r["unsmoothed_chain"] for r in rows)
    body = {"epsilon": eps, "records": rows, "gap_nonincreasing": trend, "unsmoothed_chain": chain}
    return (EXIT_OK if chain else EXIT_CERT), body


def cmd_certify(cfg):
    """Seeded certification suite over random states of dimension --dim."""
    dim = cfg.dim or 2
    tols = None if cfg.tol is None else {k: cfg.tol for k in cert_mod.DEFAULT_TOLERANCES}
    rep = cert_mod.certify_suite(dim, cfg.count, cfg.seed, tols, m_max=cfg.m_max)
    code = EXIT_SOLVER if rep.solver_failed else (EXIT_OK if rep.passed else EXIT_CERT)
    return code, rep.body(), rep.runtimes()


def cmd_demo(cfg):
    """Worked examples: maximally coherent qutrit, a coherent state with zero C_min, and an IO rise of C_min."""
    plus = np.zeros(3)
    plus[1] = plus[2] = 1 / math.sqrt(2)
    rho = 0.5 * la.proj([1, 0, 0]) + 0.5 * la.proj(plus)
    mc = la.proj(ch.maximally_coherent(3))
    v = ms.cmin_io_violation_demo(cfg.seed)
    body = {
        "maximally_coherent_3": {"c_max": ms.c_max(mc), "c_min": ms.c_min(mc), "c_r": ms.c_r(mc)},
        "zero_c_min_example": {"c_min": ms.c_min(rho), "c_l1": ms.c_l1(rho), "c_max": ms.c_max(rho)},
        "io_violation": {"psi": {"re": v.psi.real, "im": v.psi.imag},
                         "kraus": [la.matrix_to_json(k) for k in v.kraus],
                         "average_c_min_after": v.average_c_min_after, "c_min_before": v.c_min_before,
                         "probabilities": v.probabilities},
    }
    return EXIT_OK, body


HANDLERS = {"measure": cmd_measure, "channel": cmd_channel, "game": cmd_game, "oneshot": cmd_oneshot,
            "sweep": cmd_sweep, "certify": cmd_certify, "demo": cmd_demo}


# -- driver ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("state source")
    src.add_argument("--state", metavar="FILE", help="JSON density matrix or pure state")
    src.add_argument("--pure", metavar="A1,A2,...", help="amplitudes, normalised on input")
    src.add_argument("--random", metavar="DIM,RANK,SEED", help="seeded random density matrix")
    src.add_argument("--maxcoh", metavar="D", type=int, help="maximally coherent state of dimension D")
    common.add_argument("--eps", metavar="LIST", help="comma-separated smoothing parameters")
    common.add_argument("--tol", type=float, help="override tolerance(s)")
    common.add_argument("--trials", type=int, default=100000)
    common.add_argument("--out", metavar="PATH", help="write the JSON report here (atomically)")
    common.add_argument("--witness", action="store_true", help="include optimiser witnesses")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--dim", type=int)
    common.add_argument("--count", type=int, default=5)
    common.add_argument("--instrument", choices=("cmax", "phase"), default="cmax")
    common.add_argument("--m-max", dest="m_max", type=int)
    common.add_argument("--n-max", dest="n_max", type=int, default=3)
    common.add_argument("--class", dest="channel_class", default="DIO",
                        choices=[c for c in ch.CLASSES])
    common.add_argument("--kraus", type=int, default=2)
    common.add_argument("--csv", metavar="PATH", help="sweep table as CSV")
    common.add_argument("--trace-csv", dest="trace_csv", metavar="PATH", help="per-iteration solver trace")
    p = argparse.ArgumentParser(prog="cohcert", description="Coherence quantifiers and their certification.")
    p.add_argument("--version", action="version", version=f"cohcert {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HANDLERS[name].__doc__)
    return p


def config_from_args(args) -> RunConfig:
    if args.tol is not None and (not math.isfinite(args.tol) or args.tol < 0):
        raise InputError("--tol must be finite and nonnegative")
    if args.dim is not None and not 1 <= args.dim <= la.DIM_CAP:
        raise InputError(f"--dim must lie in [1, {la.DIM_CAP}]")
    return RunConfig(command=args.command, state_source=_state_source(args), eps=_eps_list(args.eps),
                     tol=args.tol, trials=args.trials, out=args.out, witness=args.witness, seed=args.seed,
                     dim=args.dim, count=args.count, instrument=args.instrument, m_max=args.m_max,
                     n_max=args.n_max, channel_class=args.channel_class, kraus=args.kraus, csv=args.csv,
                     trace_csv=args.trace_csv)


def run(cfg: RunConfig):
    """Execute one command; returns ``(exit_code, report_dict)``."""
    t0 = time.perf_counter()
    runtimes = {}
    status = "ok"
    with contextlib.ExitStack() as stack:
        if cfg.trace_csv:
            fh = stack.enter_context(open(cfg.trace_csv, "w", newline="", encoding="utf-8"))
            stack.enter_context(trace_to(fh))
        try:
            out = HANDLERS[cfg.command](cfg)
            code, body = out[0], out[1]
            if len(out) > 2:
                runtimes = out[2]
        except (InputError, la.ValidationError, FileNotFoundError) as exc:
            code, body, status = EXIT_INPUT, {"error": f"{type(exc).__name__}: {exc}"}, "input_error"
        except (SolverError, np.linalg.LinAlgError) as exc:
            code, body, status = EXIT_SOLVER, {"error": f"{type(exc).__name__}: {exc}"}, "solver_error"
        except ms.NotFound as exc:
            code, body, status = EXIT_CERT, {"error": str(exc)}, "not_found"
    if code == EXIT_CERT and status == "ok":
        status = "certification_failure"
    header = {"tool": "cohcert", "version": __version__,
              "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
              "runtime_total": time.perf_counter() - t0, "runtimes": runtimes}
    body = {"config": cfg.body(), "exit_code": code, "status": status, "result": body}
    return code, {"header": header, "body": body}


def _out_path(cfg):
    if cfg.out:
        return cfg.out
    base = os.environ.get("COHCERT_OUT")
    if base:
        return os.path.join(base, f"{cfg.command}.json")
    return None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = config_from_args(args)
    except InputError as exc:
        print(f"cohcert: {exc}", file=sys.stderr)
        return EXIT_INPUT
    code, report = run(cfg)
    text = jsonio.dumps(report)
    path = _out_path(cfg)
    if path:
        try:
            jsonio.atomic_write(path, text)
        except OSError as exc:
            print(f"cohcert: cannot write {path}: {exc}", file=sys.stderr)
            return EXIT_INPUT
    else:
        sys.stdout.write(text + "\n")
    if code == EXIT_INPUT:
        print(f"cohcert: {report['body']['result'].get('error')}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

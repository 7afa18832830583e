"""Run the certification suite over a range of dimensions and print a pass/fail table.

    python3 scripts/certify_grid.py --dims 2,3,4 --count 5 --seed 0
"""

import argparse
import time
from dataclasses import dataclass

from cohcert.certify import certify_suite


@dataclass
class GridConfig:
    dims: tuple = (2, 3, 4)
    count: int = 5
    seed: int = 0
    oneshot: bool | None = None


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dims", default="2,3,4")
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-oneshot", action="store_true")
    a = p.parse_args(argv)
    cfg = GridConfig(tuple(int(x) for x in a.dims.split(",")), a.count, a.seed,
                     False if a.no_oneshot else None)

    print(f"{'dim':>4} {'pass':>6} {'fail':>6} {'error':>6} {'seconds':>8}")
    failures = 0
    for d in cfg.dims:
        t0 = time.perf_counter()
        rep = certify_suite(d, cfg.count, cfg.seed, oneshot=cfg.oneshot)
        s = rep.summary()
        print(f"{d:>4} {s['pass']:>6} {s['fail']:>6} {s['solver_error']:>6} {time.perf_counter() - t0:>8.1f}")
        for r in rep.records:
            if r.status != "pass":
                failures += 1
                print(f"     {r.status}: {r.name} state={r.state} lhs={r.lhs:.6g} rhs={r.rhs:.6g} {r.message}")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())

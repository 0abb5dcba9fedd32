"""Compare the jit and pure-numpy backends on the three hot kernels.

Runs itself twice as a subprocess (TRANSPORTLAB_NUMBA=1 and =0) so each
backend gets a clean process; prints per-kernel wall times and the
speedup.  Workload sizes are moderate on purpose: the point is the
ratio, not a stress test.

Usage: python benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import time


def _workload():
    import numpy as np

    import transportlab as tl
    from transportlab import density as dn, leastgrad as lg

    dom = tl.disk(1.0)
    cost = tl.ChordCost(dom, tl.EuclideanNorm())
    fp, fm = (
        tl.quadrature_atoms(lambda s: np.cos(s), (-np.pi / 2, np.pi / 2), 1200, dom.perimeter),
        tl.quadrature_atoms(lambda s: -np.cos(s), (np.pi / 2, 3 * np.pi / 2), 1200, dom.perimeter),
    )

    # warm any jit compilation outside the timed sections
    warm_p = tl.BoundaryMeasure(np.array([0.0, 1.0]), np.ones(2), dom.perimeter)
    warm_m = tl.BoundaryMeasure(np.array([3.0, 4.0]), np.ones(2), dom.perimeter)
    warm_plan = tl.solve_kantorovich(warm_p, warm_m, cost)
    warm_grid = dn.grid_for_domain(dom, 32)
    dn.deposit_partial_density(warm_plan, 1.0, warm_grid)
    lg.reconstruct_u(lg.flow_from_plan(warm_plan), _const_datum(dom), warm_grid, dom)

    out = {"backend": tl.backend_name()}

    t0 = time.perf_counter()
    plan = tl.solve_kantorovich(fp, fm, cost)
    out["simplex_1200x1200_s"] = time.perf_counter() - t0

    grid = dn.grid_for_domain(dom, 512)
    t0 = time.perf_counter()
    dn.deposit_partial_density(plan, 1.0, grid)
    out["deposit_512_s"] = time.perf_counter() - t0

    flow = lg.flow_from_plan(plan)
    t0 = time.perf_counter()
    lg.reconstruct_u(flow, _const_datum(dom), grid, dom)
    out["crossing_512_s"] = time.perf_counter() - t0

    print(json.dumps(out))


def _const_datum(dom):
    import numpy as np

    import transportlab as tl

    return tl.BoundaryDatum(
        samples=np.array([[0.0, 0.0], [dom.perimeter / 2, 0.0]]),
        jumps=None,
        perimeter=dom.perimeter,
    )


def main():
    results = {}
    for flag in ("1", "0"):
        env = dict(os.environ, TRANSPORTLAB_NUMBA=flag)
        proc = subprocess.run(
            [sys.executable, __file__, "--run"],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        data = json.loads(proc.stdout.strip().splitlines()[-1])
        results[data.pop("backend")] = data
    keys = sorted(next(iter(results.values())))
    print(f"{'kernel':<24}{'numba':>10}{'numpy':>10}{'speedup':>9}")
    for k in keys:
        nb = results["numba"][k]
        np_ = results["numpy"][k]
        print(f"{k:<24}{nb:>10.3f}{np_:>10.3f}{np_ / nb:>8.1f}x")


if __name__ == "__main__":
    if "--run" in sys.argv:
        _workload()
    else:
        main()

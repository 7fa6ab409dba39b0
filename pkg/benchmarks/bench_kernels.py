"""Compiled vs numpy transfer-matrix kernels.

    python3 benchmarks/bench_kernels.py [--steps 200000] [--repeat 5] [--json out.json]

Times both backends on the same Gauss-node samples of 2 eps0 cos(omega x),
reports the best wall time per backend and checks that the two agree.
"""

from __future__ import annotations

import argparse
import json
import math
import time

import numpy as np

from gapflow import _fallback
from gapflow.direct import QPotential, node_samples

try:
    from gapflow import _kernels
except ImportError:  # extension not built
    _kernels = None


def _best(fn, repeat: int) -> float:
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(steps: int, repeat: int, nxi: int) -> dict:
    p = QPotential.cosine(0.05)
    h = 0.01
    z = 0.3 + 1e-3j
    phi = node_samples(p, 0.0, h, steps, None)
    xis = np.exp(2j * np.pi * np.arange(nxi) / max(nxi, 1))
    cps = np.linspace(0, steps, 11).astype(np.int64)
    out = {"steps": steps, "xis": nxi, "repeat": repeat}
    ref = _fallback.propagate(phi, h, z, xis, cps)
    out["numpy_seconds"] = _best(lambda: _fallback.propagate(phi, h, z, xis, cps), repeat)
    if _kernels is None:
        out["cython_seconds"] = None
        return out
    got = _kernels.propagate(phi, h, z, xis, cps)
    out["cython_seconds"] = _best(lambda: _kernels.propagate(phi, h, z, xis, cps), repeat)
    out["speedup"] = out["numpy_seconds"] / out["cython_seconds"]
    # same log-scaled matrix, compared after undoing the scale
    lt = np.log(np.abs(ref[0]) + 1e-300) + ref[1][:, None, None]
    lg = np.log(np.abs(got[0]) + 1e-300) + got[1][:, None, None]
    out["max_log_matrix_gap"] = float(np.max(np.abs(lt - lg)[np.abs(ref[0]) > 1e-12]))
    out["max_wind_gap"] = float(np.max(np.abs(ref[2] - got[2])))
    return out


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--xis", type=int, default=4)
    ap.add_argument("--json")
    args = ap.parse_args()
    res = run(args.steps, args.repeat, args.xis)
    for k, v in res.items():
        print(f"{k:>20}: {v}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(res, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()

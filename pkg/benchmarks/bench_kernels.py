"""Compiled core against the numpy fallback on the same inputs.

For each kernel: best-of-`repeat` wall time per backend, the speed-up, and
the largest disagreement between the two outputs (counts must agree exactly).

    python benchmarks/bench_kernels.py [--depth 8] [--queries 2000] [--repeat 3]
"""
from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from cantorproj import generate
from cantorproj._kernels import backends
from cantorproj.geometry import unit_normals
from cantorproj.grid import GridSequence


def _best(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(depth: int, queries: int, seed: int):
    c = generate(GridSequence.constant(3, 2, depth), depth, seed)
    x0, y0, side = c.float_squares(depth)
    ix, iy = c.coords(depth)
    d = c.seq.denominator(depth)
    gen = np.random.default_rng(seed)
    nx, ny = unit_normals(gen.uniform(0, np.pi, queries))
    rho = gen.uniform(-0.5, 1.5, queries)
    w = gen.uniform(0, 4.0 / d, queries)
    lo, hi = rho - w / 2, rho + w / 2
    yield "line_length_sums", lambda k: k.line_length_sums(x0, y0, side, nx, ny, rho)
    yield "line_length_sums_grid", lambda k: k.line_length_sums_grid(ix, iy, d, nx, ny, rho)
    yield "strip_hit_counts", lambda k: k.strip_hit_counts(x0, y0, side, nx, ny, lo, hi)
    yield "strip_hit_counts_grid", lambda k: k.strip_hit_counts_grid(ix, iy, d, nx, ny, lo, hi)
    yield "strip_clip_areas", lambda k: k.strip_clip_areas(x0, y0, side, nx, ny, lo, hi)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depth", type=int, default=8)
    ap.add_argument("--queries", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    ks = backends()
    if "compiled" not in ks:
        print("compiled core not built; run `python setup.py build_ext --inplace`", file=sys.stderr)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["kernel", "entries", "queries", "python_s", "compiled_s", "speedup", "max_abs_diff"])
    entries = 2**args.depth
    for name, call in cases(args.depth, args.queries, args.seed):
        tp, rp = _best(lambda: call(ks["python"]), args.repeat)
        if "compiled" in ks:
            tc, rc = _best(lambda: call(ks["compiled"]), args.repeat)
            diff = float(np.max(np.abs(np.asarray(rp, float) - np.asarray(rc, float)), initial=0.0))
            out.writerow([name, entries, args.queries, f"{tp:.4f}", f"{tc:.4f}", f"{tp / tc:.1f}", f"{diff:.3g}"])
        else:
            out.writerow([name, entries, args.queries, f"{tp:.4f}", "", "", ""])
    return 0


if __name__ == "__main__":
    sys.exit(main())

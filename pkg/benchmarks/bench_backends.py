"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_backends.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from potential_regions import _backend, _fallback
from potential_regions.maximal import section_arrays
from potential_regions.experiments import build_regions, make_run


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def potential_cases():
    for t in (1e-4, 1e-40, 1e-150):
        ys = np.concatenate([[0.0], np.geomspace(t / 20, 0.1, 400)])
        yield f"smoothed_potential t={t:g} n={len(ys)}", (ys, t, 0.01 * t, 0.5, 1.0, 1e-8, 1e-6, 10**6)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _backend.compiled is None:
        raise SystemExit("compiled kernels are not built; run pip install -e . first")
    C, F = _backend.compiled, _fallback
    rows = []
    for name, a in potential_cases():
        tc, rc = best_of(lambda: C.smoothed_potential(*a), args.repeat)
        tf, rf = best_of(lambda: F.smoothed_potential(*a), args.repeat)
        rows.append((name, tc, tf, np.max(np.abs(rc[0] - rf[0]) / np.abs(rf[0]))))

    run = make_run({})
    trace, omega, _ = build_regions(run)
    heights = np.geomspace(trace.levels[-1].t, 1.0, 300)
    ys = np.linspace(-0.2, 0.2, 4001)
    vals = np.random.default_rng(0).random((len(heights), len(ys)))
    row_ptr, lo, hi = section_arrays(omega, heights)
    xs = np.linspace(-0.05, 0.05, 2001)
    a = (vals, ys, row_ptr, lo, hi, xs)
    tc, rc = best_of(lambda: C.region_max(*a), args.repeat)
    tf, rf = best_of(lambda: F.region_max(*a), args.repeat)
    rows.append((f"region_max {len(heights)}x{len(ys)}, {len(xs)} x", tc, tf,
                 float(np.max(np.abs(rc - rf)))))

    print(f"{'case':44s} {'compiled s':>11s} {'numpy s':>9s} {'speedup':>8s} {'max diff':>9s}")
    for name, tc, tf, d in rows:
        print(f"{name:44s} {tc:11.4f} {tf:9.4f} {tf / tc:8.1f} {d:9.1e}")


if __name__ == "__main__":
    main()

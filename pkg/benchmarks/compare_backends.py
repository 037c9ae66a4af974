#!/usr/bin/env python3
"""Compare the compiled DTW kernels against the pure-python fallback.

Times the three workloads that matter - whole-sequence distance, batched
subsequence matching, and a full detector scan - on both backends and
checks the outputs agree bit-for-bit.  Run from the repo root:

    python3 benchmarks/compare_backends.py [--seconds 60] [--repeats 3]
"""
import argparse
import json
import time

import numpy as np

from powersig import _backend
from powersig.detect import scan_stream
from powersig.dtw import DtwConfig, dtw_distance, subsequence_match_windows
from powersig.experiments import throughput_workload


def time_call(fn, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seconds", type=float, default=60.0,
                        help="scan workload length (default 60 s)")
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=20260808)
    args = parser.parse_args()

    if "compiled" not in _backend.available():
        print("compiled backend not built; timing pure python only")

    rng = np.random.default_rng(args.seed)
    pair_a = rng.normal(size=400)
    pair_b = rng.normal(size=420)
    template = rng.normal(size=150)
    windows = rng.normal(size=(200, 225))
    cfg = DtwConfig()
    trace, signatures = throughput_workload(args.seed, seconds=args.seconds)

    workloads = {
        "full_dtw_400x420": lambda: dtw_distance(pair_a, pair_b, cfg),
        "subseq_batch_200x150x225": lambda: subsequence_match_windows(
            template, windows, cfg),
        f"scan_{args.seconds:.0f}s_5sigs": lambda: scan_stream(
            trace, signatures),
    }

    rows = []
    results = {}
    for backend in _backend.available():
        _backend.use_backend(backend)
        for name, fn in workloads.items():
            elapsed, result = time_call(fn, args.repeats)
            rows.append({"backend": backend, "workload": name,
                         "best_seconds": round(elapsed, 6)})
            results.setdefault(name, {})[backend] = result

    for name, per_backend in results.items():
        if len(per_backend) == 2:
            py, cy = per_backend["python"], per_backend["compiled"]
            if name.startswith("subseq"):
                agree = all(np.array_equal(x, y) for x, y in zip(py, cy))
            else:
                agree = py == cy
            status = "bit-identical" if agree else "MISMATCH"
            print(f"{name}: backends {status}")

    print(json.dumps(rows, indent=2))
    by_workload = {}
    for row in rows:
        by_workload.setdefault(row["workload"], {})[row["backend"]] = \
            row["best_seconds"]
    for name, times in by_workload.items():
        if "python" in times and "compiled" in times:
            print(f"{name}: compiled is {times['python'] / times['compiled']:.1f}x "
                  f"faster ({times['compiled'] * 1000:.1f} ms vs "
                  f"{times['python'] * 1000:.1f} ms)")


if __name__ == "__main__":
    main()

"""Benchmark the compiled conv kernels against the numpy fallback.

Run as ``python -m crfgan.tensor.kernels.bench [--reps N]``. Shapes mirror
the layers the desk-scale networks actually execute. Both backends compute
on identical pre-padded inputs; the table reports per-call milliseconds and
the max absolute disagreement.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import numpy_backend

try:
    from . import _convkern as compiled_backend
except ImportError:
    compiled_backend = None

# (label, N, C, F, spatial, k, stride)
CASES = [
    ("g2-slab-conv", 2, 12, 18, (4, 18, 18), 3, 1),
    ("g2-upsample-grad", 2, 12, 8, (4, 32, 32), 4, 2),
    ("d-slab-stride2", 2, 1, 6, (10, 66, 66), 4, 2),
    ("he-full-conv", 2, 8, 12, (10, 66, 66), 4, 2),
]


def _time(fn, reps: int) -> float:
    fn()  # warm-up
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps * 1e3


def run(reps: int = 3, dtype=np.float32) -> list:
    rows = []
    rng = np.random.default_rng(0)
    for label, n, c, f, spatial, k, s in CASES:
        xp = rng.standard_normal((n, c) + spatial).astype(dtype)
        w = rng.standard_normal((f, c, k, k, k)).astype(dtype)
        stride = (s, s, s)
        out_spatial = tuple((d - k) // s + 1 for d in spatial)

        ref = numpy_backend.conv3d_forward(xp, w, stride, out_spatial)
        t_np = _time(lambda: numpy_backend.conv3d_forward(xp, w, stride, out_spatial), reps)
        row = {"case": label, "numpy_ms": t_np, "compiled_ms": None, "max_diff": None}
        if compiled_backend is not None:
            got = compiled_backend.conv3d_forward(xp, w, stride, out_spatial)
            row["compiled_ms"] = _time(
                lambda: compiled_backend.conv3d_forward(xp, w, stride, out_spatial), reps)
            row["max_diff"] = float(np.max(np.abs(got - ref)))
        rows.append(row)
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--float64", action="store_true")
    args = ap.parse_args()
    rows = run(args.reps, np.float64 if args.float64 else np.float32)
    print(f"{'case':<20} {'numpy ms':>10} {'compiled ms':>12} {'speedup':>8} {'max diff':>10}")
    for r in rows:
        if r["compiled_ms"] is None:
            print(f"{r['case']:<20} {r['numpy_ms']:>10.2f} {'n/a':>12} {'n/a':>8} {'n/a':>10}")
        else:
            sp = r["numpy_ms"] / r["compiled_ms"]
            print(f"{r['case']:<20} {r['numpy_ms']:>10.2f} {r['compiled_ms']:>12.2f} "
                  f"{sp:>8.2f} {r['max_diff']:>10.2e}")
    if compiled_backend is None:
        print("compiled backend not built; numpy fallback only")


if __name__ == "__main__":
    main()

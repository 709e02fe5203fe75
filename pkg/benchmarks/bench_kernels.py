"""Time each hot kernel under the numba and numpy backends.

    python benchmarks/bench_kernels.py [--repeat N] [--frames T]

Workloads are sized like one compare run: 22 joints, a few hundred frames.
The first numba call (JIT compile, or cache load) is excluded from timing.
Outputs of the two backends are checked against each other before timing.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from motionfid import _kernels
from motionfid.normalize import butter_sos, lfilter_zi


def workloads(T: int, rng: np.random.Generator) -> dict:
    sos = butter_sos(4, 0.05)
    b, a = sos[0, :3].copy(), sos[0, 3:].copy()
    x = rng.standard_normal((T + 30, 66))
    zi = np.outer(x[0], lfilter_zi(b, a))
    A = rng.standard_normal((T, 22, 3))
    B = rng.standard_normal((T, 22, 3))
    Z = rng.standard_normal((4 * T, 64))
    C = rng.standard_normal((512, 64))
    return {
        "dtw_batch (22 joints)": lambda: _kernels.dtw_batch(A.transpose(1, 0, 2), B.transpose(1, 0, 2)),
        "median_filter k=11": lambda: _kernels.median_filter(x, 11),
        "lfilter (one section)": lambda: _kernels.lfilter(b, a, x, zi),
        "procrustes_batch": lambda: _kernels.procrustes_batch(A, B),
        "nearest_codes (K=512)": lambda: _kernels.nearest_codes(Z, C),
    }


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _same(u, v) -> bool:
    if isinstance(u, tuple):
        return all(_same(p, q) for p, q in zip(u, v))
    return np.allclose(u, v, rtol=1e-9, atol=1e-9)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--frames", type=int, default=300)
    args = ap.parse_args(argv)

    backends = _kernels.available_backends()
    if "numba" not in backends:
        print("numba backend unavailable (missing, or MOTIONFID_DISABLE_NUMBA set); timing numpy only")
    jobs = workloads(args.frames, np.random.default_rng(0))
    timings = {}
    for name, fn in jobs.items():
        outs = {}
        for be in backends:
            with _kernels.use_backend(be):
                outs[be] = fn()  # warm-up; compiles under numba
                timings[name, be] = best_of(fn, args.repeat)
        if len(outs) == 2 and not _same(outs["numba"], outs["numpy"]):
            raise SystemExit(f"{name}: backends disagree")

    print(f"{'kernel':<24}" + "".join(f"{be:>12}" for be in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name in jobs:
        row = f"{name:<24}" + "".join(f"{timings[name, be] * 1e3:>10.2f}ms" for be in backends)
        if len(backends) == 2:
            row += f"{timings[name, 'numpy'] / timings[name, 'numba']:>11.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

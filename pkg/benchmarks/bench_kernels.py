"""Time the compiled Jacobi kernel against the NumPy fallback.

Both kernels produce bit-identical output; this script measures what the
compiled path buys and double-checks the bit parity on the way.

Run:  python benchmarks/bench_kernels.py [--orders 4,8,16,32] [--repeats 20]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sisfit.kernels import available_backends, get_kernel

TOL = 1e-13
MAX_SWEEPS = 64


def make_matrices(order: int, count: int, seed: int):
    rng = np.random.RandomState(seed)
    mats = []
    for _ in range(count):
        a = rng.randn(order, order) + 1j * rng.randn(order, order)
        h = (a + a.conj().T) / 2.0
        mats.append((h, float(np.linalg.norm(h))))
    return mats


def solve(kernel, h: np.ndarray, normg: float):
    n = h.shape[0]
    are = np.ascontiguousarray(h.real)
    aim = np.ascontiguousarray(h.imag)
    vre = np.eye(n)
    vim = np.zeros((n, n))
    kernel(are, aim, vre, vim, TOL * normg, MAX_SWEEPS)
    return are, aim, vre, vim


def bench(kernel, mats, repeats: int) -> float:
    t0 = time.perf_counter()
    for _ in range(repeats):
        for h, normg in mats:
            solve(kernel, h, normg)
    return (time.perf_counter() - t0) / repeats


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--orders", default="4,8,16,32")
    ap.add_argument("--count", type=int, default=20, help="matrices per order")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=12345)
    args = ap.parse_args()
    orders = [int(t) for t in args.orders.split(",")]

    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernel not built; nothing to compare against")
        return 1
    fast = get_kernel("cython")
    slow = get_kernel("python")

    print(f"{'order':>6} {'matrices':>9} {'cython [ms]':>12} {'python [ms]':>12} {'speedup':>8}  parity")
    for order in orders:
        mats = make_matrices(order, args.count, args.seed + order)
        parity = all(
            all(np.array_equal(x, y) for x, y in zip(solve(fast, h, ng), solve(slow, h, ng)))
            for h, ng in mats[: min(3, len(mats))]
        )
        t_fast = bench(fast, mats, args.repeats)
        t_slow = bench(slow, mats, max(1, args.repeats // 5))
        print(
            f"{order:>6} {len(mats):>9} {t_fast * 1e3:>12.2f} {t_slow * 1e3:>12.2f} "
            f"{t_slow / t_fast:>7.1f}x  {'bit-identical' if parity else 'MISMATCH'}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

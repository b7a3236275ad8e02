"""Time the numba and numpy multiplier kernels on the same operand stream.

    python benchmarks/bench_kernels.py [--n 20000] [--repeat 5]
"""

import argparse
import random
import time

from horizdpa import _kernels
from horizdpa.multiplier import multiply_many


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20_000, help="multiplications per run")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rnd = random.Random(0)
    a = [rnd.getrandbits(233) for _ in range(args.n)]
    b = [rnd.getrandbits(233) for _ in range(args.n)]

    kernels = {"numpy": _kernels.karatsuba_cycles_numpy}
    if _kernels.HAVE_NUMBA:
        kernels["numba"] = _kernels.karatsuba_cycles_numba
        t0 = time.perf_counter()
        multiply_many(a[:2], b[:2], kernel=kernels["numba"])
        print(f"numba warm-up (compile or cache load): {time.perf_counter() - t0:.2f} s")

    results = {}
    for name, k in kernels.items():
        t = best_of(lambda: multiply_many(a, b, kernel=k), args.repeat)
        results[name] = multiply_many(a, b, kernel=k)
        print(f"{name:6s} {args.n} multiplications: {t * 1e3:8.1f} ms  ({t / args.n * 1e6:.2f} us each)")
    if len(results) == 2:
        same = results["numpy"][0] == results["numba"][0] and (results["numpy"][1] == results["numba"][1]).all()
        print(f"outputs identical: {same}")


if __name__ == "__main__":
    main()

"""Compare the jit-compiled kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both implementations run in-process on identical inputs, with a parity
column so a speedup never hides a numerical drift. Under
``HITLOOP_NO_NUMBA=1`` (or without numba installed) the dispatched kernel
IS the numpy one, and the table degenerates to a self-comparison.
"""

import argparse
import time

import numpy as np

from hitloop import _kernels


def best_of(fn, args, repeat: int) -> float:
    fn(*args)  # warmup; triggers jit compilation on the numba path
    timings = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        timings.append(time.perf_counter() - start)
    return min(timings)


def rows(repeat: int, rng: np.random.Generator):
    entropy_shapes = [(1_000, 16), (20_000, 64), (100_000, 128)]
    for n, d in entropy_shapes:
        mat = rng.random((n, d))
        fast = best_of(_kernels.perdim_entropy, (mat, 10), repeat)
        plain = best_of(_kernels.perdim_entropy_numpy, (mat, 10), repeat)
        diff = float(
            np.abs(
                _kernels.perdim_entropy(mat, 10) - _kernels.perdim_entropy_numpy(mat, 10)
            ).max()
        )
        yield f"perdim_entropy {n}x{d}", fast, plain, diff

    iou_shapes = [(64, 64), (512, 512), (2048, 2048)]
    for n, m in iou_shapes:
        def boxes(count):
            x0 = rng.random((count, 1))
            y0 = rng.random((count, 1))
            return np.hstack([x0, y0, x0 + rng.random((count, 1)), y0 + rng.random((count, 1))])
        a, b = boxes(n), boxes(m)
        fast = best_of(_kernels.iou_matrix, (a, b), repeat)
        plain = best_of(_kernels.iou_matrix_numpy, (a, b), repeat)
        diff = float(np.abs(_kernels.iou_matrix(a, b) - _kernels.iou_matrix_numpy(a, b)).max())
        yield f"iou_matrix {n}x{m}", fast, plain, diff


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5, help="timed runs per case (best wins)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    path = "numba" if _kernels.HAS_NUMBA else "numpy (fallback)"
    print(f"dispatched kernel path: {path}")
    header = f"{'case':<28} {'kernel':>10} {'numpy':>10} {'speedup':>8} {'max|diff|':>10}"
    print(header)
    print("-" * len(header))
    rng = np.random.default_rng(args.seed)
    for name, fast, plain, diff in rows(args.repeat, rng):
        speedup = plain / fast if fast > 0 else float("inf")
        print(
            f"{name:<28} {fast * 1e3:>8.2f}ms {plain * 1e3:>8.2f}ms "
            f"{speedup:>7.1f}x {diff:>10.2e}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

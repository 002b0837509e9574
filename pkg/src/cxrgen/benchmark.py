"""Benchmark the numba kernels against the pure-numpy fallbacks.

Run with `python -m cxrgen.benchmark`. Shapes match the default network's
first and second conv blocks.
"""

from __future__ import annotations

import time

import numpy as np

from . import kernels

SHAPES = [
    # (label, in_ch, H, W, filters)
    ("conv1 (1x64x128 -> 8)", 1, 64, 128, 8),
    ("conv2 (8x32x64 -> 16)", 8, 32, 64, 16),
]


def _time(fn, *args, repeats=20):
    fn(*args)  # warm up (triggers numba compilation)
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def main() -> None:
    rng = np.random.default_rng(0)
    backend = "numba" if kernels.USE_NUMBA else "numpy (CXR_NO_NUMBA set or numba missing)"
    print(f"active backend: {backend}\n")
    header = f"{'kernel':<28} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, c, h, w, f in SHAPES:
        x = rng.random((c, h, w))
        k = rng.standard_normal((f, c, 3, 3)) * 0.1
        b = rng.standard_normal(f) * 0.1
        g = rng.standard_normal((f, h, w))

        rows = [
            (f"{label} fwd", kernels.conv2d_forward_numpy, (x, k, b)),
            (f"{label} bwd", kernels.conv2d_backward_numpy, (x, k, g)),
        ]
        for name, numpy_fn, args in rows:
            t_np = _time(numpy_fn, *args)
            if kernels.USE_NUMBA:
                numba_fn = {
                    kernels.conv2d_forward_numpy: kernels.conv2d_forward_numba,
                    kernels.conv2d_backward_numpy: kernels.conv2d_backward_numba,
                }[numpy_fn]
                t_nb = _time(numba_fn, *args)
                print(f"{name:<28} {t_np * 1e3:>10.3f} {t_nb * 1e3:>10.3f} {t_np / t_nb:>7.1f}x")
            else:
                print(f"{name:<28} {t_np * 1e3:>10.3f} {'-':>10} {'-':>8}")

        xi = rng.random((f, h, w))
        gi = rng.standard_normal((f, h // 2, w // 2))
        t_np = _time(kernels.maxpool2_forward_numpy, xi)
        if kernels.USE_NUMBA:
            t_nb = _time(kernels.maxpool2_forward_numba, xi)
            print(f"{label + ' pool':<28} {t_np * 1e3:>10.3f} {t_nb * 1e3:>10.3f} {t_np / t_nb:>7.1f}x")
        else:
            print(f"{label + ' pool':<28} {t_np * 1e3:>10.3f} {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()

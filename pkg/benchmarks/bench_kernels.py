"""Compare the jitted kernels against the pure-numpy fallbacks.

Runs both backends in this process (the module exposes the private numpy
implementations directly, so no re-import with DPKIT_NO_NUMBA is needed)
and prints a timing table. Invoke with:

    python benchmarks/bench_kernels.py [--size 1000000] [--repeats 5]
"""

import argparse
import math
import timeit

import numpy as np

from dpkit import _kernels


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=1_000_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    u = rng.uniform(1e-9, 1 - 1e-9, size=args.size)
    scale = rng.uniform(0.1, 2.0, size=args.size)
    n_rows = max(args.size // 1000, 1)
    x = rng.normal(size=(n_rows, 8))
    freqs = rng.normal(size=(64, 8))
    phases = rng.uniform(0, 2 * math.pi, size=64)

    cases = [
        ("normal_quantile",
         lambda: _kernels._normal_quantile_np(u),
         (lambda: _kernels._normal_quantile_numba(u))
         if _kernels.NUMBA_ENABLED else None),
        ("laplace_noise",
         lambda: _kernels._laplace_noise_np(u, scale),
         (lambda: _kernels._laplace_noise_numba(u, scale))
         if _kernels.NUMBA_ENABLED else None),
        ("rff_features",
         lambda: _kernels._rff_features_np(x, freqs, phases),
         (lambda: _kernels._rff_features_numba(x, freqs, phases))
         if _kernels.NUMBA_ENABLED else None),
    ]

    print(f"size={args.size} repeats={args.repeats} "
          f"numba={'on' if _kernels.NUMBA_ENABLED else 'off'}")
    print(f"{'kernel':<18} {'numpy (ms)':>12} {'numba (ms)':>12} "
          f"{'speedup':>8}")
    for name, np_fn, nb_fn in cases:
        t_np = min(timeit.repeat(np_fn, number=1,
                                 repeat=args.repeats)) * 1e3
        if nb_fn is None:
            print(f"{name:<18} {t_np:>12.2f} {'n/a':>12} {'n/a':>8}")
            continue
        nb_fn()  # trigger compilation outside the timed region
        t_nb = min(timeit.repeat(nb_fn, number=1,
                                 repeat=args.repeats)) * 1e3
        # Agreement sanity check before reporting numbers.
        assert np.allclose(np.asarray(np_fn()), np.asarray(nb_fn()),
                           atol=1e-9)
        print(f"{name:<18} {t_np:>12.2f} {t_nb:>12.2f} "
              f"{t_np / t_nb:>7.2f}x")


if __name__ == "__main__":
    main()

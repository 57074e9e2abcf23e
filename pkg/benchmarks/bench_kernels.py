"""Time the hot kernels under each available backend.

    python benchmarks/bench_kernels.py [--repeat 20]

Shapes are those of a scale-0.25 model on a batch of 32 length-512 series.
The first call per backend is excluded so numba compile time is not counted.
"""
import argparse
import timeit

import numpy as np

from tstransfer import kernels


def cases(rng):
    xp = rng.standard_normal((32, 8, 520)).astype(np.float32)
    w = rng.standard_normal((8, 8, 9)).astype(np.float32)
    gy = rng.standard_normal((32, 8, 256)).astype(np.float32)
    pool_x = rng.standard_normal((32, 16, 512)).astype(np.float32)
    xw = rng.standard_normal((32, 128, 4 * 25)).astype(np.float32)
    wh = (0.1 * rng.standard_normal((25, 4 * 25))).astype(np.float32)
    hs, cs, acts = kernels.lstm_forward(xw, wh)
    dh = rng.standard_normal((32, 25)).astype(np.float32)
    _, idx = kernels.maxpool_forward(pool_x, 4)
    pool_gy = rng.standard_normal(idx.shape).astype(np.float32)
    return {
        "conv1d_forward": lambda: kernels.conv1d_forward(xp, w, 2, 1),
        "conv1d_backward": lambda: kernels.conv1d_backward(xp, w, gy, 2, 1),
        "maxpool_forward": lambda: kernels.maxpool_forward(pool_x, 4),
        "maxpool_backward": lambda: kernels.maxpool_backward(pool_gy, idx, 4, 512),
        "lstm_forward": lambda: kernels.lstm_forward(xw, wh),
        "lstm_backward": lambda: kernels.lstm_backward(wh, hs, cs, acts, dh),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    backends = kernels.available_backends()
    timings = {}
    for name in backends:
        kernels.set_backend(name)
        for label, fn in cases(np.random.default_rng(0)).items():
            fn()
            timings[label, name] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
    print(f"{'kernel':<18}" + "".join(f"{b + ' ms':>12}" for b in backends))
    for label in cases(np.random.default_rng(0)):
        print(f"{label:<18}" + "".join(f"{1e3 * timings[label, b]:>12.3f}" for b in backends))


if __name__ == "__main__":
    main()

"""Training throughput: numba epoch kernel vs the pure-numpy fallback.

    python3 benchmarks/bench_train.py [--epochs 5] [--repeats 3]

The numba kernel is compiled once before timing.  Both backends start from
the same seed, so the printed accuracies should agree closely.
"""
import argparse
import time

import numpy as np

from plnnflat._accel import HAS_NUMBA
from plnnflat.analysis import accuracy
from plnnflat.data import gen_synthetic, split
from plnnflat.optimize import TrainConfig, train_plnn

CASES = [((10, 10), 4), ((5, 5), 4), ((10, 10, 10), 32), ((50,), 4)]


def bench(X, y, cfg, backend, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        net = train_plnn(X, y, cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, net


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epochs", type=int, default=5)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    tr, te = split(gen_synthetic(5000, seed=0), 0.6, seed=0)
    backends = ["numba", "numpy"] if HAS_NUMBA else ["numpy"]
    if HAS_NUMBA:
        # compile once on a tiny two-class slice
        train_plnn(tr.X[:50], np.arange(50) % 2, TrainConfig((2,), epochs=1), backend="numba")

    print(f"{'arch':>10} {'batch':>5} " + " ".join(f"{b + ' s':>10} {b + ' acc':>10}" for b in backends)
          + ("    speedup" if len(backends) == 2 else ""))
    for arch, batch in CASES:
        cfg = TrainConfig(arch, 0.02, batch, args.epochs, 0)
        cols, times = [], []
        for b in backends:
            t, net = bench(tr.X, tr.y, cfg, b, args.repeats)
            times.append(t)
            cols.append(f"{t:10.3f} {accuracy(net, te.X, te.y):10.4f}")
        line = f"{','.join(map(str, arch)):>10} {batch:>5} " + " ".join(cols)
        if len(times) == 2:
            line += f" {times[1] / times[0]:10.1f}x"
        print(line)


if __name__ == "__main__":
    main()

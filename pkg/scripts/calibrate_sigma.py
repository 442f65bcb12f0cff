"""Pick the mixture spread for the synthetic XOR data.

For each candidate sigma this prints the Bayes accuracy of the four-component
mixture (Monte Carlo, exact class densities) and the mean test accuracy of
trained 10,10 networks.  The default spread was chosen so that trained nets
land around 0.93-0.94.

    python3 scripts/calibrate_sigma.py [--sigmas 0.9,1.0,1.05,1.1,1.2] [--seeds 3]
"""
import argparse

import numpy as np
from scipy.stats import multivariate_normal

from plnnflat.analysis import accuracy
from plnnflat.data import DEFAULT_LABELS, DEFAULT_MEANS, gen_synthetic, split
from plnnflat.optimize import TrainConfig, train_plnn


def bayes_accuracy(sigma, n=200_000, seed=0):
    data = gen_synthetic(n, seed=seed, sigma=sigma)
    dens = np.column_stack([multivariate_normal(m, sigma ** 2 * np.eye(2)).pdf(data.X) for m in DEFAULT_MEANS])
    labels = np.asarray(DEFAULT_LABELS)
    p1 = dens[:, labels == 1].sum(axis=1)
    p0 = dens[:, labels == 0].sum(axis=1)
    return float(np.mean((p1 > p0) == data.y))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sigmas", default="0.9,1.0,1.05,1.1,1.2")
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--epochs", type=int, default=100)
    args = ap.parse_args()
    print(f"{'sigma':>6} {'bayes':>7} {'trained 10,10':>14}")
    for sigma in (float(s) for s in args.sigmas.split(",")):
        accs = []
        for seed in range(args.seeds):
            tr, te = split(gen_synthetic(5000, seed=seed, sigma=sigma), 0.6, seed=seed)
            net = train_plnn(tr.X, tr.y, TrainConfig((10, 10), 0.02, 4, args.epochs, seed))
            accs.append(accuracy(net, te.X, te.y))
        print(f"{sigma:6.3f} {bayes_accuracy(sigma):7.4f} {np.mean(accs):14.4f}")


if __name__ == "__main__":
    main()

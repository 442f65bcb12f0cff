"""Repeated-trial experiments: flattening parity and pruning curves on synthetic data."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .analysis import accuracy, evaluate, paired_t
from .data import DEFAULT_SIGMA, gen_synthetic, split
from .errors import ZeroVarianceError
from .flatten import DEFAULT_L2, FlatNetwork, flatten
from .optimize import TrainConfig, train_plnn
from .prune import prune_sweep

log = logging.getLogger(__name__)


def arch_label(arch) -> str:
    """``(10, 10)`` -> ``"10x2"``, ``(50,)`` -> ``"50"``, ``(10, 5)`` -> ``"10-5"``."""
    arch = tuple(int(a) for a in arch)
    if len(arch) == 1:
        return str(arch[0])
    if len(set(arch)) == 1:
        return f"{arch[0]}x{len(arch)}"
    return "-".join(map(str, arch))


def parse_arches(text: str) -> list[tuple]:
    """``"2;5;10,10"`` -> ``[(2,), (5,), (10, 10)]``."""
    out = []
    for part in text.split(";"):
        part = part.strip()
        if part:
            out.append(tuple(int(w) for w in part.split(",")))
    if not out:
        raise ValueError("no architectures given")
    return out


@dataclass(frozen=True)
class TrialSetup:
    n: int = 5000
    train_fraction: float = 0.6
    sigma: float = DEFAULT_SIGMA
    learning_rate: float = 0.02
    batch_size: int = 4
    epochs: int = 100
    l2: float = DEFAULT_L2


def _trial_data(setup: TrialSetup, seed: int):
    data = gen_synthetic(setup.n, seed=seed, sigma=setup.sigma)
    return split(data, setup.train_fraction, seed=seed)


def _train(setup: TrialSetup, arch, seed, train):
    cfg = TrainConfig(arch, setup.learning_rate, setup.batch_size, setup.epochs, seed)
    return train_plnn(train.X, train.y, cfg)


def flatten_trial(arch, seed: int, setup: TrialSetup = TrialSetup()):
    """``(original accuracy, flat accuracy)`` on the test split, or None if every region was trivial."""
    train, test = _trial_data(setup, seed)
    net = _train(setup, arch, seed, train)
    flat = flatten(net, train.X, train.y, setup.l2)
    if not isinstance(flat, FlatNetwork):
        return None
    return accuracy(net, test.X, test.y), accuracy(flat, test.X, test.y)


def _flatten_job(args):
    return flatten_trial(*args)


def _map(fn, jobs, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


@dataclass
class FlattenRow:
    structure: str
    trials: int
    discarded: int
    original_mean: float
    flattened_mean: float
    diff_sd: float
    t: float

    def as_list(self):
        return [self.structure, self.trials, self.discarded, self.original_mean,
                self.flattened_mean, self.diff_sd, self.t]


FLATTEN_HEADER = ["structure", "trials", "discarded", "original_mean", "flattened_mean", "diff_sd", "t"]


def experiment_flatten(arches, trials: int = 25, seed: int = 0, setup: TrialSetup = TrialSetup(),
                       workers: int | None = None) -> list[FlattenRow]:
    """One summary row per architecture; trial ``k`` uses seed ``seed + k`` for data and training."""
    rows = []
    for arch in arches:
        results = _map(_flatten_job, [(arch, seed + k, setup) for k in range(trials)], workers)
        kept = [r for r in results if r is not None]
        orig = np.array([r[0] for r in kept])
        new = np.array([r[1] for r in kept])
        if len(kept) >= 2:
            try:
                st = paired_t(orig, new)
                sd, t = st.sd_diff, st.t
            except ZeroVarianceError:
                sd, t = 0.0, float("nan")
        else:
            sd, t = float("nan"), float("nan")
        om = float(orig.mean()) if kept else float("nan")
        fm = float(new.mean()) if kept else float("nan")
        rows.append(FlattenRow(arch_label(arch), len(kept), trials - len(kept), om, fm, sd, t))
        log.info("%s: %d kept, orig %.4f flat %.4f", rows[-1].structure, len(kept), om, fm)
    return rows


def prune_trial(arch, seed: int, setup: TrialSetup = TrialSetup(), halve_until=None):
    """Sweep rows ``(width, accuracy, auc)`` plus the original's test metrics; None if flattening failed."""
    train, test = _trial_data(setup, seed)
    net = _train(setup, arch, seed, train)
    flat = flatten(net, train.X, train.y, setup.l2)
    if not isinstance(flat, FlatNetwork):
        return None
    steps = prune_sweep(flat, train.X, train.y, test.X, test.y, setup.l2, halve_until=halve_until)
    return evaluate(net, test.X, test.y), [(s.width, s.accuracy, s.auc) for s in steps]


def _prune_job(args):
    return prune_trial(*args)


PRUNE_HEADER = ["structure", "trial", "width", "accuracy", "auc", "original_accuracy", "original_auc"]


def experiment_prune(arches, trials: int = 10, seed: int = 0, setup: TrialSetup = TrialSetup(),
                     halve_until=None, workers: int | None = None) -> list[list]:
    """Long-form pruning curves: one row per (architecture, trial, width)."""
    rows = []
    for arch in arches:
        jobs = [(arch, seed + k, setup, halve_until) for k in range(trials)]
        for k, res in enumerate(_map(_prune_job, jobs, workers)):
            if res is None:
                continue
            base, curve = res
            for width, acc, auc_ in curve:
                rows.append([arch_label(arch), k, width, acc, auc_, base.accuracy, base.auc])
    return rows


def with_overrides(setup: TrialSetup, **kw) -> TrialSetup:
    return replace(setup, **{k: v for k, v in kw.items() if v is not None})

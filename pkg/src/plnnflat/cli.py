"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import evaluate, identity_residuals, region_census, theorem1_agreement
from .data import DEFAULT_SIGMA, gen_synthetic, load_csv, save_csv
from .errors import DataError, NumericError, PLNNError
from .experiments import (FLATTEN_HEADER, PRUNE_HEADER, TrialSetup, experiment_flatten,
                          experiment_prune, parse_arches)
from .flatten import DEFAULT_L2, FlatNetwork, flatten
from .model import PLNN, load_model, save_model
from .optimize import TrainConfig, train_plnn
from .prune import default_probes, prune_flat, prune_sweep, verify_theorem2, write_sweep_csv
from .report import exact_interpretation, matrix_plot, pc_plot, region_plot_2d

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
log = logging.getLogger("plnnflat")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _cmdline(argv) -> str:
    return "plnnflat " + " ".join(shlex.quote(a) for a in argv)


def _arch(text: str) -> tuple:
    try:
        arch = tuple(int(w) for w in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad architecture {text!r}; expected e.g. 10,10")
    if not arch or min(arch) < 1:
        raise argparse.ArgumentTypeError(f"bad architecture {text!r}")
    return arch


def _names(text: str | None):
    return [p.strip() for p in text.split(",") if p.strip()] if text else None


def _read_model(path):
    """A FlatNetwork when the file carries provenance, otherwise a PLNN."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise DataError(f"{path}: not a model document")
    try:
        if "provenance" in doc:
            return FlatNetwork.from_dict(doc)
        return PLNN.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed model: {exc}") from exc


def _read_flat(path) -> FlatNetwork:
    model = _read_model(path)
    if isinstance(model, FlatNetwork):
        return model
    try:
        return FlatNetwork.from_plnn(model)
    except PLNNError as exc:
        raise DataError(f"{path}: not a flat network ({exc})") from exc


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def _write_csv(path, header, rows, cmd):
    with open(path, "w", newline="") as fh:
        fh.write(f"# cmd: {cmd}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


# --------------------------------------------------------------------------
# commands


def cmd_gen_data(a, cmd):
    if a.sigma <= 0:
        raise DataError("sigma must be positive")
    if a.n < 4:
        raise DataError("need at least 4 points")
    save_csv(gen_synthetic(a.n, seed=a.seed, sigma=a.sigma), a.out, comment=f"cmd: {cmd}")


def cmd_train(a, cmd):
    data = load_csv(a.data)
    cfg = TrainConfig(a.arch, a.lr, a.batch, a.epochs, a.seed)
    net = train_plnn(data.X, data.y, cfg)
    save_model(net, a.out, {"cmd": cmd, "train": cfg.to_dict()})
    m = evaluate(net, data.X, data.y)
    print(json.dumps({"train_accuracy": m.accuracy, "train_auc": m.auc, "n": m.n}))


def cmd_flatten(a, cmd):
    net = _read_model(a.model)
    data = load_csv(a.data)
    flat = flatten(net, data.X, data.y, a.l2)
    if not isinstance(flat, FlatNetwork):
        print("every observed region is trivial; flattening is not possible", file=sys.stderr)
        raise DataError("all observed regions are trivial")
    doc = flat.to_dict()
    doc["cmd"] = cmd
    _write_json(a.out, doc)
    print(json.dumps({"width": flat.width, "converged": flat.fit.converged}))


def cmd_prune(a, cmd):
    flat = _read_flat(a.model)
    data = load_csv(a.data)
    if not 1 <= a.k <= flat.width:
        raise UsageError(f"--k must be in [1, {flat.width}]")
    pruned = prune_flat(flat, data.X, data.y, a.k, a.l2)
    doc = pruned.to_dict()
    doc["cmd"] = cmd
    _write_json(a.out, doc)


def cmd_sweep(a, cmd):
    flat = _read_flat(a.model)
    train = load_csv(a.data)
    test = load_csv(a.test)
    steps = prune_sweep(flat, train.X, train.y, test.X, test.y, a.l2,
                        stop_below=a.stop_below, halve_until=a.halve_until)
    write_sweep_csv(steps, a.out, comment=f"cmd: {cmd}")


def cmd_report(a, cmd):
    model = _read_model(a.model)
    data = load_csv(a.data)
    preds = _names(a.predictors)
    out = Path(a.out)
    if a.kind == "pc":
        census = region_census(model, data.X, data.y)
        art = pc_plot(census, data.feature_names, preds, mixed_only=a.mixed_only, top_k=a.top_k)
        art.write(out, out.with_suffix(".csv"))
    elif a.kind == "matrix":
        art = matrix_plot(model, data.X, data.feature_names, preds)
        art.write(out, out.with_suffix(".csv"))
    elif a.kind == "region2d":
        region_plot_2d(model, data.X, data.y).write(out)
    else:
        census = region_census(model, data.X, data.y)
        out.write_text(f"# cmd: {cmd}\n\n" + exact_interpretation(model, census) + "\n", encoding="utf-8")


def cmd_verify(a, cmd):
    model = _read_model(a.model)
    net = model.to_plnn()
    if a.data:
        probes = load_csv(a.data).X
    else:
        probes = default_probes(net, a.probes, seed=a.seed)
    checks = _names(a.checks) or []
    unknown = set(checks) - {"identity", "theorem1", "theorem2"}
    if unknown:
        raise UsageError(f"unknown checks: {', '.join(sorted(unknown))}")
    results = {}
    if "identity" in checks:
        r = float(identity_residuals(net, probes).max())
        results["identity"] = {"max_scaled_residual": r, "pass": r < a.identity_tol}
    if "theorem1" in checks:
        ok = theorem1_agreement(net, probes)
        results["theorem1"] = {"agreement": float(ok.mean()), "pass": bool(ok.all())}
    if "theorem2" in checks:
        rep = verify_theorem2(net, probes, tol=a.tol)
        results["theorem2"] = {"pairs_checked": rep.pairs_checked, "parallel_pairs": rep.parallel_pairs,
                               "max_residual": rep.max_residual, "violations": len(rep.violations),
                               "pass": rep.ok}
    print(json.dumps(results, indent=1))
    if not all(v["pass"] for v in results.values()):
        raise NumericError("verification failed")


def _setup(a) -> TrialSetup:
    return TrialSetup(n=a.n, train_fraction=a.train_fraction, sigma=a.sigma, learning_rate=a.lr,
                      batch_size=a.batch, epochs=a.epochs, l2=a.l2)


def cmd_experiment_flatten(a, cmd):
    rows = experiment_flatten(parse_arches(a.arches), a.trials, a.seed, _setup(a), a.workers)
    _write_csv(a.out, FLATTEN_HEADER, [r.as_list() for r in rows], cmd)


def cmd_experiment_prune(a, cmd):
    rows = experiment_prune(parse_arches(a.arches), a.trials, a.seed, _setup(a), a.halve_until, a.workers)
    _write_csv(a.out, PRUNE_HEADER, rows, cmd)


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="plnnflat", description="Flatten, prune and interpret small ReLU classifiers.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("gen-data", help="synthetic XOR Gaussian data")
    s.add_argument("--n", type=int, default=5000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("train", help="train a ReLU network with Adam")
    s.add_argument("--data", required=True)
    s.add_argument("--arch", type=_arch, default=(10, 10))
    s.add_argument("--lr", type=float, default=0.02)
    s.add_argument("--batch", type=int, default=4)
    s.add_argument("--epochs", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("flatten", help="flatten a trained network on its training data")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--l2", type=float, default=DEFAULT_L2)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_flatten)

    s = sub.add_parser("prune", help="prune a flat network to a fixed width")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--l2", type=float, default=DEFAULT_L2)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_prune)

    s = sub.add_parser("sweep", help="prune a flat network down to one neuron, scoring each width")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True, help="training data used for refits")
    s.add_argument("--test", required=True)
    s.add_argument("--l2", type=float, default=DEFAULT_L2)
    s.add_argument("--stop-below", type=float, default=None, help="stop once test accuracy drops below this")
    s.add_argument("--halve-until", type=int, default=None, help="halve the width while it exceeds this")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("report", help="interpretation artifacts")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--kind", choices=["pc", "matrix", "region2d", "exact"], required=True)
    s.add_argument("--predictors", default=None, help="comma-separated feature names")
    s.add_argument("--mixed-only", action="store_true", help="pc: only regions holding both classes")
    s.add_argument("--top-k", type=int, default=None, help="pc: only the k most populated regions")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("verify", help="check the exact piecewise-linear structure of a network")
    s.add_argument("--model", required=True)
    s.add_argument("--checks", default="identity,theorem1,theorem2")
    s.add_argument("--tol", type=float, default=1e-7, help="tolerance for the boundary-intersection check")
    s.add_argument("--identity-tol", type=float, default=1e-8)
    s.add_argument("--data", default=None, help="probe points (CSV); random probes otherwise")
    s.add_argument("--probes", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_verify)

    for name, func, trials, extra in (("experiment-flatten", cmd_experiment_flatten, 25, False),
                                      ("experiment-prune", cmd_experiment_prune, 10, True)):
        s = sub.add_parser(name)
        s.add_argument("--arches", default="2;5;10;50;2,2;5,5;10,10")
        s.add_argument("--trials", type=int, default=trials)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--n", type=int, default=5000)
        s.add_argument("--train-fraction", type=float, default=0.6)
        s.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
        s.add_argument("--lr", type=float, default=0.02)
        s.add_argument("--batch", type=int, default=4)
        s.add_argument("--epochs", type=int, default=100)
        s.add_argument("--l2", type=float, default=DEFAULT_L2)
        s.add_argument("--workers", type=int, default=None)
        if extra:
            s.add_argument("--halve-until", type=int, default=None)
        s.add_argument("--out", required=True)
        s.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"plnnflat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args, _cmdline(argv))
    except UsageError as exc:
        print(f"plnnflat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"plnnflat: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, PLNNError, OSError) as exc:
        print(f"plnnflat: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"plnnflat: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"plnnflat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

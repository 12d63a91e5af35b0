"""Console entry points: export-tree and export-instances."""

from __future__ import annotations

import argparse
import pickle
import sys

import numpy as np

from .export import ExportError, ExportOptions, export_instances, export_model


def _parse_mode(text: str) -> ExportOptions:
    parts = text.split(":")
    if parts[0] == "regression" and len(parts) == 1:
        return ExportOptions(mode="regression")
    if parts[0] in ("proba", "logit") and len(parts) == 2:
        return ExportOptions(mode=parts[0], class_id=int(parts[1]))
    raise ExportError(f"bad mode {text!r} (use regression | proba:K | logit:K)")


def main_export_tree(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="export-tree", description=__doc__)
    ap.add_argument("--pickle", required=True, help="pickled fitted estimator")
    ap.add_argument("--mode", default="regression",
                    help="regression | proba:CLASS | logit:CLASS")
    ap.add_argument("--lr-fold", action="store_true", default=True,
                    help="fold the learning rate into boosted leaf values (default)")
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)
    try:
        with open(args.pickle, "rb") as fh:
            est = pickle.load(fh)
        opts = _parse_mode(args.mode)
        opts = ExportOptions(mode=opts.mode, class_id=opts.class_id,
                             lr_fold=args.lr_fold)
        export_model(est, opts, args.out)
    except (ExportError, FileNotFoundError, pickle.UnpicklingError) as exc:
        print(f"export-tree: {exc}", file=sys.stderr)
        return 3
    return 0


def main_export_instances(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="export-instances", description=__doc__)
    ap.add_argument("--csv", required=True, help="numeric CSV, no header")
    ap.add_argument("--skip-header", action="store_true")
    ap.add_argument("--sample", type=int, default=None)
    ap.add_argument("--seed", type=int, default=2025)
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)
    try:
        data = np.loadtxt(args.csv, delimiter=",", ndmin=2,
                          skiprows=1 if args.skip_header else 0)
        export_instances(data, args.out, sample=args.sample, seed=args.seed)
    except (ExportError, FileNotFoundError, ValueError) as exc:
        print(f"export-instances: {exc}", file=sys.stderr)
        return 3
    return 0

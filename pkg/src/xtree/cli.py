"""Command-line entry point: explain, rank, metrics, stability, bench.

Every output file carries a manifest header (JSON field, or a leading
'# ...' comment line in CSVs) with the command, flags, seed, version,
and per-phase wall times, so runs are reproducible from their outputs.

Exit codes: 0 success, 2 bad flags, 3 input validation, 4 numerical
guard (NaN in a result). Errors are emitted as JSON on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from ._kernels import BACKEND, backends
from .baselines import MODES, condition_estimate, linear_treeshap, linear_treeshap_v1, treeshap_k
from .gradient import banzhaf, tree_gradient, weighted_banzhaf
from .metrics import candidate_name, curves, joint_metric
from .model import (
    Ensemble,
    InputError,
    ModelFormatError,
    annotate_edges,
    eval_conditional,
    load_model,
    predict,
)
from .oracle import (
    banzhaf_omega,
    build_table,
    exact_probabilistic_value,
    exact_semivalue,
    semivalue_omega,
    shapley_omega,
)
from .quadrature import BetaParams, beta_shapley, shapley
from .ranker import RankerConfig, induce_ranking, rank
from .synthgen import SynthSpec, bench_chain, generate
from .treeprob import ProbabilisticSpec, treeprob_attribute

DEFAULT_SEED = 2025


class CliError(Exception):
    """Usage-level error (maps to exit 2)."""


def _emit_error(kind: str, message: str) -> None:
    json.dump({"error": {"type": kind, "message": message}}, sys.stderr)
    sys.stderr.write("\n")


def _manifest(args: argparse.Namespace, command: str, walls: dict) -> dict:
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    return {
        "command": command,
        "flags": flags,
        "seed": flags.get("seed"),
        "version": __version__,
        "backend": BACKEND,
        "wall_times": {k: round(v, 6) for k, v in walls.items()},
    }


def _write_json(path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=False) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _write_csv(path, manifest: dict, header: list[str], rows) -> None:
    def go(fh):
        fh.write("# " + json.dumps(manifest, sort_keys=False) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)

    if path in (None, "-"):
        go(sys.stdout)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            go(fh)


def _load_instances(path: str, n_features: int, skip_header: bool) -> np.ndarray:
    if path.endswith(".json"):
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[None, :]
    else:
        arr = np.loadtxt(path, delimiter=",", skiprows=1 if skip_header else 0,
                         dtype=np.float64, ndmin=2)
    if arr.shape[1] != n_features:
        raise InputError(f"instances have {arr.shape[1]} columns, model expects {n_features}")
    if not np.all(np.isfinite(arr)):
        raise InputError("instances contain non-finite entries")
    return arr


def _parse_method(text: str):
    parts = text.split(":")
    name = parts[0]
    if name == "shapley":
        return ("beta", 1, 1)
    if name == "banzhaf":
        return ("banzhaf",)
    if name == "wbanzhaf":
        if len(parts) != 2:
            raise CliError("wbanzhaf needs a parameter: wbanzhaf:NU")
        return ("wbanzhaf", float(parts[1]))
    if name == "beta":
        if len(parts) != 3:
            raise CliError("beta needs two parameters: beta:ALPHA:BETA")
        return ("beta", int(parts[1]), int(parts[2]))
    if name == "omega":
        if len(parts) != 2:
            raise CliError("omega needs a path: omega:OMEGA.json")
        return ("omega", parts[1])
    if name == "ranker":
        if len(parts) != 4:
            raise CliError("ranker spec is ranker:OPT:ITERS:LR")
        return ("ranker", parts[1], int(parts[2]), float(parts[3]))
    raise CliError(f"unknown method {text!r}")


def _load_omega(path: str, n: int) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        omega = np.asarray(json.load(fh), dtype=np.float64)
    if omega.shape != (n,):
        raise InputError(f"omega file must hold {n} floats")
    return omega


def _method_spec(method) -> ProbabilisticSpec:
    if method[0] == "banzhaf":
        return ProbabilisticSpec.banzhaf()
    if method[0] == "wbanzhaf":
        return ProbabilisticSpec.dirac(method[1])
    if method[0] == "beta":
        return ProbabilisticSpec.beta(method[1], method[2])
    raise CliError(f"method {method[0]} not supported by this algorithm")


def _method_omega(method, n: int) -> np.ndarray:
    if method[0] == "banzhaf":
        return banzhaf_omega(n)
    if method[0] == "wbanzhaf":
        return semivalue_omega(n, "dirac", method[1])
    if method[0] == "beta":
        if method[1:] == (1, 1):
            return shapley_omega(n)
        return semivalue_omega(n, "beta", method[1], method[2])
    raise CliError(f"method {method[0]} not supported by this algorithm")


def _explain_scores(model: Ensemble, x: np.ndarray, algo: str, method,
                    vectorized: bool, diagnostics: dict | None = None) -> np.ndarray:
    if method[0] == "omega":
        omega = _load_omega(method[1], model.n_features)
        if algo == "prob":
            phi, diag = treeprob_attribute(model, x, ProbabilisticSpec.from_omega(omega),
                                           return_diagnostics=True)
            if diagnostics is not None:
                diagnostics.update(diag)
            return phi
        if algo == "oracle":
            return exact_probabilistic_value(build_table(model, x), omega)
        raise CliError("explicit omega is supported by --algo prob or oracle only")
    if algo == "grad":
        if method[0] == "banzhaf":
            return banzhaf(model, x)
        if method[0] == "wbanzhaf":
            return weighted_banzhaf(model, x, method[1])
        if method[0] == "beta":
            return beta_shapley(model, x, BetaParams(method[1], method[2]),
                                vectorized=vectorized)
        raise CliError(f"--algo grad does not support method {method[0]!r}")
    if algo == "prob":
        phi, diag = treeprob_attribute(model, x, _method_spec(method),
                                       return_diagnostics=True)
        if diagnostics is not None:
            diagnostics.update(diag)
        return phi
    if algo == "oracle":
        return exact_probabilistic_value(build_table(model, x), _method_omega(method, model.n_features))
    if algo.startswith("linear-treeshap"):
        mode = algo.split(":", 1)[1] if ":" in algo else "fixed"
        if method[0] != "beta" or method[1:] != (1, 1):
            raise CliError("linear-treeshap computes the Shapley value only")
        return linear_treeshap(model, x, mode)
    if algo == "treeshap-k":
        if method[0] != "beta" or method[1:] != (1, 1):
            raise CliError("treeshap-k computes the Shapley value only")
        return treeshap_k(model, x)
    if algo == "v1":
        if method[0] != "beta" or method[1:] != (1, 1):
            raise CliError("v1 computes the Shapley value only")
        return linear_treeshap_v1(model, x)
    raise CliError(f"unknown algo {algo!r}")


def cmd_explain(args) -> int:
    t0 = time.perf_counter()
    model = load_model(args.model)
    rows = _load_instances(args.instance, model.n_features, args.skip_header)
    x = rows[args.row]
    method = _parse_method(args.method)
    if method[0] == "ranker":
        raise CliError("use the 'rank' subcommand for ranker scores")
    t1 = time.perf_counter()
    diagnostics: dict = {}
    scores = _explain_scores(model, x, args.algo, method, args.vectorized, diagnostics)
    t2 = time.perf_counter()
    if np.any(np.isnan(scores)):
        raise FloatingPointError("NaN in attribution result")
    unused = [i for i, used in enumerate(model.used_features()) if not used]
    payload = {
        "manifest": _manifest(args, "explain", {"load": t1 - t0, "explain": t2 - t1}),
        "algo": args.algo,
        "method": args.method,
        "scores": scores.tolist(),
        "ranking": induce_ranking(scores).tolist(),
        "unused_features": unused,
    }
    if diagnostics:
        payload["diagnostics"] = diagnostics
    _write_json(args.out, payload)
    return 0


def cmd_rank(args) -> int:
    t0 = time.perf_counter()
    model = load_model(args.model)
    rows = _load_instances(args.instance, model.n_features, args.skip_header)
    x = rows[args.row]
    cfg = RankerConfig(optimizer=args.optimizer, iterations=args.iters,
                       learning_rate=args.lr)
    res = rank(model, x, cfg, trace=args.trace is not None)
    t1 = time.perf_counter()
    if np.any(np.isnan(res.zeta)):
        raise FloatingPointError("NaN in ranker result")
    manifest = _manifest(args, "rank", {"total": t1 - t0})
    if args.trace is not None:
        _write_csv(args.trace, manifest, ["iteration", "objective"],
                   [(i + 1, f"{v!r}") for i, v in enumerate(res.trace)])
    payload = {
        "manifest": manifest,
        "zeta": res.zeta.tolist(),
        "ranking": induce_ranking(res.zeta).tolist(),
        "final_z": res.final_z.tolist(),
    }
    _write_json(args.out, payload)
    return 0


def _metrics_one(model, x, methods, vectorized):
    out = {}
    for mtext, method in methods:
        if method[0] == "ranker":
            cfg = RankerConfig(optimizer=method[1], iterations=method[2],
                               learning_rate=method[3])
            scores = rank(model, x, cfg).zeta
        else:
            scores = _explain_scores(model, x, "grad", method, vectorized)
        c = curves(model, x, induce_ranking(scores))
        out[mtext] = c
    return out


def cmd_metrics(args) -> int:
    t0 = time.perf_counter()
    model = load_model(args.model)
    rows = _load_instances(args.instances, model.n_features, args.skip_header)
    rng = np.random.default_rng(args.seed)
    if args.sample is not None and args.sample < rows.shape[0]:
        idx = rng.choice(rows.shape[0], size=args.sample, replace=False)
        rows = rows[np.sort(idx)]
    methods = [(text, _parse_method(text)) for text in args.methods.split(",")]
    threads = args.threads or int(os.environ.get("XTREE_THREADS", "1"))
    t1 = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_instance = list(pool.map(
                lambda x: _metrics_one(model, x, methods, args.vectorized), rows))
    else:
        per_instance = [_metrics_one(model, x, methods, args.vectorized) for x in rows]
    t2 = time.perf_counter()
    n = model.n_features
    manifest = _manifest(args, "metrics", {"load": t1 - t0, "evaluate": t2 - t1})

    agg_rows = []
    summary_methods = {}
    for mtext, _ in methods:
        ins = np.mean([r[mtext].insertion for r in per_instance], axis=0)
        dele = np.mean([r[mtext].deletion for r in per_instance], axis=0)
        for k in range(n):
            agg_rows.append((mtext, k + 1, f"{ins[k]!r}", f"{dele[k]!r}"))
        summary_methods[mtext] = {
            "insertion": float(ins.mean()),
            "deletion": float(dele.mean()),
            "joint": float(ins.mean() - dele.mean()),
        }
    _write_csv(args.out, manifest, ["method", "k", "insertion", "deletion"], agg_rows)

    if args.per_instance_out is not None:
        rows_pi = []
        for i, rec in enumerate(per_instance):
            for mtext, _ in methods:
                for k in range(n):
                    rows_pi.append((mtext, i, k + 1,
                                    f"{rec[mtext].insertion[k]!r}",
                                    f"{rec[mtext].deletion[k]!r}"))
        _write_csv(args.per_instance_out, manifest,
                   ["method", "instance", "k", "insertion", "deletion"], rows_pi)

    # Beta-candidate winners among the probabilistic-value methods present
    cand = [m for m in summary_methods
            if m.split(":")[0] in ("shapley", "banzhaf", "beta", "wbanzhaf")]
    winners = {}
    if cand:
        winners["beta_insertion"] = max(cand, key=lambda m: summary_methods[m]["insertion"])
        winners["beta_deletion"] = min(cand, key=lambda m: summary_methods[m]["deletion"])
        winners["beta_joint"] = max(cand, key=lambda m: summary_methods[m]["joint"])
    summary = {"manifest": manifest, "methods": summary_methods, "winners": winners,
               "n_instances": int(rows.shape[0])}
    if args.summary is not None:
        _write_json(args.summary, summary)
    return 0


def _parse_depths(text: str) -> list[int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError("--depths takes START:STOP:STEP (inclusive stop)")
    start, stop, step = (int(p) for p in parts)
    if step <= 0 or start < 1 or stop < start:
        raise CliError("bad --depths range")
    return list(range(start, stop + 1, step))


def _stability_algo(model, x, algo: str) -> np.ndarray:
    if algo == "grad":
        return shapley(model, x)
    if algo == "prob":
        return treeprob_attribute(model, x, ProbabilisticSpec.shapley())
    if algo.startswith("linear-treeshap"):
        mode = algo.split(":", 1)[1] if ":" in algo else "fixed"
        return linear_treeshap(model, x, mode)
    if algo == "treeshap-k":
        return treeshap_k(model, x)
    if algo == "v1":
        return linear_treeshap_v1(model, x)
    raise CliError(f"unknown stability algo {algo!r}")


def cmd_stability(args) -> int:
    t0 = time.perf_counter()
    depths = _parse_depths(args.depths)
    algos = args.algos.split(",")
    rows = []
    for d in depths:
        model, x = generate(SynthSpec(n_features=args.features, depth=d,
                                      shape=args.shape, seed=args.seed))
        table = build_table(model, x)
        exact = exact_probabilistic_value(table, shapley_omega(args.features))
        errs = []
        for algo in algos:
            approx = _stability_algo(model, x, algo)
            errs.append(float(np.max(np.abs(approx - exact))))
        conds = [condition_estimate("chebyshev-V", d + 1),
                 condition_estimate("unity-V", d + 1),
                 condition_estimate("oplus-solve", d + 1, gamma=1.0)]
        rows.append((d, *[f"{e!r}" for e in errs], *[f"{c!r}" for c in conds]))
    t1 = time.perf_counter()
    manifest = _manifest(args, "stability", {"total": t1 - t0})
    header = (["depth"] + [f"err_{a}" for a in algos]
              + ["cond_chebyshev_v", "cond_unity_v", "cond_oplus_solve_g1"])
    _write_csv(args.out, manifest, header, rows)
    return 0


def cmd_bench(args) -> int:
    t0 = time.perf_counter()
    sizes = [int(s) for s in args.leaves.split(",")]
    mods = backends()
    rows = []
    for n_leaves in sizes:
        model, x = bench_chain(args.features, n_leaves - 1, seed=args.seed)
        tree = model.trees[0]
        t_ann0 = time.perf_counter()
        ann = annotate_edges(tree, x)
        t_ann = time.perf_counter() - t_ann0
        rows.append(("annotate_edges", "python", n_leaves, f"{t_ann!r}"))
        z = np.full(args.features, 0.5)
        from .quadrature import _density_row, gauss_legendre
        m = min(tree.depth, args.features)
        rule = gauss_legendre(-(-m // 2))
        dens = _density_row(rule, BetaParams(1, 1))
        for name, mod in mods.items():
            g = np.zeros(args.features)
            best = None
            for _ in range(args.repeat):
                tt = time.perf_counter()
                g[:] = 0.0
                mod.tree_gradient(tree.left, tree.right, tree.parent, tree.cover,
                                  tree.value, ann.gamma, ann.label, ann.up, z, g)
                dt = time.perf_counter() - tt
                best = dt if best is None else min(best, dt)
            rows.append(("tree_gradient", name, n_leaves, f"{best!r}"))
            phi = np.zeros(args.features)
            best = None
            for _ in range(args.repeat):
                tt = time.perf_counter()
                phi[:] = 0.0
                mod.beta_quad(tree.left, tree.right, tree.parent, tree.node_depth,
                              tree.cover, tree.value, ann.gamma, ann.label, ann.up,
                              rule.nodes, dens, rule.weights, phi)
                dt = time.perf_counter() - tt
                best = dt if best is None else min(best, dt)
            rows.append(("beta_shapley_kernel", name, n_leaves, f"{best!r}"))
        best = None
        for _ in range(args.repeat):
            tt = time.perf_counter()
            treeprob_attribute(model, x, ProbabilisticSpec.shapley())
            dt = time.perf_counter() - tt
            best = dt if best is None else min(best, dt)
        rows.append(("treeprob_attribute", "numpy", n_leaves, f"{best!r}"))
    manifest = _manifest(args, "bench", {"total": time.perf_counter() - t0})
    _write_csv(args.out, manifest, ["op", "backend", "n_leaves", "seconds"], rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="xtree", description=__doc__)
    ap.add_argument("--version", action="version", version=f"xtree {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("explain", help="feature attributions for one instance")
    pe.add_argument("--model", required=True)
    pe.add_argument("--instance", required=True)
    pe.add_argument("--row", type=int, default=0)
    pe.add_argument("--skip-header", action="store_true")
    pe.add_argument("--algo", default="grad",
                    help="grad | prob | oracle | linear-treeshap[:fixed|mitigated|wellcond] | treeshap-k | v1")
    pe.add_argument("--method", default="shapley",
                    help="shapley | banzhaf | wbanzhaf:NU | beta:A:B | omega:FILE")
    pe.add_argument("--vectorized", action="store_true")
    pe.add_argument("--out", default=None)
    pe.add_argument("--seed", type=int, default=DEFAULT_SEED)
    pe.set_defaults(func=cmd_explain)

    pr = sub.add_parser("rank", help="gradient-ascent feature ranker scores")
    pr.add_argument("--model", required=True)
    pr.add_argument("--instance", required=True)
    pr.add_argument("--row", type=int, default=0)
    pr.add_argument("--skip-header", action="store_true")
    pr.add_argument("--optimizer", choices=("ga", "adam"), default="ga")
    pr.add_argument("--iters", type=int, default=100)
    pr.add_argument("--lr", type=float, default=5.0)
    pr.add_argument("--trace", default=None)
    pr.add_argument("--out", default=None)
    pr.add_argument("--seed", type=int, default=DEFAULT_SEED)
    pr.set_defaults(func=cmd_rank)

    pm = sub.add_parser("metrics", help="insertion/deletion harness over a dataset")
    pm.add_argument("--model", required=True)
    pm.add_argument("--instances", required=True)
    pm.add_argument("--skip-header", action="store_true")
    pm.add_argument("--methods", required=True,
                    help="comma list: shapley,banzhaf,beta:A:B,wbanzhaf:NU,ranker:OPT:T:LR")
    pm.add_argument("--out", required=True)
    pm.add_argument("--summary", default=None)
    pm.add_argument("--per-instance-out", default=None)
    pm.add_argument("--sample", type=int, default=None)
    pm.add_argument("--seed", type=int, default=DEFAULT_SEED)
    pm.add_argument("--threads", type=int, default=None)
    pm.add_argument("--vectorized", action="store_true", default=True)
    pm.set_defaults(func=cmd_metrics)

    ps = sub.add_parser("stability", help="depth sweep of errors vs oracle")
    ps.add_argument("--depths", default="10:60:10")
    ps.add_argument("--features", type=int, default=11)
    ps.add_argument("--shape", choices=("chain", "random-balanced"), default="chain")
    ps.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ps.add_argument("--algos",
                    default="grad,prob,linear-treeshap:fixed,treeshap-k,v1")
    ps.add_argument("--out", default=None)
    ps.set_defaults(func=cmd_stability)

    pb = sub.add_parser("bench", help="kernel wall times vs leaf count, both backends")
    pb.add_argument("--leaves", default="1000,10000,100000")
    pb.add_argument("--features", type=int, default=11)
    pb.add_argument("--repeat", type=int, default=3)
    pb.add_argument("--seed", type=int, default=DEFAULT_SEED)
    pb.add_argument("--out", default=None)
    pb.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        _emit_error("usage", str(exc))
        return 2
    except (ModelFormatError, InputError, FileNotFoundError, json.JSONDecodeError,
            ValueError) as exc:
        _emit_error("input", str(exc))
        return 3
    except FloatingPointError as exc:
        _emit_error("numerical", str(exc))
        return 4


if __name__ == "__main__":
    sys.exit(main())

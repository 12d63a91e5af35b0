"""Convert fitted scikit-learn tree models to the portable JSON schema.

Supported estimators: DecisionTreeRegressor / DecisionTreeClassifier and
GradientBoostingRegressor / GradientBoostingClassifier. One exported
model has exactly one scalar output:

* regression          - the predicted value (raw sum for boosted models)
* proba (class id)    - that class's probability at the leaf (single
                        classification trees)
* logit (class id)    - that class's raw decision value (boosted
                        classifiers); multiclass models are exported one
                        JSON per requested class id

Covers come from the toolkit's weighted per-node sample counts. For
boosted ensembles the learning rate is folded into the leaf values and
base_value carries the initial raw prediction, so the exported document
reproduces the estimator's output by plain summation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from sklearn.ensemble import GradientBoostingClassifier, GradientBoostingRegressor
from sklearn.tree import DecisionTreeClassifier, DecisionTreeRegressor

FORMAT_VERSION = 1


class ExportError(ValueError):
    pass


@dataclass(frozen=True)
class ExportOptions:
    mode: str = "regression"        # "regression" | "proba" | "logit"
    class_id: int | None = None
    lr_fold: bool = True            # bake shrinkage into boosted leaf values

    def __post_init__(self):
        if self.mode not in ("regression", "proba", "logit"):
            raise ExportError(f"unknown output mode {self.mode!r}")
        if self.mode in ("proba", "logit") and self.class_id is None:
            raise ExportError(f"mode {self.mode!r} needs a class id")


def _check_fitted(est) -> None:
    if not hasattr(est, "tree_") and not hasattr(est, "estimators_"):
        raise ExportError(f"estimator {type(est).__name__} is not fitted "
                          "or not a supported tree model")


def _tree_arrays(tree, leaf_value) -> dict:
    """Flatten one sklearn tree; leaf_value(node) -> scalar output."""
    n = tree.node_count
    left = tree.children_left.astype(int)
    right = tree.children_right.astype(int)
    feature = np.where(left < 0, -1, tree.feature).astype(int)
    threshold = np.where(left < 0, 0.0, tree.threshold).astype(float)
    cover = tree.weighted_n_node_samples.astype(float)
    value = np.array([leaf_value(v) if left[v] < 0 else 0.0 for v in range(n)])
    return {
        "left": left.tolist(),
        "right": right.tolist(),
        "feature": feature.tolist(),
        "threshold": [float(t) for t in threshold],
        "cover": [float(c) for c in cover],
        "value": [float(v) for v in value],
    }


def _class_probability(tree, class_id: int):
    def leaf_value(v: int) -> float:
        row = tree.value[v, 0, :]
        total = row.sum()
        return float(row[class_id] / total) if total > 0 else 0.0
    return leaf_value


def _export_single_tree(est, opts: ExportOptions) -> dict:
    tree = est.tree_
    if opts.mode == "regression":
        if not isinstance(est, DecisionTreeRegressor):
            raise ExportError("regression mode needs a DecisionTreeRegressor")
        def leaf_value(v):
            return float(tree.value[v, 0, 0])
    elif opts.mode == "proba":
        if not isinstance(est, DecisionTreeClassifier):
            raise ExportError("proba mode needs a DecisionTreeClassifier")
        if not 0 <= opts.class_id < est.n_classes_:
            raise ExportError(f"class id {opts.class_id} out of range")
        leaf_value = _class_probability(tree, opts.class_id)
    else:
        raise ExportError("logit mode applies to boosted classifiers")
    return {
        "format_version": FORMAT_VERSION,
        "n_features": int(est.n_features_in_),
        "base_value": 0.0,
        "trees": [_tree_arrays(tree, leaf_value)],
    }


def _raw_column(est, x_probe: np.ndarray, class_id: int | None) -> float:
    """Raw (pre-link) prediction of一the estimator at one probe row."""
    if isinstance(est, GradientBoostingRegressor):
        return float(est.predict(x_probe)[0])
    df = est.decision_function(x_probe)
    if df.ndim == 1:
        # binary: a single raw column; class 1 carries it, class 0 its negation
        raw = float(df[0])
        return raw if class_id == 1 else -raw
    return float(df[0, class_id])


def _boosted_stage_trees(est, class_id: int | None):
    stages = est.estimators_
    if stages.shape[1] == 1:
        col = 0
        flip = isinstance(est, GradientBoostingClassifier) and class_id == 0
        return [stages[m, col].tree_ for m in range(stages.shape[0])], flip
    if not 0 <= class_id < stages.shape[1]:
        raise ExportError(f"class id {class_id} out of range")
    return [stages[m, class_id].tree_ for m in range(stages.shape[0])], False


def _export_boosted(est, opts: ExportOptions) -> dict:
    if isinstance(est, GradientBoostingRegressor):
        if opts.mode != "regression":
            raise ExportError("GradientBoostingRegressor exports in regression mode")
        class_id = None
    else:
        if opts.mode != "logit":
            raise ExportError("GradientBoostingClassifier exports in logit mode")
        class_id = opts.class_id
    if not opts.lr_fold:
        raise ExportError("boosted ensembles require learning-rate folding")
    lr = float(est.learning_rate)
    trees, flip = _boosted_stage_trees(est, class_id)
    sign = -1.0 if flip else 1.0
    docs = []
    for tree in trees:
        def leaf_value(v, _t=tree):
            return sign * lr * float(_t.value[v, 0, 0])
        docs.append(_tree_arrays(tree, leaf_value))
    # the initial raw prediction is whatever残 remains after removing the
    # (folded) tree sum at a probe point; exact by linearity
    n_features = int(est.n_features_in_)
    x_probe = np.zeros((1, n_features))
    tree_sum = sum(sign * lr * float(t.predict(x_probe.astype(np.float32)).ravel()[0])
                   for t in trees)
    base_value = _raw_column(est, x_probe, class_id) - tree_sum
    return {
        "format_version": FORMAT_VERSION,
        "n_features": n_features,
        "base_value": float(base_value),
        "trees": docs,
    }


def export_model(est, opts: ExportOptions, out_path=None) -> dict:
    """Export a fitted estimator; optionally write the JSON document."""
    _check_fitted(est)
    if isinstance(est, (GradientBoostingRegressor, GradientBoostingClassifier)):
        doc = _export_boosted(est, opts)
    elif isinstance(est, (DecisionTreeRegressor, DecisionTreeClassifier)):
        doc = _export_single_tree(est, opts)
    else:
        raise ExportError(f"unsupported estimator type {type(est).__name__}")
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.write("\n")
    return doc


def export_instances(data, out_path, sample: int | None = None,
                     seed: int = 2025) -> np.ndarray:
    """Write a numeric matrix as a CSV of instances (optionally a seeded
    row subsample, the protocol's 200-instance draw)."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ExportError("instances must form a 2-d numeric matrix")
    if not np.all(np.isfinite(arr)):
        raise ExportError("non-numeric or non-finite entries in instances")
    if sample is not None and sample < arr.shape[0]:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(arr.shape[0], size=sample, replace=False))
        arr = arr[idx]
    np.savetxt(out_path, arr, delimiter=",", fmt="%.17g")
    return arr

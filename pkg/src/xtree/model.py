"""Portable tree/ensemble data model, JSON ingestion, and evaluation.

Trees are stored as parallel node arrays indexed by node id with the root
at index 0 (left/right/feature are -1 at leaves). Splits follow the
"x <= threshold goes left" convention. Every edge weight cover(child) /
cover(parent) must lie strictly in (0, 1).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ._kernels import impl as _impl

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model document violates the schema or an invariant."""


class InputError(ValueError):
    """Raised for invalid instances, subsets, or evaluation points."""


@dataclass(frozen=True)
class TreeModel:
    """One binary decision tree in flat node-array form."""

    left: np.ndarray
    right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    cover: np.ndarray
    value: np.ndarray
    # derived, filled in __post_init__
    parent: np.ndarray = field(init=False, repr=False)
    node_depth: np.ndarray = field(init=False, repr=False)
    depth: int = field(init=False)
    n_leaves: int = field(init=False)

    def __post_init__(self):
        parent, node_depth = _validate_tree(
            self.left, self.right, self.feature, self.threshold, self.cover, self.value
        )
        for arr in (self.left, self.right, self.feature, self.threshold,
                    self.cover, self.value, parent, node_depth):
            arr.setflags(write=False)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "node_depth", node_depth)
        object.__setattr__(self, "depth", int(node_depth.max()))
        object.__setattr__(self, "n_leaves", int(np.count_nonzero(self.left < 0)))

    @property
    def n_nodes(self) -> int:
        return self.left.shape[0]

    def max_feature(self) -> int:
        """Largest feature index used, or -1 for a single-leaf tree."""
        internal = self.feature[self.left >= 0]
        return int(internal.max()) if internal.size else -1


@dataclass(frozen=True)
class Ensemble:
    """A sum of trees plus a base value; a single tree is a 1-member ensemble."""

    n_features: int
    base_value: float
    trees: tuple[TreeModel, ...]

    def __post_init__(self):
        if self.n_features < 1:
            raise ModelFormatError("n_features must be a positive integer")
        if not self.trees:
            raise ModelFormatError("ensemble has no trees")
        object.__setattr__(self, "trees", tuple(self.trees))
        for k, tree in enumerate(self.trees):
            mf = tree.max_feature()
            if mf >= self.n_features:
                raise ModelFormatError(
                    f"tree {k}: feature index {mf} out of range (n_features={self.n_features})"
                )

    @property
    def depth(self) -> int:
        return max(t.depth for t in self.trees)

    def used_features(self) -> np.ndarray:
        """Boolean mask of features referenced by at least one split."""
        used = np.zeros(self.n_features, dtype=bool)
        for tree in self.trees:
            internal = tree.feature[tree.left >= 0]
            used[internal] = True
        return used


@dataclass(frozen=True)
class EdgeAnnotation:
    """Per-(tree, instance) edge cache.

    Entry v describes the edge (parent(v) -> v); index 0 (the root, which
    has no incoming edge) is filler. ``gamma`` is 0 when the instance
    violates some same-label split on the path, otherwise the product of
    inverse edge weights for that label (always > 1). ``up`` is the head
    node of the nearest strict ancestor edge with the same label, or -1.
    """

    gamma: np.ndarray
    label: np.ndarray
    up: np.ndarray


def _validate_tree(left, right, feature, threshold, cover, value):
    n = left.shape[0]
    for name, arr in (("right", right), ("feature", feature), ("threshold", threshold),
                      ("cover", cover), ("value", value)):
        if arr.shape[0] != n:
            raise ModelFormatError(f"array '{name}' length {arr.shape[0]} != {n}")
    if n == 0:
        raise ModelFormatError("tree has no nodes")
    if not np.all(np.isfinite(cover)) or np.any(cover <= 0):
        bad = int(np.flatnonzero(~np.isfinite(cover) | (cover <= 0))[0])
        raise ModelFormatError(f"node {bad}: cover must be positive and finite")
    parent = np.full(n, -1, dtype=np.int64)
    node_depth = np.zeros(n, dtype=np.int64)
    n_leaves = 0
    for v in range(n):
        a, b = int(left[v]), int(right[v])
        if (a < 0) != (b < 0):
            raise ModelFormatError(f"node {v}: must have both children or neither")
        if a < 0:
            n_leaves += 1
            if feature[v] != -1:
                raise ModelFormatError(f"node {v}: leaf must carry feature = -1")
            if not math.isfinite(value[v]):
                raise ModelFormatError(f"node {v}: leaf value must be finite")
            continue
        if feature[v] < 0:
            raise ModelFormatError(f"node {v}: internal node needs a feature index")
        if not math.isfinite(threshold[v]):
            raise ModelFormatError(f"node {v}: threshold must be finite")
        if a == b or not (0 <= a < n) or not (0 <= b < n):
            raise ModelFormatError(f"node {v}: invalid child ids ({a}, {b})")
        for c in (a, b):
            if c == 0:
                raise ModelFormatError(f"node {v}: root listed as a child")
            if parent[c] != -1:
                raise ModelFormatError(f"node {c}: has more than one parent")
            parent[c] = v
            if not cover[c] < cover[v]:
                raise ModelFormatError(
                    f"node {c}: cover monotonicity violation ({cover[c]} >= {cover[v]})"
                )
    if n != 2 * n_leaves - 1:
        raise ModelFormatError(f"{n} nodes with {n_leaves} leaves: not a full binary tree")
    # full traversal from the root must reach every node exactly once
    seen = 0
    stack = [0]
    while stack:
        v = stack.pop()
        seen += 1
        if left[v] >= 0:
            for c in (int(left[v]), int(right[v])):
                node_depth[c] = node_depth[v] + 1
                stack.append(c)
    if seen != n:
        orphan = int(np.flatnonzero((parent == -1) & (np.arange(n) != 0))[0])
        raise ModelFormatError(f"node {orphan}: orphan or cyclic node (unreachable from root)")
    return parent, node_depth


def _tree_from_arrays(doc: dict, k: int) -> TreeModel:
    keys = ("left", "right", "feature", "threshold", "cover", "value")
    missing = [key for key in keys if key not in doc]
    if missing:
        raise ModelFormatError(f"tree {k}: missing arrays {missing}")
    try:
        left = np.asarray(doc["left"], dtype=np.int64)
        right = np.asarray(doc["right"], dtype=np.int64)
        feature = np.asarray(doc["feature"], dtype=np.int64)
        threshold = np.asarray(doc["threshold"], dtype=np.float64)
        cover = np.asarray(doc["cover"], dtype=np.float64)
        value = np.asarray(doc["value"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"tree {k}: non-numeric node arrays ({exc})") from exc
    if left.ndim != 1:
        raise ModelFormatError(f"tree {k}: node arrays must be one-dimensional")
    try:
        return TreeModel(left, right, feature, threshold, cover, value)
    except ModelFormatError as exc:
        raise ModelFormatError(f"tree {k}: {exc}") from exc


def load_model(source) -> Ensemble:
    """Load and validate a model document.

    ``source`` may be a parsed dict, JSON bytes/bytearray, or a filesystem
    path. Every TreeModel invariant is checked; violations raise
    ModelFormatError naming the offending node.
    """
    if isinstance(source, (bytes, bytearray)):
        doc = json.loads(source.decode("utf-8"))
    elif isinstance(source, dict):
        doc = source
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            doc = json.load(fh)
    else:
        raise ModelFormatError(f"unsupported model source type: {type(source)!r}")
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version: {doc.get('format_version')!r}")
    for key in ("n_features", "base_value", "trees"):
        if key not in doc:
            raise ModelFormatError(f"missing top-level field '{key}'")
    n_features = doc["n_features"]
    if not isinstance(n_features, int) or isinstance(n_features, bool) or n_features < 1:
        raise ModelFormatError("n_features must be a positive integer")
    base_value = float(doc["base_value"])
    if not math.isfinite(base_value):
        raise ModelFormatError("base_value must be finite")
    trees_doc = doc["trees"]
    if not isinstance(trees_doc, list) or not trees_doc:
        raise ModelFormatError("'trees' must be a non-empty list")
    trees = tuple(_tree_from_arrays(t, k) for k, t in enumerate(trees_doc))
    return Ensemble(n_features=n_features, base_value=base_value, trees=trees)


def to_document(model: Ensemble) -> dict:
    """Inverse of load_model: the plain-JSON form of an ensemble."""
    return {
        "format_version": FORMAT_VERSION,
        "n_features": model.n_features,
        "base_value": model.base_value,
        "trees": [
            {
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "cover": t.cover.tolist(),
                "value": t.value.tolist(),
            }
            for t in model.trees
        ],
    }


def dump_model(model: Ensemble, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_document(model), fh, sort_keys=True)
        fh.write("\n")


def as_instance(model: Ensemble, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise InputError(f"instance has shape {x.shape}, expected ({model.n_features},)")
    if not np.all(np.isfinite(x)):
        raise InputError("instance entries must be finite")
    return x


def _subset_mask(model: Ensemble, subset) -> np.ndarray:
    mask = np.zeros(model.n_features, dtype=np.uint8)
    for i in subset:
        i = int(i)
        if not 0 <= i < model.n_features:
            raise InputError(f"feature index {i} out of range")
        mask[i] = 1
    return mask


def _check_z(model: Ensemble, z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (model.n_features,):
        raise InputError(f"z has shape {z.shape}, expected ({model.n_features},)")
    if np.any(z < 0.0) or np.any(z > 1.0) or not np.all(np.isfinite(z)):
        raise InputError("z must lie componentwise in [0, 1]")
    return z


def predict(model: Ensemble, x) -> float:
    """Full-feature routing: base value plus each tree's reached leaf."""
    x = as_instance(model, x)
    total = model.base_value
    for tree in model.trees:
        v = 0
        while tree.left[v] >= 0:
            f = tree.feature[v]
            v = tree.left[v] if x[f] <= tree.threshold[v] else tree.right[v]
        total += tree.value[v]
    return float(total)


def eval_conditional(model: Ensemble, x, subset) -> float:
    """f_x(S): follow x on features in S, cover-average the rest."""
    x = as_instance(model, x)
    mask = subset if isinstance(subset, np.ndarray) and subset.dtype == np.uint8 \
        else _subset_mask(model, subset)
    total = model.base_value
    for tree in model.trees:
        total += _impl.eval_conditional(
            tree.left, tree.right, tree.feature, tree.threshold,
            tree.cover, tree.value, mask, x,
        )
    return float(total)


def annotate_edges(tree: TreeModel, x) -> EdgeAnnotation:
    """One root-to-leaves pass filling gamma, label, up for each edge."""
    n = tree.n_nodes
    gamma = np.zeros(n, dtype=np.float64)
    label = np.full(n, -1, dtype=np.int64)
    upn = np.full(n, -1, dtype=np.int64)
    if tree.left[0] < 0:
        return EdgeAnnotation(gamma, label, upn)
    left, right = tree.left, tree.right
    feature, threshold, cover = tree.feature, tree.threshold, tree.cover
    # per-feature stack of (node, gamma) for internal edges on the current path
    stacks: dict[int, list[tuple[int, float]]] = {}
    todo = [(0, False)]
    while todo:
        v, leaving = todo.pop()
        if leaving:
            stacks[feature[tree.parent[v]]].pop()
            continue
        if v != 0:
            u = tree.parent[v]
            lab = int(feature[u])
            label[v] = lab
            sat = (x[lab] <= threshold[u]) if v == left[u] else (x[lab] > threshold[u])
            g = cover[u] / cover[v] if sat else 0.0
            st = stacks.get(lab)
            if st:
                upn[v], g_anc = st[-1]
                g *= g_anc
            gamma[v] = g
            if left[v] >= 0:
                st = stacks.setdefault(lab, [])
                st.append((v, g))
                todo.append((v, True))
        if left[v] >= 0:
            todo.append((int(right[v]), False))
            todo.append((int(left[v]), False))
    gamma.setflags(write=False)
    label.setflags(write=False)
    upn.setflags(write=False)
    return EdgeAnnotation(gamma, label, upn)


def eval_multilinear(model: Ensemble, x, z) -> float:
    """Multilinear extension of f_x evaluated at z in [0, 1]^N."""
    x = as_instance(model, x)
    z = _check_z(model, z)
    total = model.base_value
    for tree in model.trees:
        ann = annotate_edges(tree, x)
        total += _impl.eval_multilinear(
            tree.left, tree.right, tree.parent, tree.cover, tree.value,
            ann.gamma, ann.label, ann.up, z,
        )
    return float(total)

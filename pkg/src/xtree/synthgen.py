"""Seeded synthetic trees and instances for oracle tests and depth sweeps.

The chain shape is the conditioning stress geometry: one long spine whose
features cycle, so per-path polynomial degree is maximal and same-feature
ancestors occur. Covers are drawn as integer splits (both children >= 1,
strict decrease) and snapped so every cover is exactly representable as a
float even when the root cover is astronomically large.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Ensemble, InputError, TreeModel


@dataclass(frozen=True)
class SynthSpec:
    n_features: int
    depth: int
    shape: str = "chain"            # "chain" | "random-balanced"
    cover_root: int | None = None   # defaults to 2^depth
    seed: int = 0

    def __post_init__(self):
        if self.n_features < 1 or self.depth < 1:
            raise InputError("n_features and depth must be >= 1")
        if self.shape not in ("chain", "random-balanced"):
            raise InputError(f"unknown shape {self.shape!r}")


def _snap(c: int) -> int:
    """Round an integer down to the nearest float64-exact integer."""
    shift = max(0, c.bit_length() - 52)
    return (c >> shift) << shift


def _split_cover(c: int, rng, lo: float, hi: float,
                 min_first: int = 1, min_second: int = 1) -> tuple[int, int]:
    # first child gets a fraction in [lo, hi] of c, clamped so both sides
    # meet their minima, snapped to a float-exact integer (snapping only
    # shrinks, and the minima are powers of two, so it cannot break them)
    m = int(c * rng.uniform(lo, hi))
    m = max(min_first, min(c - min_second, m))
    m = _snap(m)
    if m < min_first or c - m < min_second:
        raise InputError("unrealizable cover constraint")
    return m, c - m


class _Builder:
    def __init__(self):
        self.left, self.right, self.feature = [], [], []
        self.threshold, self.cover, self.value = [], [], []

    def add(self, cover: float) -> int:
        self.left.append(-1)
        self.right.append(-1)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.cover.append(cover)
        self.value.append(0.0)
        return len(self.left) - 1

    def make_split(self, v: int, feature: int, threshold: float, a: int, b: int):
        self.left[v], self.right[v] = a, b
        self.feature[v] = feature
        self.threshold[v] = threshold

    def make_leaf(self, v: int, value: float):
        self.value[v] = value

    def tree(self) -> TreeModel:
        return TreeModel(
            np.array(self.left, dtype=np.int64),
            np.array(self.right, dtype=np.int64),
            np.array(self.feature, dtype=np.int64),
            np.array(self.threshold),
            np.array(self.cover),
            np.array(self.value),
        )


def generate(spec: SynthSpec) -> tuple[Ensemble, np.ndarray]:
    """Deterministic (ensemble, instance) pair for the given spec."""
    rng = np.random.default_rng(spec.seed)
    # headroom over the hard 2^depth floor keeps split ratios free
    cover_root = spec.cover_root if spec.cover_root is not None else 2 ** (spec.depth + 8)
    if cover_root < 2 ** spec.depth:
        raise InputError(
            f"unrealizable cover constraint: cover_root={cover_root} < 2^depth"
        )
    x = rng.uniform(0.0, 1.0, size=spec.n_features)
    b = _Builder()
    if spec.shape == "chain":
        _grow_chain(b, rng, spec, _snap(int(cover_root)), x)
    else:
        root = b.add(float(_snap(int(cover_root))))
        _grow_balanced(b, rng, spec, root, _snap(int(cover_root)), spec.depth)
    tree = b.tree()
    return Ensemble(n_features=spec.n_features, base_value=0.0, trees=(tree,)), x


def _grow_chain(b: _Builder, rng, spec: SynthSpec, cover_root: int, x) -> None:
    # Spine criteria are biased towards being satisfied by x (p ~ 0.8) so
    # the per-feature gamma products actually accumulate down the spine;
    # the off-spine leaf edges then carry the violated regime.
    v = b.add(float(cover_root))
    c = cover_root
    for k in range(spec.depth):
        feature = k % spec.n_features
        remaining = spec.depth - k - 1
        if remaining == 0:
            threshold = float(rng.uniform(0.0, 1.0))
            ca, cb = _split_cover(c, rng, 0.35, 0.65)
            a, bb = b.add(float(ca)), b.add(float(cb))
            b.make_split(v, feature, threshold, a, bb)
            b.make_leaf(a, float(rng.uniform(0.0, 1.0)))
            b.make_leaf(bb, float(rng.uniform(0.0, 1.0)))
            return
        satisfied = bool(rng.random() < 0.8)
        spine_on_left = bool(rng.integers(0, 2) == 0)
        xf = x[feature]
        if spine_on_left == satisfied:
            threshold = float(rng.uniform(xf, 1.0))  # x_f <= tau
        else:
            threshold = float(rng.uniform(0.0, xf))  # x_f > tau
        spine_c, leaf_c = _split_cover(c, rng, 0.4, 0.55, 2 ** remaining)
        spine, leaf = b.add(float(spine_c)), b.add(float(leaf_c))
        if spine_on_left:
            b.make_split(v, feature, threshold, spine, leaf)
        else:
            b.make_split(v, feature, threshold, leaf, spine)
        b.make_leaf(leaf, float(rng.uniform(0.0, 1.0)))
        v, c = spine, spine_c


def _grow_balanced(b: _Builder, rng, spec: SynthSpec, v: int, c: int, depth_left: int) -> None:
    if depth_left == 0 or c < 2:
        b.make_leaf(v, float(rng.uniform(0.0, 1.0)))
        return
    feature = int(rng.integers(0, spec.n_features))
    threshold = float(rng.uniform(0.0, 1.0))
    keep = 2 ** (depth_left - 1)
    ca, cb = _split_cover(c, rng, 0.35, 0.65, keep, keep)
    a, bb = b.add(float(ca)), b.add(float(cb))
    b.make_split(v, feature, threshold, a, bb)
    _grow_balanced(b, rng, spec, a, ca, depth_left - 1)
    _grow_balanced(b, rng, spec, bb, cb, depth_left - 1)


def bench_chain(n_features: int, depth: int, seed: int = 0) -> tuple[Ensemble, np.ndarray]:
    """Deep chain with geometrically decaying real covers.

    Exists for the timing harness: integer covers need cover_root >=
    2^depth, which leaves float range near depth 1000, so wall-time runs
    at 10^5 leaves use this real-covered variant instead.
    """
    rng = np.random.default_rng(seed)
    decay = min(0.5, 600.0 / (depth + 1))
    b = _Builder()
    v = b.add(1.0)
    c = 1.0
    for k in range(depth):
        feature = k % n_features
        threshold = float(rng.uniform(0.0, 1.0))
        spine_c = c * float(np.exp(-decay))
        leaf_c = c - spine_c
        if k == depth - 1:
            a, bb = b.add(spine_c), b.add(leaf_c)
            b.make_split(v, feature, threshold, a, bb)
            b.make_leaf(a, float(rng.uniform(0.0, 1.0)))
            b.make_leaf(bb, float(rng.uniform(0.0, 1.0)))
            break
        spine, leaf = b.add(spine_c), b.add(leaf_c)
        if rng.integers(0, 2) == 0:
            b.make_split(v, feature, threshold, spine, leaf)
        else:
            b.make_split(v, feature, threshold, leaf, spine)
        b.make_leaf(leaf, float(rng.uniform(0.0, 1.0)))
        v, c = spine, spine_c
    tree = b.tree()
    x = rng.uniform(0.0, 1.0, size=n_features)
    return Ensemble(n_features=n_features, base_value=0.0, trees=(tree,)), x

"""O(L)-time gradients of the multilinear extension.

The gradient at 0.5 * 1 is the Banzhaf value; at nu * 1 the weighted
Banzhaf value with parameter nu.
"""

from __future__ import annotations

import numpy as np

from ._kernels import impl as _impl
from .model import Ensemble, _check_z, annotate_edges, as_instance


def tree_gradient(model: Ensemble, x, z) -> np.ndarray:
    """Gradient of the multilinear extension of f_x at z, summed over trees.

    Features absent from every tree get gradient 0. Entries are exact up
    to rounding even at vertices where z_i = 1 meets a violated split
    (the degenerate-division corner is handled inside the kernel).
    """
    x = as_instance(model, x)
    z = _check_z(model, z)
    g = np.zeros(model.n_features)
    for tree in model.trees:
        ann = annotate_edges(tree, x)
        _impl.tree_gradient(
            tree.left, tree.right, tree.parent, tree.cover, tree.value,
            ann.gamma, ann.label, ann.up, z, g,
        )
    return g


def banzhaf(model: Ensemble, x) -> np.ndarray:
    """Banzhaf value: the gradient at z = 0.5 * 1."""
    return tree_gradient(model, x, np.full(model.n_features, 0.5))


def weighted_banzhaf(model: Ensemble, x, nu: float) -> np.ndarray:
    """Weighted Banzhaf value: the gradient at z = nu * 1."""
    if not 0.0 <= nu <= 1.0:
        raise ValueError("nu must lie in [0, 1]")
    return tree_gradient(model, x, np.full(model.n_features, float(nu)))

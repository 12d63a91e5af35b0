import numpy as np
import pytest

from xtree.model import Ensemble, TreeModel, load_model
from xtree.synthgen import SynthSpec, generate

# 7-node example tree: root splits feature 0 (cover 25), its left child
# splits feature 1 (cover 22), whose right child splits feature 2
# (cover 20); leaves carry (cover, value) = (3, 0.1), (2, 0.3),
# (10, 0.8), (10, 0.7).
FIGURE_DOC = {
    "format_version": 1,
    "n_features": 3,
    "base_value": 0.0,
    "trees": [{
        "left":      [1, 3, -1, -1, 5, -1, -1],
        "right":     [2, 4, -1, -1, 6, -1, -1],
        "feature":   [0, 1, -1, -1, 2, -1, -1],
        "threshold": [0.5, 0.5, 0.0, 0.0, 0.5, 0.0, 0.0],
        "cover":     [25.0, 22.0, 3.0, 2.0, 20.0, 10.0, 10.0],
        "value":     [0.0, 0.0, 0.1, 0.3, 0.0, 0.8, 0.7],
    }],
}

# x routes left at the root, right at node 1, left at node 4 -> leaf 0.8
FIGURE_X = np.array([0.3, 0.7, 0.2])

# all eight conditional values, frozen from hand-expanding the recursion
# (cross-checked by the subset-enumeration oracle); bitmask indexed
FIGURE_TABLE = {
    0b000: 15.9 / 25,          # 0.636
    0b001: 15.6 / 22,          # follow feature 0
    0b010: 16.8 / 25,
    0b011: 0.75,
    0b100: 16.9 / 25,          # 0.676
    0b101: 16.6 / 22,
    0b110: 17.9 / 25,
    0b111: 0.8,
}

# marginals of feature 2 over subsets of {0, 1}, and the frozen values
FIGURE_MARGINALS_K = (1 / 25, 1 / 22, 1.1 / 25, 0.05)
FIGURE_BANZHAF_K = sum(FIGURE_MARGINALS_K) / 4                      # 0.0448636...
FIGURE_SHAPLEY_K = (FIGURE_MARGINALS_K[0] / 3 + FIGURE_MARGINALS_K[1] / 6
                    + FIGURE_MARGINALS_K[2] / 6 + FIGURE_MARGINALS_K[3] / 3)


@pytest.fixture(scope="session")
def figure_model() -> Ensemble:
    return load_model(FIGURE_DOC)


@pytest.fixture(scope="session")
def figure_x() -> np.ndarray:
    return FIGURE_X.copy()


def single_leaf_model(value: float = 0.7, cover: float = 10.0, n_features: int = 2) -> Ensemble:
    tree = TreeModel(
        np.array([-1]), np.array([-1]), np.array([-1]),
        np.array([0.0]), np.array([cover]), np.array([value]),
    )
    return Ensemble(n_features=n_features, base_value=0.0, trees=(tree,))


def depth1_model(left_value=1.0, right_value=0.0, left_cover=50.0,
                 right_cover=50.0, n_features=1, feature=0) -> Ensemble:
    tree = TreeModel(
        np.array([1, -1, -1]), np.array([2, -1, -1]),
        np.array([feature, -1, -1]), np.array([0.5, 0.0, 0.0]),
        np.array([left_cover + right_cover, left_cover, right_cover]),
        np.array([0.0, left_value, right_value]),
    )
    return Ensemble(n_features=n_features, base_value=0.0, trees=(tree,))


def random_corpus(count: int, max_features: int = 8, max_depth: int = 8,
                  seed: int = 0, min_features: int = 2, min_depth: int = 2):
    """Mixed chain/balanced corpus of (model, instance) pairs."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(min_features, max_features + 1))
        d = int(rng.integers(min_depth, max_depth + 1))
        shape = "chain" if k % 2 else "random-balanced"
        out.append(generate(SynthSpec(n_features=n, depth=d, shape=shape,
                                      seed=int(rng.integers(0, 2 ** 31)))))
    return out


def two_tree_ensemble(model: Ensemble, base_value: float = 0.0) -> Ensemble:
    return Ensemble(n_features=model.n_features, base_value=base_value,
                    trees=model.trees * 2)

"""Tree-model feature attribution: probabilistic values, gradient ranking,
historical baselines, brute-force oracles, and an insertion/deletion harness."""

from ._kernels import BACKEND
from .baselines import condition_estimate, linear_treeshap, linear_treeshap_v1, treeshap_k
from .gradient import banzhaf, tree_gradient, weighted_banzhaf
from .metrics import RankingCurves, curves, joint_metric, select_beta_candidate
from .model import (
    EdgeAnnotation,
    Ensemble,
    InputError,
    ModelFormatError,
    TreeModel,
    annotate_edges,
    dump_model,
    eval_conditional,
    eval_multilinear,
    load_model,
    predict,
    to_document,
)
from .quadrature import BetaParams, QuadratureRule, beta_shapley, gauss_legendre, shapley
from .ranker import RankerConfig, induce_ranking, rank, select_learning_rate, symmetric_gradient
from .synthgen import SynthSpec, bench_chain, generate
from .treeprob import ProbabilisticSpec, UnityBasis, treeprob_attribute, unity_basis

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BetaParams",
    "EdgeAnnotation",
    "Ensemble",
    "InputError",
    "ModelFormatError",
    "ProbabilisticSpec",
    "QuadratureRule",
    "RankerConfig",
    "RankingCurves",
    "SynthSpec",
    "TreeModel",
    "UnityBasis",
    "annotate_edges",
    "banzhaf",
    "bench_chain",
    "beta_shapley",
    "condition_estimate",
    "curves",
    "dump_model",
    "eval_conditional",
    "eval_multilinear",
    "gauss_legendre",
    "generate",
    "induce_ranking",
    "joint_metric",
    "linear_treeshap",
    "linear_treeshap_v1",
    "load_model",
    "predict",
    "rank",
    "select_beta_candidate",
    "select_learning_rate",
    "shapley",
    "symmetric_gradient",
    "to_document",
    "tree_gradient",
    "treeprob_attribute",
    "treeshap_k",
    "unity_basis",
    "weighted_banzhaf",
    "__version__",
]

"""Feature scores from averaged gradients of the symmetrized objective.

Projected gradient ascent (or ADAM) on 0.5 * (fbar(z) - fbar(1 - z)),
starting at z = 0.5 * 1; the returned score vector is the running mean of
the symmetric gradients, which at T = 1 is exactly the Banzhaf value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gradient import tree_gradient
from .model import Ensemble, InputError, _check_z, as_instance, eval_multilinear

LR_CANDIDATES = (0.1, 0.5, 1.0, 5.0, 10.0)


@dataclass(frozen=True)
class RankerConfig:
    optimizer: str = "ga"            # "ga" or "adam"
    iterations: int = 100
    learning_rate: float = 5.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.optimizer not in ("ga", "adam"):
            raise InputError(f"unknown optimizer {self.optimizer!r}")
        if self.iterations < 1:
            raise InputError("iterations must be >= 1")
        if self.learning_rate <= 0:
            raise InputError("learning rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise InputError("ADAM betas must lie in [0, 1)")


@dataclass
class RankResult:
    zeta: np.ndarray
    final_z: np.ndarray
    trace: list = field(default_factory=list)


def symmetric_gradient(model: Ensemble, x, z) -> np.ndarray:
    """0.5 * (grad fbar(z) + grad fbar(1 - z)).

    This is the z-gradient of 0.5 * (fbar(z) - fbar(1 - z)): the inner
    chain sign of the second term makes both summands add.
    """
    z = _check_z(model, z)
    return 0.5 * (tree_gradient(model, x, z) + tree_gradient(model, x, 1.0 - z))


def _objective(model, x, z) -> float:
    return 0.5 * (eval_multilinear(model, x, z) - eval_multilinear(model, x, 1.0 - z))


def rank(model: Ensemble, x, cfg: RankerConfig, trace: bool = False) -> RankResult:
    """Run T iterations of projected ascent; zeta is the mean gradient.

    With trace=True the objective 0.5 * (fbar(z) - fbar(1-z)) is recorded
    after every step.
    """
    x = as_instance(model, x)
    n = model.n_features
    z = np.full(n, 0.5)
    zeta = np.zeros(n)
    trace_vals: list[float] = []
    if cfg.optimizer == "ga":
        for t in range(1, cfg.iterations + 1):
            g = symmetric_gradient(model, x, z)
            z = np.clip(z + cfg.learning_rate * g, 0.0, 1.0)
            zeta = ((t - 1) / t) * zeta + (1.0 / t) * g
            if trace:
                trace_vals.append(_objective(model, x, z))
    else:
        m = np.zeros(n)
        v = np.zeros(n)
        for t in range(1, cfg.iterations + 1):
            g = symmetric_gradient(model, x, z)
            zeta = ((t - 1) / t) * zeta + (1.0 / t) * g
            m = cfg.adam_beta1 * m + (1 - cfg.adam_beta1) * g
            v = cfg.adam_beta2 * v + (1 - cfg.adam_beta2) * g * g
            m_hat = m / (1 - cfg.adam_beta1 ** t)
            v_hat = v / (1 - cfg.adam_beta2 ** t)
            z = np.clip(z + cfg.learning_rate * m_hat / np.sqrt(v_hat + cfg.adam_eps), 0.0, 1.0)
            if trace:
                trace_vals.append(_objective(model, x, z))
    return RankResult(zeta=zeta, final_z=z, trace=trace_vals)


def induce_ranking(scores) -> np.ndarray:
    """Stable descending sort; ties broken by ascending feature index."""
    scores = np.asarray(scores, dtype=np.float64)
    if np.any(np.isnan(scores)):
        raise InputError("scores contain NaN")
    return np.argsort(-scores, kind="stable")


def select_learning_rate(model: Ensemble, x, iterations: int = 100,
                         candidates=LR_CANDIDATES, optimizer: str = "ga",
                         tol: float = 1e-9) -> float:
    """Largest candidate step size whose traced objective never decreases.

    Falls back to the smallest candidate when none converges cleanly.
    """
    for eps in sorted(candidates, reverse=True):
        cfg = RankerConfig(optimizer=optimizer, iterations=iterations, learning_rate=eps)
        res = rank(model, x, cfg, trace=True)
        diffs = np.diff(np.asarray(res.trace))
        if res.trace and np.all(diffs >= -tol):
            return eps
    return min(candidates)

"""Brute-force ground truth on small feature counts.

Builds the full 2^N table of conditional values and evaluates
probabilistic values, semi-values, and multilinear gradients directly
from their defining sums. Everything here is deliberately simple; it is
the reference the fast algorithms are tested against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import Ensemble, InputError, as_instance, eval_conditional, predict

N_CAP = 24
RATIONAL_CAP = 10


@dataclass(frozen=True)
class SetValueTable:
    """f_x(S) for every subset, indexed by bitmask (bit i set <=> i in S)."""

    n: int
    values: np.ndarray

    def __getitem__(self, mask: int) -> float:
        return float(self.values[mask])


def build_table(model: Ensemble, x) -> SetValueTable:
    """Evaluate f_x on every subset of [N]; guarded to N <= 24."""
    n = model.n_features
    if n > N_CAP:
        raise InputError(f"N={n} over oracle cap ({N_CAP})")
    x = as_instance(model, x)
    values = np.empty(1 << n)
    mask_arr = np.zeros(n, dtype=np.uint8)
    # Gray-code order; each table entry is still computed from scratch
    for i in range(1 << n):
        mask = i ^ (i >> 1)
        for j in range(n):
            mask_arr[j] = (mask >> j) & 1
        values[mask] = eval_conditional(model, x, mask_arr)
    values.setflags(write=False)
    return SetValueTable(n=n, values=values)


def _popcounts(n: int) -> np.ndarray:
    masks = np.arange(1 << n, dtype=np.int64)
    counts = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        counts += (masks >> i) & 1
    return counts


def exact_probabilistic_value(table: SetValueTable, omega) -> np.ndarray:
    """Direct double sum: phi_i = sum over S not containing i of
    omega[|S|+1] * (f(S u i) - f(S))."""
    n = table.n
    omega = np.asarray(omega, dtype=np.float64)
    check_omega(omega, n)
    values = table.values
    masks = np.arange(1 << n, dtype=np.int64)
    counts = _popcounts(n)
    phi = np.zeros(n)
    for i in range(n):
        bit = 1 << i
        off = masks[(masks & bit) == 0]
        phi[i] = float(np.dot(omega[counts[off]], values[off | bit] - values[off]))
    return phi


def check_omega(omega: np.ndarray, n: int) -> None:
    if omega.shape != (n,):
        raise InputError(f"omega must have length {n}")
    if np.any(omega < 0):
        raise InputError("omega must be non-negative")
    total = sum(math.comb(n - 1, k) * omega[k] for k in range(n))
    if abs(total - 1.0) > 1e-10:
        raise InputError(f"omega normalization violated: sum C(N-1,k-1)*omega_k = {total}")


def exact_gradient(table: SetValueTable, z) -> np.ndarray:
    """Gradient of the multilinear extension straight from its defining sum."""
    n = table.n
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (n,) or np.any(z < 0) or np.any(z > 1):
        raise InputError("z must lie componentwise in [0, 1]")
    values = table.values
    masks = np.arange(1 << n)
    bits = (masks[:, None] >> np.arange(n)) & 1  # (2^n, n)
    w = np.where(bits.astype(bool), z, 1.0 - z)  # per-feature factors
    g = np.zeros(n)
    for i in range(n):
        cols = [j for j in range(n) if j != i]
        weights = w[:, cols].prod(axis=1)
        off = (masks & (1 << i)) == 0
        sub = masks[off]
        g[i] = float(np.dot(weights[off], values[sub | (1 << i)] - values[sub]))
    return g


def semivalue_omega(n: int, measure: str, *params) -> np.ndarray:
    """The omega vector of a Dirac(nu) or Beta(alpha, beta) semi-value.

    omega_k = integral of t^(k-1) (1-t)^(N-k) d mu(t), closed forms only.
    """
    omega = np.empty(n)
    if measure == "dirac":
        (nu,) = params
        if not 0.0 <= nu <= 1.0:
            raise InputError("Dirac parameter must lie in [0, 1]")
        for k in range(1, n + 1):
            omega[k - 1] = nu ** (k - 1) * (1.0 - nu) ** (n - k)
    elif measure == "beta":
        alpha, beta = params
        if alpha < 1 or beta < 1 or alpha != int(alpha) or beta != int(beta):
            raise InputError("Beta parameters must be positive integers")
        # density proportional to t^(beta-1) (1-t)^(alpha-1)
        log_b = math.lgamma(beta) + math.lgamma(alpha) - math.lgamma(alpha + beta)
        for k in range(1, n + 1):
            log_num = (math.lgamma(k - 1 + beta) + math.lgamma(n - k + alpha)
                       - math.lgamma(n - 1 + alpha + beta))
            omega[k - 1] = math.exp(log_num - log_b)
    else:
        raise InputError(f"unknown semi-value measure: {measure!r}")
    return omega


def shapley_omega(n: int) -> np.ndarray:
    """omega_k = (k-1)! (N-k)! / N! (equals Beta(1, 1))."""
    return np.array([
        math.factorial(k - 1) * math.factorial(n - k) / math.factorial(n)
        for k in range(1, n + 1)
    ])


def banzhaf_omega(n: int) -> np.ndarray:
    return np.full(n, 2.0 ** (1 - n))


def exact_semivalue(table: SetValueTable, measure: str, *params) -> np.ndarray:
    """Build omega from the measure, then the direct double sum."""
    return exact_probabilistic_value(table, semivalue_omega(table.n, measure, *params))


# -- exact-rational path -------------------------------------------------

def _to_fraction(v: float) -> Fraction:
    return Fraction(v).limit_denominator(10 ** 12) if v != int(v) else Fraction(int(v))


def build_table_rational(model: Ensemble, x) -> list[Fraction]:
    """SetValueTable with Fraction arithmetic (N <= 10).

    Covers and leaf values are taken as exact rationals, so probabilistic
    values computed from this table carry no floating-point error at all.
    """
    n = model.n_features
    if n > RATIONAL_CAP:
        raise InputError(f"N={n} over rational-oracle cap ({RATIONAL_CAP})")
    x = as_instance(model, x)
    base = _to_fraction(model.base_value)
    out = []
    for mask in range(1 << n):
        total = base
        for tree in model.trees:
            total += _eval_conditional_rational(tree, x, mask)
        out.append(total)
    return out


def _eval_conditional_rational(tree, x, mask: int) -> Fraction:
    covers = [_to_fraction(c) for c in tree.cover]
    total = Fraction(0)
    stack = [(0, Fraction(1))]
    while stack:
        v, w = stack.pop()
        while tree.left[v] >= 0:
            f = int(tree.feature[v])
            if (mask >> f) & 1:
                v = int(tree.left[v]) if x[f] <= tree.threshold[v] else int(tree.right[v])
            else:
                a, b = int(tree.left[v]), int(tree.right[v])
                stack.append((b, w * covers[b] / covers[v]))
                w = w * covers[a] / covers[v]
                v = a
        total += w * _to_fraction(tree.value[v])
    return total


def exact_shapley_rational(model: Ensemble, x) -> list[Fraction]:
    """Shapley value with zero arithmetic drift (efficiency holds exactly)."""
    n = model.n_features
    table = build_table_rational(model, x)
    omega = [Fraction(math.factorial(k) * math.factorial(n - 1 - k), math.factorial(n))
             for k in range(n)]
    phi = [Fraction(0)] * n
    for i in range(n):
        bit = 1 << i
        for mask in range(1 << n):
            if mask & bit:
                continue
            phi[i] += omega[int.bit_count(mask)] * (table[mask | bit] - table[mask])
    return phi


def table_full_matches_predict(table: SetValueTable, model: Ensemble, x) -> bool:
    return abs(table[(1 << table.n) - 1] - predict(model, x)) < 1e-12

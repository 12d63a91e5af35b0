"""All probabilistic values in O(LD) via polynomial traversal.

Polynomials are never manipulated as coefficient vectors inside the
traversal: each is encoded by its evaluations at the (M+1)-th roots of
unity, where multiplying or dividing by (1 + gamma * y) is pointwise and
the inner product with the target polynomial q collapses to one dot
product against precomputed decode weights. The evaluation matrix V
(V_ij = chi_i^(j-1)) has condition number 1 with inverse conj(V) / size,
which is the entire point of this basis.

Division by (1 + gamma * chi) never degenerates: gamma is either 0 or
> 1, so |1 + gamma * chi| >= |gamma - 1| > 0 on the unit circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import Ensemble, InputError, annotate_edges, as_instance
from .oracle import check_omega


@dataclass(frozen=True)
class UnityBasis:
    """Roots-of-unity evaluation nodes chi_k = exp(2i pi (k-1) / size)."""

    size: int
    nodes: np.ndarray

    def vandermonde(self) -> np.ndarray:
        return self.nodes[:, None] ** np.arange(self.size)[None, :]

    def inverse(self) -> np.ndarray:
        return np.conj(self.vandermonde()) / self.size

    def decode_weights(self, q: np.ndarray) -> np.ndarray:
        """w with <p, q> = <Vp, w> for polynomials p of degree < size."""
        qq = np.zeros(self.size, dtype=np.complex128)
        qq[: q.shape[0]] = q
        return np.conj(self.vandermonde()) @ qq / self.size


@lru_cache(maxsize=None)
def unity_basis(size: int) -> UnityBasis:
    k = np.arange(size)
    nodes = np.exp(2j * np.pi * k / size)
    nodes.setflags(write=False)
    return UnityBasis(size=size, nodes=nodes)


@dataclass(frozen=True)
class ProbabilisticSpec:
    """Which probabilistic value to compute.

    Either an explicit omega vector (length N) or a semi-value measure:
    Dirac(nu) for weighted Banzhaf, Beta(alpha, beta) for Beta Shapley.
    """

    kind: str                        # "omega" | "dirac" | "beta"
    omega: np.ndarray | None = None
    nu: float = 0.5
    alpha: int = 1
    beta: int = 1

    @staticmethod
    def from_omega(omega) -> "ProbabilisticSpec":
        omega = np.asarray(omega, dtype=np.float64)
        if omega.shape[0] > 1024:
            raise InputError("explicit omega capped at N = 1024")
        return ProbabilisticSpec(kind="omega", omega=omega)

    @staticmethod
    def dirac(nu: float) -> "ProbabilisticSpec":
        if not 0.0 <= nu <= 1.0:
            raise InputError("Dirac parameter must lie in [0, 1]")
        return ProbabilisticSpec(kind="dirac", nu=float(nu))

    @staticmethod
    def beta(alpha: int, beta: int) -> "ProbabilisticSpec":
        if alpha < 1 or beta < 1:
            raise InputError("Beta parameters must be positive integers")
        return ProbabilisticSpec(kind="beta", alpha=int(alpha), beta=int(beta))

    @staticmethod
    def shapley() -> "ProbabilisticSpec":
        return ProbabilisticSpec.beta(1, 1)

    @staticmethod
    def banzhaf() -> "ProbabilisticSpec":
        return ProbabilisticSpec.dirac(0.5)


def q_from_omega(omega, n: int, d: int) -> np.ndarray:
    """Reduce an explicit omega to the degree-(min(d,n) - 1) q polynomial.

    Coefficient k is sum_j C(n-d, j) * omega[k+j]; binomial terms are
    accumulated with numpy's pairwise summation to limit cancellation.
    """
    omega = np.asarray(omega, dtype=np.float64)
    check_omega(omega, n)
    d = min(d, n)
    gap = n - d
    q = np.empty(d)
    for k in range(d):
        terms = np.array([_comb_times(gap, j, omega[k + j]) for j in range(gap + 1)])
        q[k] = float(np.sum(terms))
    total = sum(math.comb(d - 1, k) * q[k] for k in range(d))
    if abs(total - 1.0) > 1e-8:
        raise InputError(f"q normalization violated: sum C(d-1,k)*q_k = {total}")
    return q


def _comb_times(n: int, k: int, w: float) -> float:
    c = math.comb(n, k)
    if c < 2 ** 1000:
        return c * w
    if w == 0.0:
        return 0.0
    sign = 1.0 if w > 0 else -1.0
    return sign * math.exp(math.lgamma(n + 1) - math.lgamma(k + 1)
                           - math.lgamma(n - k + 1) + math.log(abs(w)))


def q_from_semivalue(spec: ProbabilisticSpec, degree: int) -> np.ndarray:
    """q coefficients: integral of t^k (1-t)^(degree-k) d mu(t)."""
    ell = degree
    q = np.empty(ell + 1)
    if spec.kind == "dirac":
        nu = spec.nu
        for k in range(ell + 1):
            q[k] = nu ** k * (1.0 - nu) ** (ell - k)
    elif spec.kind == "beta":
        a, b = spec.alpha, spec.beta
        log_b = math.lgamma(b) + math.lgamma(a) - math.lgamma(a + b)
        for k in range(ell + 1):
            q[k] = math.exp(math.lgamma(k + b) + math.lgamma(ell - k + a)
                            - math.lgamma(ell + a + b) - log_b)
    else:
        raise InputError("q_from_semivalue requires a Dirac or Beta spec")
    return q


def shapley_q(degree: int) -> np.ndarray:
    """Coefficients of B_degree: 1 / ((degree+1) * C(degree, k))."""
    return np.array([1.0 / ((degree + 1) * math.comb(degree, k))
                     for k in range(degree + 1)])


def q_for_spec(spec: ProbabilisticSpec, n: int, d: int) -> np.ndarray:
    m = min(d, n)
    if spec.kind == "omega":
        return q_from_omega(spec.omega, n, d)
    return q_from_semivalue(spec, m - 1)


def encoded_fixed_pass(tree, ann, nodes: np.ndarray, w: np.ndarray,
                       deg_target: int, phi: np.ndarray,
                       reversed_factors: bool = False) -> float:
    """Fixed-degree encoded traversal shared by TreeProb and the baselines.

    Carries the running path polynomial (pointwise, with ancestor-factor
    replacement), pads each leaf with (1 + y)^(deg_target - deg), and per
    edge adds (gamma - 1) * <G[v] / (1 + gamma y), q> to the edge's
    feature, where the inner product is the dot with the decode weights w.
    Accumulators live in dicts and are freed once consumed, so at most
    O(depth) encodings are alive. Returns the largest imaginary residue
    seen in any contribution.

    With reversed_factors=True every degree-1 factor (1 + gamma*y) is
    replaced by its reversal (gamma + y), which is transparent to any
    palindromic target q (the Shapley kernels) and keeps real evaluation
    nodes in [-1, 1] away from the poles that gamma > 1 would otherwise
    place at -1/gamma. A zero-gamma ancestor then forces a zero-gamma
    edge, and the pair of factors cancels outright, so that replacement
    is skipped.
    """
    left, right, parent = tree.left, tree.right, tree.parent
    cover, value = tree.cover, tree.value
    gamma, label, up = ann.gamma, ann.label, ann.up
    inv_cr = 1.0 / cover[0]
    size = nodes.shape[0]
    pow1p = np.ones((deg_target + 1, size), dtype=nodes.dtype)
    base = 1.0 + nodes
    for j in range(1, deg_target + 1):
        pow1p[j] = pow1p[j - 1] * base

    def factor(g: float) -> np.ndarray:
        return g + nodes if reversed_factors else 1.0 + g * nodes

    pin: dict[int, tuple[np.ndarray, int]] = {0: (np.ones(size, dtype=nodes.dtype), 0)}
    G: dict[int, np.ndarray] = {}
    ssum: dict[int, np.ndarray] = {}
    imag_max = 0.0

    def post_visit(v: int, pv: np.ndarray, fac: np.ndarray) -> None:
        nonlocal imag_max
        u = up[v]
        if u >= 0:
            if u in G:
                G[u] = G[u] - pv
            else:
                G[u] = -pv
        gv = G.pop(v, None)
        gv = pv if gv is None else gv + pv
        contrib = (gamma[v] - 1.0) * np.dot(gv / fac, w)
        if np.iscomplexobj(contrib):
            imag_max = max(imag_max, abs(contrib.imag))
            phi[label[v]] += contrib.real
        else:
            phi[label[v]] += contrib
        ssum[v] = pv

    stack = [(int(right[0]), 0), (int(left[0]), 0)]
    while stack:
        v, phase = stack.pop()
        fac = factor(gamma[v])
        if phase == 0:
            p, deg = pin[parent[v]]
            u = up[v]
            if u >= 0:
                if reversed_factors and gamma[u] == 0.0:
                    pass  # both factors are plain y: replacement is a no-op
                else:
                    p = p / factor(gamma[u]) * fac
            else:
                p = p * fac
                deg = deg + 1
            if left[v] < 0:
                pv = (value[v] * cover[v] * inv_cr) * p * pow1p[deg_target - deg]
                post_visit(v, pv, fac)
            else:
                pin[v] = (p, deg)
                stack.append((v, 1))
                stack.append((int(right[v]), 0))
                stack.append((int(left[v]), 0))
        else:
            pv = ssum.pop(int(left[v])) + ssum.pop(int(right[v]))
            del pin[v]
            post_visit(v, pv, fac)
    return imag_max


def treeprob_attribute(model: Ensemble, x, spec: ProbabilisticSpec,
                       return_diagnostics: bool = False):
    """Probabilistic value phi for every feature via the unity encoding.

    Per tree, the polynomial degree is capped at min(depth, N); the q
    polynomial is rebuilt per tree accordingly and the per-tree scores
    are summed.
    """
    x = as_instance(model, x)
    n = model.n_features
    phi = np.zeros(n)
    imag_max = 0.0
    for tree in model.trees:
        if tree.depth == 0:
            continue
        m = min(tree.depth, n)
        q = q_for_spec(spec, n, tree.depth)
        basis = unity_basis(m + 1)
        w = basis.decode_weights(q)
        ann = annotate_edges(tree, x)
        imag_max = max(imag_max, encoded_fixed_pass(tree, ann, basis.nodes, w, m, phi))
    if return_diagnostics:
        return phi, {"imag_residual": imag_max}
    return phi

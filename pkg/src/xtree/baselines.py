"""Historical Shapley algorithms, reimplemented faithfully for error study.

These are kept as close to their published forms as practical - no
stabilization is added, because their numerical behaviour at depth is the
object of study. All three cap the working degree at M = min(depth, N).

* linear_treeshap: polynomial traversal through a real Vandermonde basis
  on Chebyshev points of the second kind. "fixed" pads every leaf to
  degree M and decodes once; "mitigated" keeps degrees variable and pays
  a per-degree inverse; "wellcond" swaps in the roots-of-unity nodes.
* treeshap_k: the coefficient calculus with the oplus/ominus pair, where
  ominus solves a bidiagonal system by substitution.
* linear_treeshap_v1: the shifted-coefficient calculus with boxplus /
  boxminus and harmonic final weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import Ensemble, InputError, annotate_edges, as_instance
from .treeprob import encoded_fixed_pass, shapley_q, unity_basis

MODES = ("fixed", "mitigated", "wellcond")


@dataclass(frozen=True)
class ChebyshevBasis:
    """Chebyshev points of the second kind on [-1, 1], endpoints included.

    The Vandermonde matrix on any real nodes is increasingly ill
    conditioned with size; that degradation is recorded by the condition
    harness, not asserted away.
    """

    size: int
    nodes: np.ndarray

    def vandermonde(self) -> np.ndarray:
        return self.nodes[:, None] ** np.arange(self.size)[None, :]

    def decode_weights(self, q: np.ndarray) -> np.ndarray:
        """w with <p, q> = <Vp, w>: solves V^T w = q (q zero-padded)."""
        qq = np.zeros(self.size)
        qq[: q.shape[0]] = q
        return np.linalg.solve(self.vandermonde().T, qq)

    def decode_weights_for_degree(self, d: int) -> np.ndarray:
        """Per-degree weights for the mitigation mode: uses the leading
        (d+1) x (d+1) Vandermonde and the degree-d Shapley kernel."""
        sub = self.nodes[: d + 1, None] ** np.arange(d + 1)[None, :]
        return np.linalg.solve(sub.T, shapley_q(d))


@lru_cache(maxsize=None)
def chebyshev_basis(size: int) -> ChebyshevBasis:
    if size == 1:
        nodes = np.array([1.0])
    else:
        j = np.arange(size)
        nodes = np.cos(np.pi * j / (size - 1))
    nodes.setflags(write=False)
    return ChebyshevBasis(size=size, nodes=nodes)


def _even_grid(min_size: int) -> ChebyshevBasis:
    # even node counts keep 0 out of the second-kind grid, so dividing a
    # reversed zero-gamma factor (plain y) stays finite
    return chebyshev_basis(min_size if min_size % 2 == 0 else min_size + 1)


def _encoded_variable_pass(tree, ann, basis: ChebyshevBasis, m: int, phi: np.ndarray) -> None:
    # Variable-degree mitigation: leaves are not padded; whenever two
    # encodings of unequal degree meet, the lower one is scaled by
    # (1 + y)^(difference). psi is then evaluated at the degree at hand
    # through that degree's own inverse. Factors are reversed (gamma + y),
    # which the palindromic Shapley kernels cannot see.
    left, right, parent = tree.left, tree.right, tree.parent
    cover, value = tree.cover, tree.value
    gamma, label, up = ann.gamma, ann.label, ann.up
    inv_cr = 1.0 / cover[0]
    nodes = basis.nodes
    size = nodes.shape[0]
    pow1p = np.ones((m + 1, size))
    for j in range(1, m + 1):
        pow1p[j] = pow1p[j - 1] * (1.0 + nodes)
    wd = [basis.decode_weights_for_degree(d) for d in range(m)]

    def eq_add(a, da, b, db):
        if da == db:
            return a + b, da
        if da < db:
            return a * pow1p[db - da] + b, db
        return a + b * pow1p[da - db], da

    pin = {0: (np.ones(size), 0)}
    G: dict[int, tuple[np.ndarray, int]] = {}
    ssum: dict[int, tuple[np.ndarray, int]] = {}

    def post_visit(v, pv, dv, fac):
        u = up[v]
        if u >= 0:
            if u in G:
                ge, gd = G[u]
                G[u] = eq_add(ge, gd, -pv, dv)
            else:
                G[u] = (-pv, dv)
        prev = G.pop(v, None)
        if prev is None:
            gv, dg = pv, dv
        else:
            gv, dg = eq_add(prev[0], prev[1], pv, dv)
        quot = gv / fac
        phi[label[v]] += (gamma[v] - 1.0) * float(np.dot(quot[:dg], wd[dg - 1]))
        ssum[v] = (pv, dv)

    stack = [(int(right[0]), 0), (int(left[0]), 0)]
    while stack:
        v, phase = stack.pop()
        fac = gamma[v] + nodes
        if phase == 0:
            p, deg = pin[parent[v]]
            u = up[v]
            if u >= 0:
                if gamma[u] != 0.0:
                    p = p / (gamma[u] + nodes) * fac
            else:
                p = p * fac
                deg = deg + 1
            if left[v] < 0:
                post_visit(v, (value[v] * cover[v] * inv_cr) * p, deg, fac)
            else:
                pin[v] = (p, deg)
                stack.append((v, 1))
                stack.append((int(right[v]), 0))
                stack.append((int(left[v]), 0))
        else:
            pa, da = ssum.pop(int(left[v]))
            pb, db = ssum.pop(int(right[v]))
            pv, dv = eq_add(pa, da, pb, db)
            del pin[v]
            post_visit(v, pv, dv, fac)


def linear_treeshap(model: Ensemble, x, mode: str = "fixed") -> np.ndarray:
    """Shapley value through the chosen polynomial basis and padding mode.

    The fixed mode follows the O(LD) formulation: every leaf polynomial
    is padded up to the tree depth and decoded through the full
    depth-sized Vandermonde, which is what makes its error grow with
    depth. The mitigation mode keeps degrees variable (bounded by the
    number of distinct path features, at most min(depth, N)) and pays a
    per-degree inverse; the wellcond mode is the fixed traversal on the
    roots-of-unity nodes.
    """
    if mode not in MODES:
        raise InputError(f"unknown linear-treeshap mode {mode!r} (use one of {MODES})")
    x = as_instance(model, x)
    n = model.n_features
    phi = np.zeros(n)
    for tree in model.trees:
        if tree.depth == 0:
            continue
        m = min(tree.depth, n)
        ann = annotate_edges(tree, x)
        if mode == "mitigated":
            _encoded_variable_pass(tree, ann, _even_grid(m + 1), m, phi)
            continue
        if mode == "fixed":
            d = tree.depth
            basis = _even_grid(d + 1)
            w = basis.decode_weights(shapley_q(d - 1))
            encoded_fixed_pass(tree, ann, basis.nodes, w, d, phi, reversed_factors=True)
        else:
            basis = unity_basis(m + 1)
            w = basis.decode_weights(shapley_q(m - 1))
            encoded_fixed_pass(tree, ann, basis.nodes, w, m, phi)
    return phi


# -- TreeShap-K ----------------------------------------------------------

def oplus(xi: np.ndarray, g: float) -> np.ndarray:
    """Trade one (1 + y) factor for (1 + g*y) in the B-weighted basis."""
    m = xi.shape[0] - 1
    j = np.arange(m + 1)
    out = (m - j) * xi / (m + 1)
    out[1:] += g * j[1:] * xi[:-1] / (m + 1)
    return out


def ominus(phi_vec: np.ndarray, g: float) -> np.ndarray:
    """Inverse of oplus: substitution on the lower-bidiagonal system."""
    m = phi_vec.shape[0] - 1
    xi = np.zeros_like(phi_vec)
    xi[0] = (m + 1) * phi_vec[0] / m
    for j in range(1, m):
        xi[j] = ((m + 1) * phi_vec[j] - g * j * xi[j - 1]) / (m - j)
    return xi


def treeshap_k(model: Ensemble, x) -> np.ndarray:
    """Shapley value via the oplus/ominus coefficient calculus.

    Vectors are depth-sized (the initial carry stands in for (1+y)^depth),
    so every ominus solves a system whose conditioning degrades with
    depth; that degradation is the published behaviour of this method.
    """
    x = as_instance(model, x)
    n = model.n_features
    phi = np.zeros(n)
    for tree in model.trees:
        if tree.depth == 0:
            continue
        m = tree.depth
        ann = annotate_edges(tree, x)
        gamma, label, up = ann.gamma, ann.label, ann.up
        left, right = tree.left, tree.right
        cover, value = tree.cover, tree.value
        inv_cr = 1.0 / cover[0]
        acc: dict[int, np.ndarray] = {}

        def traverse(v: int, theta: np.ndarray) -> np.ndarray:
            g = gamma[v]
            u = up[v]
            theta = oplus(ominus(theta, gamma[u] if u >= 0 else 1.0), g)
            if left[v] < 0:
                theta = (value[v] * cover[v] * inv_cr) * theta
            else:
                theta = traverse(int(left[v]), theta) + traverse(int(right[v]), theta)
            if u >= 0:
                acc[u] = acc.get(u, 0.0) - theta
            th_v = acc.pop(v, 0.0) + theta
            phi[label[v]] += (g - 1.0) * float(np.sum(ominus(th_v, g)))
            return theta

        theta0 = np.full(m + 1, 1.0 / (m + 1))
        traverse(int(left[0]), theta0)
        traverse(int(right[0]), theta0)
    return phi


# -- Linear TreeShap V1 --------------------------------------------------

def boxplus(d_vec: np.ndarray, shift: float) -> np.ndarray:
    """Multiply by (1 + shift * y) on plain coefficients."""
    out = d_vec.copy()
    out[1:] += shift * d_vec[:-1]
    return out


def boxminus(c_vec: np.ndarray, shift: float) -> np.ndarray:
    """Inverse of boxplus by forward substitution."""
    out = np.empty_like(c_vec)
    out[0] = c_vec[0]
    for j in range(1, c_vec.shape[0]):
        out[j] = c_vec[j] - shift * out[j - 1]
    return out


def linear_treeshap_v1(model: Ensemble, x) -> np.ndarray:
    """Shapley value via (gamma - 1)-shifted coefficients and harmonic sums."""
    x = as_instance(model, x)
    n = model.n_features
    phi = np.zeros(n)
    for tree in model.trees:
        if tree.depth == 0:
            continue
        m = min(tree.depth, n)
        ann = annotate_edges(tree, x)
        gamma, label, up = ann.gamma, ann.label, ann.up
        left, right = tree.left, tree.right
        cover, value = tree.cover, tree.value
        inv_cr = 1.0 / cover[0]
        harmonic = 1.0 / np.arange(1, m + 2)
        acc: dict[int, np.ndarray] = {}

        def traverse(v: int, c: np.ndarray) -> np.ndarray:
            g = gamma[v]
            u = up[v]
            if u >= 0:
                c = boxminus(c, gamma[u] - 1.0)
            c = boxplus(c, g - 1.0)
            if left[v] < 0:
                c = (value[v] * cover[v] * inv_cr) * c
            else:
                c = traverse(int(left[v]), c) + traverse(int(right[v]), c)
            if u >= 0:
                acc[u] = acc.get(u, 0.0) - c
            c_v = acc.pop(v, 0.0) + c
            phi[label[v]] += (g - 1.0) * float(np.dot(boxminus(c_v, g - 1.0), harmonic))
            return c

        c0 = np.zeros(m + 1)
        c0[0] = 1.0
        traverse(int(left[0]), c0)
        traverse(int(right[0]), c0)
    return phi


# -- condition estimates ---------------------------------------------------

class ConvergenceError(RuntimeError):
    pass


def _sigma_max(matvec, size: int, is_complex: bool, rtol: float = 1e-3,
               max_iter: int = 10_000) -> float:
    """Largest singular value by power iteration on A^H A (A given as columns)."""
    cols = []
    eye = np.eye(size, dtype=np.complex128 if is_complex else np.float64)
    for j in range(size):
        cols.append(matvec(eye[:, j]))
    a = np.stack(cols, axis=1)
    v = np.ones(size, dtype=a.dtype) / math.sqrt(size)
    prev = 0.0
    for _ in range(max_iter):
        w = a.conj().T @ (a @ v)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        sigma = math.sqrt(nrm)
        if prev > 0 and abs(sigma - prev) <= rtol * prev:
            return sigma
        prev = sigma
    raise ConvergenceError("power iteration did not converge")


def condition_estimate(operator: str, d: int, gamma: float | None = None) -> float:
    """2-norm condition estimate of the named operator at size d.

    For the solve operators, gamma parameterizes the factor being removed
    (the published experiment uses gamma = 1); the inverse is applied
    through the actual substitution routine.
    """
    if d < 1:
        raise InputError("size must be >= 1")
    if operator == "chebyshev-V":
        v = chebyshev_basis(d).vandermonde()
        vinv = np.linalg.inv(v)
        fwd = _sigma_max(lambda u: v @ u, d, False)
        bwd = _sigma_max(lambda u: vinv @ u, d, False)
        return fwd * bwd
    if operator == "unity-V":
        basis = unity_basis(d)
        v = basis.vandermonde()
        vinv = basis.inverse()
        fwd = _sigma_max(lambda u: v @ u, d, True)
        bwd = _sigma_max(lambda u: vinv @ u, d, True)
        return fwd * bwd
    if operator == "oplus-solve":
        if gamma is None:
            raise InputError("oplus-solve needs gamma")
        if d < 2:
            raise InputError("solve operators need size >= 2")
        fwd = _sigma_max(lambda u: oplus(u, gamma), d, False)
        bwd = _sigma_max(lambda u: ominus(u, gamma), d, False)
        return fwd * bwd
    if operator == "boxplus-solve":
        if gamma is None:
            raise InputError("boxplus-solve needs gamma")
        fwd = _sigma_max(lambda u: boxplus(u, gamma - 1.0), d, False)
        bwd = _sigma_max(lambda u: boxminus(u, gamma - 1.0), d, False)
        return fwd * bwd
    raise InputError(f"unknown operator {operator!r}")

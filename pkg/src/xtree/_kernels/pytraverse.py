"""Pure-Python traversal kernels.

Mirror of the compiled module in ``_ctraverse.pyx``; selected at import
time when the extension is unavailable (or XTREE_PURE_PYTHON is set).
All functions operate on the flat node arrays of a single tree plus the
per-instance edge annotation (gamma, label, up). Traversals use explicit
stacks so path depth is bounded only by memory.
"""

import numpy as np

BACKEND = "python"


def eval_conditional(left, right, feature, threshold, cover, value, in_s, x):
    """Expected prediction with features outside ``in_s`` averaged out.

    Follows the instance on features in the set, takes the cover-weighted
    mix of both children otherwise.
    """
    if left[0] < 0:
        return float(value[0])
    total = 0.0
    stack = [(0, 1.0)]
    while stack:
        v, w = stack.pop()
        while left[v] >= 0:
            f = feature[v]
            if in_s[f]:
                v = left[v] if x[f] <= threshold[v] else right[v]
            else:
                a = left[v]
                b = right[v]
                cv = cover[v]
                stack.append((b, w * (cover[b] / cv)))
                w = w * (cover[a] / cv)
                v = a
        total += w * value[v]
    return total


def eval_multilinear(left, right, parent, cover, value, gamma, label, up, z):
    """Multilinear-extension value at z for one tree.

    Single pass carrying s <- s * (1 - z_l + z_l * gamma_e), with the
    nearest same-label ancestor factor divided out first. A factor of
    exactly zero (gamma_e = 0 and z_l = 1) kills every leaf below, so the
    subtree is skipped.
    """
    if left[0] < 0:
        return float(value[0])
    inv_cr = 1.0 / cover[0]
    total = 0.0
    stack = [(right[0], 1.0), (left[0], 1.0)]
    while stack:
        v, s = stack.pop()
        lab = label[v]
        zl = z[lab]
        fac = 1.0 - zl + zl * gamma[v]
        if fac == 0.0:
            continue
        u = up[v]
        if u >= 0:
            s /= 1.0 - zl + zl * gamma[u]
        s *= fac
        if left[v] < 0:
            total += value[v] * cover[v] * inv_cr * s
        else:
            stack.append((right[v], s))
            stack.append((left[v], s))
    return total


def _zero_subtree(left, right, cover, value, gamma, label, up, z, v0, s0, skip_lab, inv_cr):
    # Aggregate the subtree hanging below a degenerate (zero-factor) edge:
    # factors of the degenerate feature are frozen out, other features
    # follow the usual replace-the-ancestor-factor rule.
    if left[v0] < 0:
        return value[v0] * cover[v0] * inv_cr * s0
    total = 0.0
    stack = [(right[v0], s0), (left[v0], s0)]
    while stack:
        v, s = stack.pop()
        lab = label[v]
        if lab != skip_lab:
            zl = z[lab]
            fac = 1.0 - zl + zl * gamma[v]
            if fac == 0.0:
                continue
            u = up[v]
            if u >= 0:
                s /= 1.0 - zl + zl * gamma[u]
            s *= fac
        if left[v] < 0:
            total += value[v] * cover[v] * inv_cr * s
        else:
            stack.append((right[v], s))
            stack.append((left[v], s))
    return total


def tree_gradient(left, right, parent, cover, value, gamma, label, up, z, g):
    """Gradient of the multilinear extension at z, accumulated into g.

    Downward pass builds per-leaf products with ancestor-factor
    replacement; upward pass settles the per-node accumulator H (each
    subtree subtracts itself from its nearest same-label ancestor) and
    adds (gamma_e - 1) * H[v] / fac_e to the edge's feature. When fac_e
    is exactly zero only that one feature receives the subtree's update,
    computed by the frozen-factor walk above.
    """
    if left[0] < 0:
        return
    n = left.shape[0]
    inv_cr = 1.0 / cover[0]
    H = np.zeros(n)
    sin = np.zeros(n)
    ssum = np.zeros(n)
    sin[0] = 1.0
    stack = [(right[0], 0), (left[0], 0)]
    while stack:
        v, phase = stack.pop()
        if phase == 0:
            lab = label[v]
            zl = z[lab]
            u = up[v]
            s = sin[parent[v]]
            if u >= 0:
                s /= 1.0 - zl + zl * gamma[u]
            fac = 1.0 - zl + zl * gamma[v]
            if fac == 0.0:
                g[lab] -= _zero_subtree(
                    left, right, cover, value, gamma, label, up, z, v, s, lab, inv_cr
                )
                continue
            s *= fac
            if left[v] < 0:
                sv = value[v] * cover[v] * inv_cr * s
                ssum[v] = sv
                if u >= 0:
                    H[u] -= sv
                hv = H[v] + sv
                g[lab] += (gamma[v] - 1.0) * hv / fac
            else:
                sin[v] = s
                stack.append((v, 1))
                stack.append((right[v], 0))
                stack.append((left[v], 0))
        else:
            sv = ssum[left[v]] + ssum[right[v]]
            ssum[v] = sv
            lab = label[v]
            zl = z[lab]
            fac = 1.0 - zl + zl * gamma[v]
            u = up[v]
            if u >= 0:
                H[u] -= sv
            hv = H[v] + sv
            g[lab] += (gamma[v] - 1.0) * hv / fac
    return


def beta_quad(left, right, parent, node_depth, cover, value, gamma, label, up,
              tnodes, b_init, kappa, phi):
    """Vectorized quadrature gradient: one traversal carrying a node vector.

    ``tnodes`` are quadrature nodes strictly inside (0, 1) so the factors
    1 - t + gamma * t never vanish; ``b_init`` is the initial carry (the
    weight-density row), ``kappa`` the quadrature weights. Scratch buffers
    are indexed by path depth, keeping live state O(depth * len(tnodes)).
    """
    if left[0] < 0:
        return
    maxd = int(node_depth.max())
    npts = tnodes.shape[0]
    one_minus_t = 1.0 - tnodes
    sin = np.zeros((maxd + 1, npts))
    acc = np.zeros((maxd + 1, npts))
    H = np.zeros((maxd + 1, npts))
    inv_cr = 1.0 / cover[0]
    sin[0] = b_init
    stack = [(right[0], 0), (left[0], 0)]
    while stack:
        v, phase = stack.pop()
        d = node_depth[v]
        fac = one_minus_t + gamma[v] * tnodes
        if phase == 0:
            s = sin[node_depth[parent[v]]].copy()
            u = up[v]
            if u >= 0:
                s /= one_minus_t + gamma[u] * tnodes
            s *= fac
            if left[v] < 0:
                sv = (value[v] * cover[v] * inv_cr) * s
                if u >= 0:
                    H[node_depth[u]] -= sv
                phi[label[v]] += (gamma[v] - 1.0) * float(np.dot(sv / fac, kappa))
                acc[d - 1] += sv
            else:
                sin[d] = s
                acc[d] = 0.0
                H[d] = 0.0
                stack.append((v, 1))
                stack.append((right[v], 0))
                stack.append((left[v], 0))
        else:
            sv = acc[d]
            u = up[v]
            if u >= 0:
                H[node_depth[u]] -= sv
            hv = H[d] + sv
            phi[label[v]] += (gamma[v] - 1.0) * float(np.dot(hv / fac, kappa))
            if d > 0:
                acc[d - 1] += sv
    return

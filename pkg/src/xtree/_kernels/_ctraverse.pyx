# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled traversal kernels; signatures mirror pytraverse exactly."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def eval_conditional(const cnp.int64_t[::1] left, const cnp.int64_t[::1] right,
                     const cnp.int64_t[::1] feature, const cnp.float64_t[::1] threshold,
                     const cnp.float64_t[::1] cover, const cnp.float64_t[::1] value,
                     const cnp.uint8_t[::1] in_s, const cnp.float64_t[::1] x):
    cdef Py_ssize_t n = left.shape[0]
    if left[0] < 0:
        return float(value[0])
    cdef cnp.int64_t[::1] stack_node = np.empty(n + 1, dtype=np.int64)
    cdef cnp.float64_t[::1] stack_w = np.empty(n + 1, dtype=np.float64)
    cdef Py_ssize_t top = 0
    cdef double total = 0.0, w, cv
    cdef cnp.int64_t v, f, a, b
    stack_node[0] = 0
    stack_w[0] = 1.0
    top = 1
    while top > 0:
        top -= 1
        v = stack_node[top]
        w = stack_w[top]
        while left[v] >= 0:
            f = feature[v]
            if in_s[f]:
                v = left[v] if x[f] <= threshold[v] else right[v]
            else:
                a = left[v]
                b = right[v]
                cv = cover[v]
                stack_node[top] = b
                stack_w[top] = w * (cover[b] / cv)
                top += 1
                w = w * (cover[a] / cv)
                v = a
        total += w * value[v]
    return total


def eval_multilinear(const cnp.int64_t[::1] left, const cnp.int64_t[::1] right,
                     const cnp.int64_t[::1] parent, const cnp.float64_t[::1] cover,
                     const cnp.float64_t[::1] value, const cnp.float64_t[::1] gamma,
                     const cnp.int64_t[::1] label, const cnp.int64_t[::1] up,
                     const cnp.float64_t[::1] z):
    cdef Py_ssize_t n = left.shape[0]
    if left[0] < 0:
        return float(value[0])
    cdef double inv_cr = 1.0 / cover[0]
    cdef cnp.int64_t[::1] stack_node = np.empty(n + 1, dtype=np.int64)
    cdef cnp.float64_t[::1] stack_s = np.empty(n + 1, dtype=np.float64)
    cdef Py_ssize_t top = 0
    cdef double total = 0.0, s, zl, fac
    cdef cnp.int64_t v, u, lab
    stack_node[0] = right[0]
    stack_s[0] = 1.0
    stack_node[1] = left[0]
    stack_s[1] = 1.0
    top = 2
    while top > 0:
        top -= 1
        v = stack_node[top]
        s = stack_s[top]
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
            stack_node[top] = right[v]
            stack_s[top] = s
            top += 1
            stack_node[top] = left[v]
            stack_s[top] = s
            top += 1
    return total


cdef double _zero_subtree(const cnp.int64_t[::1] left, const cnp.int64_t[::1] right,
                          const cnp.float64_t[::1] cover, const cnp.float64_t[::1] value,
                          const cnp.float64_t[::1] gamma, const cnp.int64_t[::1] label,
                          const cnp.int64_t[::1] up, const cnp.float64_t[::1] z,
                          cnp.int64_t v0, double s0, cnp.int64_t skip_lab,
                          double inv_cr, cnp.int64_t[::1] stack_node,
                          cnp.float64_t[::1] stack_s):
    cdef double total = 0.0, s, zl, fac
    cdef cnp.int64_t v, u, lab
    cdef Py_ssize_t top
    if left[v0] < 0:
        return value[v0] * cover[v0] * inv_cr * s0
    stack_node[0] = right[v0]
    stack_s[0] = s0
    stack_node[1] = left[v0]
    stack_s[1] = s0
    top = 2
    while top > 0:
        top -= 1
        v = stack_node[top]
        s = stack_s[top]
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
            stack_node[top] = right[v]
            stack_s[top] = s
            top += 1
            stack_node[top] = left[v]
            stack_s[top] = s
            top += 1
    return total


def tree_gradient(const cnp.int64_t[::1] left, const cnp.int64_t[::1] right,
                  const cnp.int64_t[::1] parent, const cnp.float64_t[::1] cover,
                  const cnp.float64_t[::1] value, const cnp.float64_t[::1] gamma,
                  const cnp.int64_t[::1] label, const cnp.int64_t[::1] up,
                  const cnp.float64_t[::1] z, cnp.float64_t[::1] g):
    cdef Py_ssize_t n = left.shape[0]
    if left[0] < 0:
        return
    cdef double inv_cr = 1.0 / cover[0]
    cdef cnp.float64_t[::1] H = np.zeros(n, dtype=np.float64)
    cdef cnp.float64_t[::1] sin = np.zeros(n, dtype=np.float64)
    cdef cnp.float64_t[::1] ssum = np.zeros(n, dtype=np.float64)
    # main two-phase stack plus a scratch stack for zero-edge subtrees
    cdef cnp.int64_t[::1] stack_node = np.empty(2 * n + 2, dtype=np.int64)
    cdef cnp.int64_t[::1] stack_phase = np.empty(2 * n + 2, dtype=np.int64)
    cdef cnp.int64_t[::1] zstack_node = np.empty(n + 1, dtype=np.int64)
    cdef cnp.float64_t[::1] zstack_s = np.empty(n + 1, dtype=np.float64)
    cdef Py_ssize_t top = 0
    cdef double s, zl, fac, sv, hv
    cdef cnp.int64_t v, u, lab, phase
    sin[0] = 1.0
    stack_node[0] = right[0]
    stack_phase[0] = 0
    stack_node[1] = left[0]
    stack_phase[1] = 0
    top = 2
    while top > 0:
        top -= 1
        v = stack_node[top]
        phase = stack_phase[top]
        if phase == 0:
            lab = label[v]
            zl = z[lab]
            u = up[v]
            s = sin[parent[v]]
            if u >= 0:
                s /= 1.0 - zl + zl * gamma[u]
            fac = 1.0 - zl + zl * gamma[v]
            if fac == 0.0:
                g[lab] -= _zero_subtree(left, right, cover, value, gamma, label,
                                        up, z, v, s, lab, inv_cr,
                                        zstack_node, zstack_s)
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
                stack_node[top] = v
                stack_phase[top] = 1
                top += 1
                stack_node[top] = right[v]
                stack_phase[top] = 0
                top += 1
                stack_node[top] = left[v]
                stack_phase[top] = 0
                top += 1
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


def beta_quad(const cnp.int64_t[::1] left, const cnp.int64_t[::1] right,
              const cnp.int64_t[::1] parent, const cnp.int64_t[::1] node_depth,
              const cnp.float64_t[::1] cover, const cnp.float64_t[::1] value,
              const cnp.float64_t[::1] gamma, const cnp.int64_t[::1] label,
              const cnp.int64_t[::1] up, const cnp.float64_t[::1] tnodes,
              const cnp.float64_t[::1] b_init, const cnp.float64_t[::1] kappa,
              cnp.float64_t[::1] phi):
    cdef Py_ssize_t n = left.shape[0]
    if left[0] < 0:
        return
    cdef Py_ssize_t npts = tnodes.shape[0]
    cdef cnp.int64_t maxd = 0
    cdef Py_ssize_t i
    for i in range(n):
        if node_depth[i] > maxd:
            maxd = node_depth[i]
    cdef cnp.float64_t[:, ::1] sin = np.zeros((maxd + 1, npts), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] acc = np.zeros((maxd + 1, npts), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] H = np.zeros((maxd + 1, npts), dtype=np.float64)
    cdef cnp.float64_t[::1] s = np.empty(npts, dtype=np.float64)
    cdef cnp.int64_t[::1] stack_node = np.empty(2 * n + 2, dtype=np.int64)
    cdef cnp.int64_t[::1] stack_phase = np.empty(2 * n + 2, dtype=np.int64)
    cdef double inv_cr = 1.0 / cover[0]
    cdef double gv_, scale, dot, fac, hv
    cdef cnp.int64_t v, u, lab, phase, d, pd
    cdef Py_ssize_t top, j
    for j in range(npts):
        sin[0, j] = b_init[j]
    stack_node[0] = right[0]
    stack_phase[0] = 0
    stack_node[1] = left[0]
    stack_phase[1] = 0
    top = 2
    while top > 0:
        top -= 1
        v = stack_node[top]
        phase = stack_phase[top]
        d = node_depth[v]
        gv_ = gamma[v]
        if phase == 0:
            pd = node_depth[parent[v]]
            u = up[v]
            if u >= 0:
                for j in range(npts):
                    s[j] = sin[pd, j] / (1.0 - tnodes[j] + gamma[u] * tnodes[j]) \
                        * (1.0 - tnodes[j] + gv_ * tnodes[j])
            else:
                for j in range(npts):
                    s[j] = sin[pd, j] * (1.0 - tnodes[j] + gv_ * tnodes[j])
            if left[v] < 0:
                scale = value[v] * cover[v] * inv_cr
                lab = label[v]
                dot = 0.0
                for j in range(npts):
                    s[j] *= scale
                    if u >= 0:
                        H[node_depth[u], j] -= s[j]
                    dot += s[j] / (1.0 - tnodes[j] + gv_ * tnodes[j]) * kappa[j]
                    acc[d - 1, j] += s[j]
                phi[lab] += (gv_ - 1.0) * dot
            else:
                for j in range(npts):
                    sin[d, j] = s[j]
                    acc[d, j] = 0.0
                    H[d, j] = 0.0
                stack_node[top] = v
                stack_phase[top] = 1
                top += 1
                stack_node[top] = right[v]
                stack_phase[top] = 0
                top += 1
                stack_node[top] = left[v]
                stack_phase[top] = 0
                top += 1
        else:
            u = up[v]
            lab = label[v]
            dot = 0.0
            for j in range(npts):
                fac = 1.0 - tnodes[j] + gv_ * tnodes[j]
                if u >= 0:
                    H[node_depth[u], j] -= acc[d, j]
                hv = H[d, j] + acc[d, j]
                dot += hv / fac * kappa[j]
                if d > 0:
                    acc[d - 1, j] += acc[d, j]
            phi[lab] += (gv_ - 1.0) * dot
    return

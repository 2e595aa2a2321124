"""Compiled inner loops.

Every interval factor is handled in the rotated frame ``R = [xi, eta]`` with
``eta = (sin, -cos)``, where ``I - z l xi xi^T J = R U R`` and ``U`` is the
unit upper triangular ``[[1, -z l], [0, 1]]``.  The running product is kept as
``W = L Q`` (``L`` lower triangular, ``Q`` unitary) so the determinant is
carried by the pivots of ``L`` instead of being recovered from cancelling
entries.
"""

import math

import numpy as np
from numba import njit

_BIG = 1e150
_SMALL = 1e-150


@njit(cache=True, nogil=True)
def product_lq(lengths, cos, sin, z, n, transposed):
    """Accumulate ``W <- W T_j`` for ``j < n``.

    With ``transposed`` the factors are ``T_j^T``; feeding them in reverse order
    yields the transpose of the same product along a different rounding path.

    Returns ``(q00, q01, q10, q11, log_l1, log_l2, phase2, m, kappa)`` where
    ``W = l1 * [[Q0], [m Q0 + kappa Q1]]`` and ``l2 = kappa * l1`` carries the
    phase ``phase2``.
    """
    q00 = 1.0 + 0.0j
    q01 = 0.0j
    q10 = 0.0j
    q11 = 1.0 + 0.0j
    m = 0.0j
    kappa = 1.0 + 0.0j
    phase2 = 1.0 + 0.0j
    log_l1 = 0.0
    log_l2 = 0.0
    p1 = 1.0
    p2 = 1.0
    for j in range(n):
        idx = n - 1 - j if transposed else j
        c = cos[idx]
        s = sin[idx]
        zl = z * lengths[idx]
        # G = Q R
        g00 = q00 * c + q01 * s
        g01 = q00 * s - q01 * c
        g10 = q10 * c + q11 * s
        g11 = q10 * s - q11 * c
        if transposed:
            m00 = g00 - zl * g01
            m01 = g01
            m10 = g10 - zl * g11
            m11 = g11
        else:
            m00 = g00
            m01 = g01 - zl * g00
            m10 = g10
            m11 = g11 - zl * g10
        a = math.hypot(abs(m00), abs(m01))
        u0 = m00 / a
        u1 = m01 / a
        w0 = -u1.conjugate()
        w1 = u0.conjugate()
        det_qp = (u0 * u0.conjugate() + u1 * u1.conjugate()).real
        b = m10 * u0.conjugate() + m11 * u1.conjugate()
        # det(G U) = det(G) because U is unit triangular
        det_g = g00 * g11 - g01 * g10
        cl = det_g * det_qp / a
        # Q <- Q' R
        q00 = u0 * c + u1 * s
        q01 = u0 * s - u1 * c
        q10 = w0 * c + w1 * s
        q11 = w0 * s - w1 * c
        m = m + kappa * (b / a)
        kappa = kappa * (cl / a)
        acl = abs(cl)
        phase2 = phase2 * (cl / acl)
        p1 *= a
        p2 *= acl
        if p1 > _BIG or p1 < _SMALL:
            log_l1 += math.log(p1)
            p1 = 1.0
        if p2 > _BIG or p2 < _SMALL:
            log_l2 += math.log(p2)
            p2 = 1.0
    log_l1 += math.log(p1)
    log_l2 += math.log(p2)
    return q00, q01, q10, q11, log_l1, log_l2, phase2, m, kappa


@njit(cache=True, nogil=True)
def real_rows(lengths, cos, sin, xs, n, row):
    """Row ``row`` of ``W(x)`` for many real ``x`` in one pass over the intervals.

    Returns normalised rows ``(u, v)`` and their natural-log scales.
    """
    G = xs.size
    u = np.zeros(G)
    v = np.zeros(G)
    logs = np.zeros(G)
    if row == 0:
        u[:] = 1.0
    else:
        v[:] = 1.0
    for j in range(n):
        c = cos[j]
        s = sin[j]
        w = lengths[j]
        for g in range(G):
            al = u[g] * c + v[g] * s
            be = u[g] * s - v[g] * c - xs[g] * w * al
            u[g] = al * c + be * s
            v[g] = al * s - be * c
        if (j & 15) == 15:
            for g in range(G):
                mx = max(abs(u[g]), abs(v[g]))
                u[g] /= mx
                v[g] /= mx
                logs[g] += math.log(mx)
    for g in range(G):
        mx = max(abs(u[g]), abs(v[g]))
        u[g] /= mx
        v[g] /= mx
        logs[g] += math.log(mx)
    return u, v, logs


@njit(cache=True, nogil=True)
def greedy_points(lengths, cos, sin, threshold, n):
    """Greedy chain ``0 = n_0 < n_1 < ...`` with each gap's det Omega >= threshold.

    Gap sums restart at every recorded point, so each determinant is formed
    from the local window only.
    """
    out = np.empty(n + 1, dtype=np.int64)
    out[0] = 0
    k = 0
    scc = 0.0
    sss = 0.0
    scs = 0.0
    for j in range(n):
        w = lengths[j]
        c = cos[j]
        s = sin[j]
        scc += w * c * c
        sss += w * s * s
        scs += w * c * s
        if scc * sss - scs * scs >= threshold:
            k += 1
            out[k] = j + 1
            scc = 0.0
            sss = 0.0
            scs = 0.0
    return out[: k + 1].copy()


@njit(cache=True, nogil=True)
def gap_determinants(lengths, cos, sin, points):
    """det Omega over each gap of ``points``, summed in the same order as the scan."""
    k = points.size - 1
    out = np.empty(k)
    for i in range(k):
        scc = 0.0
        sss = 0.0
        scs = 0.0
        for j in range(points[i], points[i + 1]):
            w = lengths[j]
            c = cos[j]
            s = sin[j]
            scc += w * c * c
            sss += w * s * s
            scs += w * c * s
        out[i] = scc * sss - scs * scs
    return out


@njit(cache=True, nogil=True)
def pq_recurrence(a, b, N):
    p = np.empty(N)
    q = np.empty(N)
    p[0] = 1.0
    q[0] = 0.0
    if N > 1:
        p[1] = -a[0] / b[0]
        q[1] = 1.0 / b[0]
    for k in range(1, N - 1):
        p[k + 1] = (-a[k] * p[k] - b[k - 1] * p[k - 1]) / b[k]
        q[k + 1] = (-a[k] * q[k] - b[k - 1] * q[k - 1]) / b[k]
    return p, q

"""Compiled inner loops shared by the sweeps.

Colours are 0-based here and boundary arrays use -1 for a wildcard.
Geometry tables come from :func:`gridscan.block.geometry_arrays`.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def allowed_masks(bnb, n_bnb, Z, q):
    n = bnb.shape[0]
    full = (1 << q) - 1
    out = np.empty(n, np.int64)
    for v in range(n):
        a = full
        for k in range(n_bnb[v]):
            z = Z[bnb[v, k]]
            if z >= 0:
                a &= ~(1 << z)
        out[v] = a
    return out


@njit(cache=True)
def enum_keys(order, prev, n_prev, bnb, n_bnb, Z, q, out):
    """Write canonical keys of all agreeing colourings, ascending, into
    ``out``; return how many."""
    n = order.shape[0]
    allowed = allowed_masks(bnb, n_bnb, Z, q)
    col = np.zeros(n, np.int64)
    nxt = np.zeros(n, np.int64)
    keyp = np.zeros(n + 1, np.int64)
    count = 0
    level = 0
    while level >= 0:
        v = order[level]
        mask = allowed[v]
        for k in range(n_prev[level]):
            mask &= ~(1 << col[prev[level, k]])
        c = nxt[level]
        while c < q and not (mask >> c) & 1:
            c += 1
        if c >= q:
            level -= 1
            continue
        nxt[level] = c + 1
        col[v] = c
        keyp[level + 1] = keyp[level] * q + c
        if level == n - 1:
            out[count] = keyp[n]
            count += 1
        else:
            level += 1
            nxt[level] = 0
    return count


@njit(cache=True)
def marginal_counts(order, prev, n_prev, bnb, n_bnb, Z, q, counts):
    """Fill ``counts[v, c]`` with the number of agreeing colourings giving
    vertex v colour c; return the total number of agreeing colourings."""
    n = order.shape[0]
    counts[:, :] = 0
    allowed = allowed_masks(bnb, n_bnb, Z, q)
    col = np.zeros(n, np.int64)
    nxt = np.zeros(n, np.int64)
    total = 0
    last = n - 1
    vlast = order[last]
    if n == 1:
        mask = allowed[vlast]
        for c in range(q):
            if (mask >> c) & 1:
                counts[vlast, c] += 1
                total += 1
        return total
    level = 0
    while level >= 0:
        v = order[level]
        mask = allowed[v]
        for k in range(n_prev[level]):
            mask &= ~(1 << col[prev[level, k]])
        c = nxt[level]
        while c < q and not (mask >> c) & 1:
            c += 1
        if c >= q:
            level -= 1
            continue
        nxt[level] = c + 1
        col[v] = c
        if level == last - 1:
            # close the final level in bulk
            m = allowed[vlast]
            for k in range(n_prev[last]):
                m &= ~(1 << col[prev[last, k]])
            k_opts = 0
            for c2 in range(q):
                if (m >> c2) & 1:
                    counts[vlast, c2] += 1
                    k_opts += 1
            if k_opts > 0:
                for lv in range(last):
                    u = order[lv]
                    counts[u, col[u]] += k_opts
                total += k_opts
        else:
            level += 1
            nxt[level] = 0
    return total


@njit(cache=True)
def three_phase(L, nL, R, nR, q, resL, resR, ei, ej, ew):
    """Three-phase greedy coupling of two sorted key lists.

    Left entries weigh ``nR`` each, right entries ``nL``. Edges are written
    to ``ei, ej, ew`` in construction order; returns the edge count.
    """
    for i in range(nL):
        resL[i] = nR
    for j in range(nR):
        resR[j] = nL
    ne = 0

    # phase 1: identical colourings
    i = 0
    j = 0
    while i < nL and j < nR:
        if L[i] == R[j]:
            e = min(resL[i], resR[j])
            ei[ne] = i
            ej[ne] = j
            ew[ne] = e
            ne += 1
            resL[i] -= e
            resR[j] -= e
            i += 1
            j += 1
        elif L[i] < R[j]:
            i += 1
        else:
            j += 1

    # phase 2: equal off the least significant vertex (contiguous groups)
    i = 0
    j = 0
    while i < nL and j < nR:
        gi = L[i] // q
        gj = R[j] // q
        if gi < gj:
            i += 1
        elif gi > gj:
            j += 1
        else:
            ie = i
            while ie < nL and L[ie] // q == gi:
                ie += 1
            je = j
            while je < nR and R[je] // q == gj:
                je += 1
            jj = j
            for ii in range(i, ie):
                while resL[ii] > 0 and jj < je:
                    if resR[jj] == 0:
                        jj += 1
                        continue
                    e = min(resL[ii], resR[jj])
                    ei[ne] = ii
                    ej[ne] = jj
                    ew[ne] = e
                    ne += 1
                    resL[ii] -= e
                    resR[jj] -= e
                    if resR[jj] == 0:
                        jj += 1
            i = ie
            j = je

    # phase 3: everything left, in order
    jj = 0
    for ii in range(nL):
        while resL[ii] > 0:
            while resR[jj] == 0:
                jj += 1
            e = min(resL[ii], resR[jj])
            ei[ne] = ii
            ej[ne] = jj
            ew[ne] = e
            ne += 1
            resL[ii] -= e
            resR[jj] -= e
    return ne


@njit(cache=True)
def edge_mismatch(L, R, ei, ej, ew, ne, q, n, mism):
    """``mism[level]`` = total weight of edges whose endpoints differ at the
    digit of that level (level 0 most significant)."""
    mism[:] = 0
    for k in range(ne):
        a = L[ei[k]]
        b = R[ej[k]]
        if a == b:
            continue
        w = ew[k]
        for lv in range(n - 1, -1, -1):
            if a % q != b % q:
                mism[lv] += w
            a //= q
            b //= q


@njit(cache=True)
def _decode_outer(outer, others, Z, q):
    for k in range(others.shape[0] - 1, -1, -1):
        Z[others[k]] = outer % q
        outer //= q


@njit(cache=True)
def sweep_coupling_range(order, prev, n_prev, bnb, n_bnb, q, slot, others,
                         start, stop, fix, best_num, best_den, best_idx):
    """Seven-colour sweep over outer boundary indices ``[start, stop)``.

    ``others`` lists the non-slot boundary vertices, most significant digit
    first. Pair index = outer*q*(q-1) + c*(q-1) + rank(c') with c' ranked
    among colours != c. Per-level maxima are updated in place (strict
    improvement only, so ties keep the lowest index). Returns pairs visited.
    """
    n = order.shape[0]
    cap = q ** n
    K = np.empty((q, cap), np.int64)
    N = np.zeros(q, np.int64)
    resL = np.empty(cap, np.int64)
    resR = np.empty(cap, np.int64)
    ei = np.empty(2 * cap, np.int64)
    ej = np.empty(2 * cap, np.int64)
    ew = np.empty(2 * cap, np.int64)
    mism = np.zeros(n, np.int64)
    Z = np.zeros(others.shape[0] + 1, np.int64)
    visited = 0
    ncol = 2 if fix else q
    for outer in range(start, stop):
        _decode_outer(outer, others, Z, q)
        for c in range(ncol):
            Z[slot] = c
            N[c] = enum_keys(order, prev, n_prev, bnb, n_bnb, Z, q, K[c])
        for c in range(ncol):
            for c2 in range(ncol):
                if c2 == c:
                    continue
                ne = three_phase(K[c], N[c], K[c2], N[c2], q,
                                 resL, resR, ei, ej, ew)
                edge_mismatch(K[c], K[c2], ei, ej, ew, ne, q, n, mism)
                den = N[c] * N[c2]
                rank = c2 - 1 if c2 > c else c2
                idx = outer * q * (q - 1) + c * (q - 1) + rank
                for lv in range(n):
                    if mism[lv] * best_den[lv] > best_num[lv] * den:
                        best_num[lv] = mism[lv]
                        best_den[lv] = den
                        best_idx[lv] = idx
                visited += 1
    return visited


@njit(cache=True)
def min_coupling_num(cA, NA, cB, NB, v, q):
    """Numerator of 1 - sum_c min(m_c, m'_c)/M with M = NA*NB."""
    s = 0
    for c in range(q):
        a = cA[v, c] * NB
        b = cB[v, c] * NA
        s += a if a < b else b
    return NA * NB - s


@njit(cache=True)
def sweep_lower_range(order, prev, n_prev, bnb, n_bnb, q, slot, others,
                      start, stop, fix, best_num, best_den, best_idx):
    """Max of the min-coupling lower bound per block vertex over
    ``[start, stop)``; same pair indexing and tie rule as
    :func:`sweep_coupling_range`. ``best_*`` are indexed by vertex."""
    n = order.shape[0]
    counts = np.zeros((q, n, q), np.int64)
    N = np.zeros(q, np.int64)
    Z = np.zeros(others.shape[0] + 1, np.int64)
    visited = 0
    ncol = 2 if fix else q
    for outer in range(start, stop):
        _decode_outer(outer, others, Z, q)
        for c in range(ncol):
            Z[slot] = c
            N[c] = marginal_counts(order, prev, n_prev, bnb, n_bnb, Z, q,
                                   counts[c])
        for c in range(ncol):
            for c2 in range(ncol):
                if c2 == c:
                    continue
                den = N[c] * N[c2]
                rank = c2 - 1 if c2 > c else c2
                idx = outer * q * (q - 1) + c * (q - 1) + rank
                for v in range(n):
                    num = min_coupling_num(counts[c], N[c], counts[c2], N[c2],
                                           v, q)
                    if num * best_den[v] > best_num[v] * den:
                        best_num[v] = num
                        best_den[v] = den
                        best_idx[v] = idx
                visited += 1
    return visited

"""Pure-Python twins of the compiled kernels in ``_speedups.pyx``.

Same signatures, same tie-breaking, same floating-point operation order
where it matters for reproducibility.
"""
import math

import numpy as np


def _c_mac(gains, P):
    best = math.inf
    count = len(gains)
    for mask in range(1, 1 << count):
        acc = 0.0
        size = 0
        for i in range(count):
            if mask & (1 << i):
                acc += gains[i] * gains[i]
                size += 1
        term = math.log2(1.0 + P * acc) / (2.0 * size)
        if term < best:
            best = term
    return best


def c_mac_unit(gains, P):
    """Symmetric MAC capacity with unit noise; +inf for an empty gain vector."""
    if len(gains) == 0:
        return math.inf
    return _c_mac([float(g) for g in gains], P)


def coop_rate(H, G, P, A, V, in_B):
    """Overall cooperative rate for one coefficient matrix and steering matrix."""
    H = H.tolist()
    G = G.tolist()
    A = A.tolist()
    V = V.tolist()
    L = len(H)
    M = len(H[0])
    mac = math.inf
    for l in range(L):
        if not in_B[l]:
            continue
        gains = [G[lp][l] * V[lp][0] for lp in range(L) if lp != l]
        if gains:
            mac = min(mac, _c_mac(gains, P))
    recv = math.inf
    for m in range(M):
        hv0sq = 0.0
        anorm = 0.0
        cs = 0.0
        for l in range(L):
            term = H[l][m] * V[l][0]
            hv0sq += term * term
            anorm += float(A[l][m] * A[l][m])
            # Cauchy-Schwarz gap via the Lagrange identity
            for lp in range(l):
                proj = A[lp][m] * term - A[l][m] * (H[lp][m] * V[lp][0])
                cs += proj * proj
        hvm = 0.0
        cross = 0.0
        for mp in range(M):
            proj = 0.0
            for l in range(L):
                proj += H[l][m] * V[l][mp + 1]
            if mp == m:
                hvm = proj
            else:
                cross += proj * proj
        Iv = P * cross
        Ir = P * (hv0sq + cross)
        res = 0.5 * math.log2(1.0 + P * hvm * hvm / (1.0 + Ir))
        vest = 0.5 * math.log2(1.0 + P * hv0sq + Iv) - 0.5 * math.log2(anorm * (1.0 + Iv) + P * cs)
        vest = max(vest, 0.0)
        recv = min(recv, res + vest)
    return min(mac, recv)


def nearest_coset_point(u, reps, p, out):
    """Nearest point of the union of cosets ``reps/p + Z^n`` to ``u``.

    Writes the numerator (point * p) into ``out`` and returns the squared
    distance. Ties go to the lexicographically smallest numerator.
    """
    x = u[None, :] - reps / p
    z = np.ceil(x - 0.5)
    d = np.sum((x - z) ** 2, axis=1)
    nums = reps + p * z.astype(np.int64)
    best = d.min()
    tied = np.flatnonzero(d == best)
    if len(tied) > 1:
        # lexsort uses the last key as primary
        order = np.lexsort(nums[tied].T[::-1])
        j = tied[order[0]]
    else:
        j = tied[0]
    out[:] = nums[j]
    return float(d[j])


def nearest_row(cands, y):
    """Index and squared distance of the row of ``cands`` closest to ``y`` (first wins ties)."""
    d = np.sum((cands - y[None, :]) ** 2, axis=1)
    j = int(np.argmin(d))
    return j, float(d[j])

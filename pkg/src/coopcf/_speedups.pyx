# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Each function has a behaviour-identical twin in ``_purepy``; see
``coopcf.kernels`` for the selection logic.
"""
from libc.math cimport log2, ceil, INFINITY


cdef double _c_mac(const double* gains, int count, double P) noexcept nogil:
    cdef double best = INFINITY
    cdef double acc, term
    cdef int mask, i, size
    for mask in range(1, 1 << count):
        acc = 0.0
        size = 0
        for i in range(count):
            if mask & (1 << i):
                acc += gains[i] * gains[i]
                size += 1
        term = log2(1.0 + P * acc) / (2.0 * size)
        if term < best:
            best = term
    return best


def c_mac_unit(const double[::1] gains, double P):
    """Symmetric MAC capacity with unit noise; +inf for an empty gain vector."""
    if gains.shape[0] == 0:
        return INFINITY
    return _c_mac(&gains[0], gains.shape[0], P)


def coop_rate(const double[:, ::1] H, const double[:, ::1] G, double P, const long[:, ::1] A,
              const double[:, ::1] V, const unsigned char[::1] in_B):
    """Overall cooperative rate for one coefficient matrix and steering matrix."""
    cdef Py_ssize_t L = H.shape[0]
    cdef Py_ssize_t M = H.shape[1]
    cdef Py_ssize_t l, lp, m, mp, cnt
    cdef double gains[64]
    cdef double mac = INFINITY
    cdef double recv = INFINITY
    cdef double term, hv0sq, hvm, cross, proj, anorm, cs, res, vest, Iv, Ir
    if L > 65:
        raise ValueError("at most 65 transmitters supported")
    with nogil:
        for l in range(L):
            if not in_B[l]:
                continue
            cnt = 0
            for lp in range(L):
                if lp != l:
                    gains[cnt] = G[lp, l] * V[lp, 0]
                    cnt += 1
            if cnt > 0:
                term = _c_mac(gains, <int>cnt, P)
                if term < mac:
                    mac = term
        for m in range(M):
            hv0sq = 0.0
            anorm = 0.0
            cs = 0.0
            for l in range(L):
                term = H[l, m] * V[l, 0]
                hv0sq += term * term
                anorm += <double>(A[l, m] * A[l, m])
                # Cauchy-Schwarz gap via the Lagrange identity
                for lp in range(l):
                    proj = A[lp, m] * term - A[l, m] * (H[lp, m] * V[lp, 0])
                    cs += proj * proj
            hvm = 0.0
            cross = 0.0
            for mp in range(M):
                proj = 0.0
                for l in range(L):
                    proj += H[l, m] * V[l, mp + 1]
                if mp == m:
                    hvm = proj
                else:
                    cross += proj * proj
            Iv = P * cross
            Ir = P * (hv0sq + cross)
            res = 0.5 * log2(1.0 + P * hvm * hvm / (1.0 + Ir))
            vest = 0.5 * log2(1.0 + P * hv0sq + Iv) - 0.5 * log2(anorm * (1.0 + Iv) + P * cs)
            if vest < 0.0:
                vest = 0.0
            if res + vest < recv:
                recv = res + vest
    return mac if mac < recv else recv


def nearest_coset_point(const double[::1] u, const long[:, ::1] reps, long p, long[::1] out):
    """Nearest point of the union of cosets ``reps/p + Z^n`` to ``u``.

    Writes the numerator (point * p) into ``out`` and returns the squared
    distance. Ties go to the lexicographically smallest numerator.
    """
    cdef Py_ssize_t K = reps.shape[0]
    cdef Py_ssize_t n = reps.shape[1]
    cdef Py_ssize_t j, i
    cdef double best = INFINITY
    cdef double d, diff, x
    cdef long z, num, cur
    cdef bint better
    with nogil:
        for j in range(K):
            d = 0.0
            for i in range(n):
                x = u[i] - (<double>reps[j, i]) / p
                z = <long>ceil(x - 0.5)
                diff = x - z
                d += diff * diff
            if d < best:
                better = True
            elif d == best:
                better = False
                for i in range(n):
                    z = <long>ceil(u[i] - (<double>reps[j, i]) / p - 0.5)
                    num = reps[j, i] + p * z
                    cur = out[i]
                    if num != cur:
                        better = num < cur
                        break
            else:
                better = False
            if better:
                best = d
                for i in range(n):
                    z = <long>ceil(u[i] - (<double>reps[j, i]) / p - 0.5)
                    out[i] = reps[j, i] + p * z
    return best


def nearest_row(const double[:, ::1] cands, const double[::1] y):
    """Index and squared distance of the row of ``cands`` closest to ``y`` (first wins ties)."""
    cdef Py_ssize_t K = cands.shape[0]
    cdef Py_ssize_t n = cands.shape[1]
    cdef Py_ssize_t j, i
    cdef Py_ssize_t best_j = -1
    cdef double best = INFINITY
    cdef double d, diff
    with nogil:
        for j in range(K):
            d = 0.0
            for i in range(n):
                diff = cands[j, i] - y[i]
                d += diff * diff
                if d >= best:
                    break
            if d < best:
                best = d
                best_j = j
    return best_j, best

"""Closed-form achievable rates and upper bounds.

All rates are in bits per real channel use and noise has unit variance
unless stated. Coefficient matrices ``A`` are integer ``L x M`` arrays; the
rate functions also accept a stack of shape ``(K, L, M)`` and then return
one value per matrix, which keeps exhaustive coefficient sweeps fast.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal, stats

from . import kernels
from .errors import (DimensionError, InfeasibleError, ParameterError, SteeringError,
                     UnsupportedError, ValidityError)

__all__ = [
    "SteeringConfig", "RateBreakdown", "c_mac", "coefficient_validity", "rate_nc",
    "rate_superposition", "rate_coop", "rate_zf", "zf_steering", "zero_forcing_vectors",
    "rate_random", "bound_miso", "bound_cutset", "cs_penalty", "mutual_info_check",
    "gaussian_mac_value",
]

POWER_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SteeringConfig:
    """Cooperating set ``B`` (0-based indices) and steering matrix ``V``.

    Column 0 of ``V`` scales each transmitter's own codeword; column ``m``
    (``m >= 1``) carries resolution information for receiver ``m - 1``.
    """

    B: frozenset
    V: np.ndarray

    def __post_init__(self):
        V = np.array(self.V, dtype=float)
        if V.ndim != 2 or V.shape[1] < 2:
            raise DimensionError("V must be L x (M+1) with M >= 1")
        if not np.all(np.isfinite(V)):
            raise SteeringError("steering entries must be finite")
        B = frozenset(int(b) for b in self.B)
        if any(b < 0 or b >= V.shape[0] for b in B):
            raise SteeringError(f"cooperating set {sorted(B)} out of range")
        power = np.sum(V ** 2, axis=1)
        if np.any(power > 1.0 + POWER_TOL):
            raise SteeringError(f"per-transmitter power exceeded: {power.max():.6g}")
        outside = [l for l in range(V.shape[0]) if l not in B]
        if outside and np.any(V[outside, 1:] != 0):
            raise SteeringError("transmitters outside B cannot send resolution signals")
        V.setflags(write=False)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "V", V)

    @property
    def L(self):
        return self.V.shape[0]

    @property
    def M(self):
        return self.V.shape[1] - 1

    @property
    def v0(self):
        return self.V[:, 0]

    @classmethod
    def noncooperative(cls, L, M, v0=None):
        """``B`` empty, no resolution beams, own-codeword scaling ``v0`` (default all ones)."""
        V = np.zeros((L, M + 1))
        V[:, 0] = 1.0 if v0 is None else np.asarray(v0, dtype=float)
        return cls(frozenset(), V)

    def in_B_mask(self):
        mask = np.zeros(self.L, dtype=np.uint8)
        mask[list(self.B)] = 1
        return mask


@dataclass(frozen=True)
class RateBreakdown:
    """Constituent terms of the cooperative rate.

    ``resolution_term``, ``vestigial_term``, ``I_r`` and ``I_v`` hold one
    entry per receiver (with a leading batch axis for stacked ``A``).
    ``mac_term`` is ``inf`` when no transmitter cooperates.
    """

    overall: object
    mac_term: float
    resolution_term: np.ndarray
    vestigial_term: np.ndarray
    I_r: np.ndarray
    I_v: np.ndarray


def _check_power(P, name="P"):
    if not (np.isfinite(P) and P > 0):
        raise ParameterError(f"{name} must be positive and finite, got {P}")


def c_mac(gains, P, sigma2=1.0):
    """Symmetric-rate capacity of a Gaussian MAC.

    Minimum over nonempty user subsets of ``log2(1 + P*sum g^2/sigma2) / (2|S|)``;
    ``inf`` for an empty gain vector.
    """
    _check_power(P)
    _check_power(sigma2, "sigma2")
    g = np.ascontiguousarray(np.asarray(gains, dtype=float).ravel())
    if g.size > 30:
        raise UnsupportedError("subset enumeration limited to 30 users")
    return float(kernels.c_mac_unit(g, P / sigma2))


def coefficient_validity(A, strict=False):
    """Membership of ``A`` (or each matrix of a stack) in the admissible set.

    ``A`` must have full column rank and every column must have a nonzero
    entry. With ``strict`` every entry must be nonzero.
    """
    A = np.asarray(A)
    if A.ndim < 2:
        raise DimensionError("A must be a matrix or a stack of matrices")
    L, M = A.shape[-2:]
    if M > L:
        return np.zeros(A.shape[:-2], dtype=bool) if A.ndim > 2 else False
    ok = np.all(np.any(A != 0, axis=-2), axis=-1)
    ok &= np.linalg.matrix_rank(A.astype(float)) == M
    if strict:
        ok &= np.all(A != 0, axis=(-2, -1))
    return ok if A.ndim > 2 else bool(ok)


def _as_coeffs(A, L, M, strict=False):
    A = np.asarray(A)
    if not np.issubdtype(A.dtype, np.integer):
        if not np.all(A == np.round(A)):
            raise ValidityError("coefficients must be integers")
        A = A.astype(np.int64)
    if A.ndim == 1 and M == 1:
        A = A[:, None]
    if A.shape[-2:] != (L, M):
        raise DimensionError(f"A must be {L}x{M}, got {A.shape[-2:]}")
    if not np.all(coefficient_validity(A, strict)):
        raise ValidityError("coefficient matrix not admissible (rank or zero column)")
    return A


def _as_channel(H):
    H = np.asarray(H, dtype=float)
    if H.ndim == 1:
        H = H[:, None]
    if H.ndim != 2:
        raise DimensionError("H must be L x M")
    return H


def cs_penalty(a, x):
    """Cauchy-Schwarz gap ``|a|^2 |x|^2 - (a.x)^2`` along axis -2, via the Lagrange identity."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    d = a[..., :, None, :] * x[..., None, :, :] - a[..., None, :, :] * x[..., :, None, :]
    return 0.5 * np.sum(d * d, axis=(-3, -2))


def _vestigial(heff, A, P, I_v):
    """Clamped penalized rate with effective channels ``heff`` and extra interference."""
    anorm = np.sum(A.astype(float) ** 2, axis=-2)
    hh = np.sum(heff ** 2, axis=0)
    gap = cs_penalty(A, heff)
    r = 0.5 * np.log2(1.0 + P * hh + I_v) - 0.5 * np.log2(anorm * (1.0 + I_v) + P * gap)
    return np.maximum(r, 0.0)


def _finish(x):
    return float(x) if np.ndim(x) == 0 else x


def rate_nc(H, P, A, strict=False):
    """Non-cooperative compute-and-forward rate (minimum over receivers)."""
    _check_power(P)
    H = _as_channel(H)
    A = _as_coeffs(A, *H.shape, strict=strict)
    return _finish(np.min(_vestigial(H, A, P, 0.0), axis=-1))


def rate_superposition(H, P, A, v0, strict=False):
    """Non-cooperative rate with per-transmitter amplitude scaling ``v0`` (``|v0| <= 1``)."""
    _check_power(P)
    H = _as_channel(H)
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != (H.shape[0],):
        raise DimensionError("v0 needs one entry per transmitter")
    if np.any(np.abs(v0) > 1.0 + POWER_TOL):
        raise SteeringError("|v0| must not exceed 1")
    A = _as_coeffs(A, *H.shape, strict=strict)
    return _finish(np.min(_vestigial(H * v0[:, None], A, P, 0.0), axis=-1))


def _mac_term(G, P, steering):
    L = steering.L
    v0 = steering.v0
    best = math.inf
    for l in sorted(steering.B):
        others = [lp for lp in range(L) if lp != l]
        if others:
            best = min(best, c_mac(G[others, l] * v0[others], P))
    return best


def rate_coop(H, G, P, A, steering, strict=False):
    """Cooperative rate of a subset-``B`` scheme for given ``A`` and steering.

    The overall rate is the smallest of the peer-decoding MAC rates of the
    cooperating transmitters and, per receiver, resolution rate plus the
    clamped vestigial rate.
    """
    _check_power(P)
    H = _as_channel(H)
    G = np.asarray(G, dtype=float)
    L, M = H.shape
    if G.shape != (L, L):
        raise DimensionError(f"G must be {L}x{L}")
    if not isinstance(steering, SteeringConfig):
        raise SteeringError("steering must be a SteeringConfig")
    if (steering.L, steering.M) != (L, M):
        raise DimensionError("steering dimensions do not match the channel")
    A = _as_coeffs(A, L, M, strict=strict)
    V = steering.V
    heff = H * V[:, :1]
    proj = H.T @ V[:, 1:]  # proj[m, m'] = h_m . v_m'
    hvm = np.diag(proj)
    cross = np.sum(np.where(np.eye(M, dtype=bool), 0.0, proj ** 2), axis=1)
    I_v = P * cross
    I_r = P * (np.sum(heff ** 2, axis=0) + cross)
    res = 0.5 * np.log2(1.0 + P * hvm ** 2 / (1.0 + I_r))
    vest = _vestigial(heff, A, P, I_v)
    mac = _mac_term(G, P, steering)
    overall = np.minimum(np.min(res + vest, axis=-1), mac)
    return RateBreakdown(_finish(overall), mac, res, vest, I_r, I_v)


def zero_forcing_vectors(H, m, B=None, tol=1e-12):
    """Unit beam for receiver ``m`` orthogonal to all other receivers' channels.

    Supported on ``B`` (default: all transmitters). Within the admissible
    null space the beam maximizes ``|v . h_m|``; the sign makes ``v . h_m >= 0``.
    Raises :class:`InfeasibleError` when the null space is trivial.
    """
    H = _as_channel(H)
    L, M = H.shape
    if not 0 <= m < M:
        raise DimensionError(f"receiver index {m} out of range")
    idx = np.arange(L) if B is None else np.array(sorted(B), dtype=int)
    if idx.size == 0:
        raise InfeasibleError("empty cooperating set")
    C = H[np.ix_(idx, [mp for mp in range(M) if mp != m])].T
    if C.shape[0] == 0:
        N = np.eye(idx.size)
    else:
        _, s, Vt = np.linalg.svd(C)
        rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))
        N = Vt[rank:].T
    if N.shape[1] == 0:
        raise InfeasibleError(f"no zero-forcing direction for receiver {m}")
    h = H[idx, m]
    u = N @ (N.T @ h)
    if np.linalg.norm(u) <= tol * max(1.0, np.linalg.norm(h)):
        u = N[:, 0].copy()
    if C.shape[0]:
        # one refinement pass against round-off leakage
        u -= np.linalg.lstsq(C, C @ u, rcond=None)[0]
    u /= np.linalg.norm(u)
    s = u @ h
    if s < 0 or (s == 0 and u[np.flatnonzero(u)[0]] < 0):
        u = -u
    v = np.zeros(L)
    v[idx] = u
    return v


def zf_steering(H, v0, B=None, weights=None):
    """Steering with zero-forcing resolution beams scaled by a common factor.

    Beam ``m`` is ``c * w_m * u_m`` with ``u_m`` the unit zero-forcing vector
    and ``c`` the largest factor keeping every transmitter within power.
    """
    H = _as_channel(H)
    L, M = H.shape
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != (L,) or np.any(np.abs(v0) > 1.0 + POWER_TOL):
        raise SteeringError("v0 needs one entry per transmitter with |v0| <= 1")
    B = frozenset(range(L)) if B is None else frozenset(B)
    U = np.column_stack([zero_forcing_vectors(H, m, B) for m in range(M)])
    if weights is not None:
        U = U * np.asarray(weights, dtype=float)[None, :]
    load = np.sum(U ** 2, axis=1)
    room = np.clip(1.0 - v0 ** 2, 0.0, None)
    active = load > 0
    c = float(np.min(np.sqrt(room[active] / load[active]))) if active.any() else 0.0
    V = np.column_stack([v0, c * U])
    # guard the power constraint against round-off
    V[:, 1:] *= np.minimum(1.0, np.sqrt(room / np.maximum(np.sum(V[:, 1:] ** 2, axis=1), 1e-300)))[:, None]
    return SteeringConfig(B, V)


def rate_zf(H, G, P, A, v0, B=None, weights=None, strict=False):
    """Cooperative rate with zero-forcing resolution beams (total clamped per receiver).

    Zero forcing removes the cross-receiver terms, so per receiver the
    resolution and vestigial stages merge into a single penalized rate.
    """
    _check_power(P)
    H = _as_channel(H)
    L, M = H.shape
    steering = zf_steering(H, v0, B, weights)
    A = _as_coeffs(A, L, M, strict=strict)
    V = steering.V
    proj = H.T @ V[:, 1:]
    leak = np.abs(proj[~np.eye(M, dtype=bool)])
    if leak.size and leak.max() > 1e-10:
        raise InfeasibleError(f"zero-forcing leakage {leak.max():.3g}")
    heff = H * V[:, :1]
    anorm = np.sum(A.astype(float) ** 2, axis=-2)
    gain = np.sum(heff ** 2, axis=0) + np.diag(proj) ** 2
    r = 0.5 * np.log2(1.0 + P * gain) - 0.5 * np.log2(anorm + P * cs_penalty(A, heff))
    per_rx = np.min(np.maximum(r, 0.0), axis=-1)
    return _finish(np.minimum(per_rx, _mac_term(np.asarray(G, dtype=float), P, steering)))


def _single_receiver(H):
    H = _as_channel(H)
    if H.shape[1] != 1:
        raise UnsupportedError("only a single receiver is supported")
    return H[:, 0]


def rate_random(H, G, P, B):
    """Two-block decode-and-forward rate with random (non-lattice) codes.

    First block: transmitters in ``B`` decode everyone else at half the MAC
    rate; second block: all of ``B`` beamform coherently to the receiver.
    """
    _check_power(P)
    h = _single_receiver(H)
    G = np.asarray(G, dtype=float)
    L = h.size
    B = sorted(frozenset(B))
    if not B:
        raise ParameterError("cooperating set must be nonempty")
    first = math.inf
    for l in B:
        others = [lp for lp in range(L) if lp != l]
        if others:
            first = min(first, 0.5 * c_mac(G[others, l], P))
    second = 0.25 * math.log2(1.0 + P * float(np.sum(h[B])) ** 2)
    return min(first, second)


def bound_miso(H, P):
    """Capacity of the MISO link with a per-transmitter power constraint ``P``.

    Full cooperation with coherent beamforming: ``log2(1 + P (sum |h_l|)^2) / 2``.
    """
    _check_power(P)
    h = _single_receiver(H)
    return 0.5 * math.log2(1.0 + P * float(np.sum(np.abs(h))) ** 2)


def bound_cutset(H, G, P, num_grid=1001):
    """Cut-set bound for two transmitters and one receiver.

    Each transmitter is treated as the source of a relay channel whose relay
    is the other transmitter. The Gaussian decode-and-forward cut-set value
    ``max_rho min{broadcast cut, coherent MAC cut}`` is found on a grid over
    the input correlation ``rho`` and refined at the crossing of the two cuts.
    The bound is the smaller of the two relay-channel values.
    """
    _check_power(P)
    h = _single_receiver(H)
    G = np.asarray(G, dtype=float)
    if h.size != 2 or G.shape != (2, 2):
        raise UnsupportedError("cut-set bound implemented for two transmitters only")
    rho = np.linspace(0.0, 1.0, num_grid)
    h1, h2 = h

    def mac_cut(r):
        return 0.5 * np.log2(1.0 + P * (h1 ** 2 + h2 ** 2 + 2.0 * r * h1 * h2))

    best = math.inf
    for l in range(2):
        s = h[l] ** 2 + G[l, 1 - l] ** 2

        def bc_cut(r, s=s):
            return 0.5 * np.log2(1.0 + (1.0 - r ** 2) * P * s)

        vals = np.minimum(bc_cut(rho), mac_cut(rho))
        i = int(np.argmax(vals))
        val = float(vals[i])
        lo, hi = rho[max(i - 1, 0)], rho[min(i + 1, num_grid - 1)]
        f = lambda r: bc_cut(r) - mac_cut(r)  # noqa: E731
        if f(lo) * f(hi) < 0:
            root = optimize.brentq(f, lo, hi, xtol=1e-15)
            val = max(val, float(min(bc_cut(root), mac_cut(root))))
        best = min(best, val)
    return best


def gaussian_mac_value(gains, P, sigma2, B=None):
    """``log2(1 + P sum_{l in B} g_l^2 / sigma2) / 2``."""
    g = np.asarray(gains, dtype=float)
    idx = range(g.size) if B is None else sorted(B)
    return 0.5 * math.log2(1.0 + P * float(sum(g[i] ** 2 for i in idx)) / sigma2)


def _sum_density(widths, sigma):
    """Density of a sum of centred uniforms (half-widths ``widths``) plus N(0, sigma^2)."""
    widths = [w for w in widths if w > 0]
    span = sum(widths) + 10.0 * sigma
    dx = min([sigma] + [2 * w for w in widths]) / 400.0
    npts = int(2 * span / dx) | 1
    x = np.linspace(-span, span, npts)
    dx = x[1] - x[0]
    k = np.arange(-int(6 * sigma / dx) - 1, int(6 * sigma / dx) + 2) * dx
    pdf = stats.norm.pdf(k, scale=sigma)
    for w in widths:
        m = int(round(w / dx))
        box = np.full(2 * m + 1, 1.0 / (2 * m + 1) / dx)
        pdf = signal.fftconvolve(pdf, box) * dx
    grid = (np.arange(pdf.size) - (pdf.size - 1) / 2) * dx
    return grid, np.maximum(pdf, 1e-300)


def mutual_info_check(params, gains, P, sigma2, num_samples, B=None, rng_seed=0):
    """Monte Carlo estimate of ``I(x_B; y | x_rest) / n`` for dithered lattice inputs.

    Each user sends ``sqrt(P) * ([lambda + t] mod shaping) / sigma_s`` with a
    uniformly drawn codeword ``lambda``, uniform dither ``t`` and
    ``sigma_s^2`` the shaping second moment, so every coordinate has power
    ``P``. The known users are removed, the output entropy is estimated as
    the sample mean of ``-log2 p(y)`` with the exact per-coordinate density of
    the dithered sum, and the noise entropy is subtracted.
    """
    _check_power(P)
    _check_power(sigma2, "sigma2")
    g = np.asarray(gains, dtype=float).ravel()
    idx = list(range(g.size)) if B is None else sorted(B)
    if not idx or num_samples < 1:
        return 0.0
    rng = np.random.default_rng(rng_seed)
    beta = float(params.beta)
    scale = math.sqrt(P) / math.sqrt(params.second_moment)
    reps = params.coset_reps("coding")
    sigma = math.sqrt(sigma2)
    y = rng.normal(0.0, sigma, size=(num_samples, params.n))
    for l in idx:
        code = reps[rng.integers(0, reps.shape[0], size=num_samples)] * (beta / params.p)
        t = rng.uniform(-beta / 2, beta / 2, size=(num_samples, params.n))
        x = code + t
        x = x - beta * np.ceil(x / beta - 0.5)
        y += g[l] * scale * x
    half_widths = [abs(g[l]) * scale * beta / 2 for l in idx]
    grid, pdf = _sum_density(half_widths, sigma)
    p = np.interp(y.ravel(), grid, pdf, left=1e-300, right=1e-300)
    h_y = -float(np.mean(np.log2(p)))
    return h_y - 0.5 * math.log2(2 * math.pi * math.e * sigma2)

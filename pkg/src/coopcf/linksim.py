"""Desk-scale simulation of two-stage cooperative lattice transmission.

Messages are sent over ``T + 1`` blocks with block-Markov superposition:
at block ``t`` every transmitter sends its fresh dithered codeword and the
cooperating transmitters add the dithered resolution component of the
previous block's desired function. Cooperating transmitters decode their
peers by exhaustive minimum-distance search over the product codebook.
The receiver decodes the resolution part of block ``t`` from block
``t + 1``, cancels it, and decodes the vestigial part from block ``t``.

Signals use unit-power codewords ``c / sigma_s`` with ``sigma_s^2`` the
shaping second moment, so transmitter ``l`` radiates power
``P * sum_m V[l, m]^2``. Only a single receiver is supported.
"""
import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channel import ChannelPair
from .errors import DimensionError, ParameterError, UnsupportedError
from .lattice import (CodebookParams, build_codebook, field_combine, min_distance,
                      nearest_sublattice_point, phi, phi_inverse, phi_r, phi_v)
from .rates import SteeringConfig, rate_coop

__all__ = [
    "RoundConfig", "RoundOutcome", "mmse_coefficients", "transmitter_decode", "run_round",
    "run_trials", "random_messages", "split_rates", "design_codebook", "dump_outcome_csv",
    "interference_margin",
]


@dataclass
class RoundConfig:
    """Everything fixed across trials of the block-Markov scheme."""

    codebook: CodebookParams
    channel: ChannelPair
    P: float
    noise_var: float
    steering: SteeringConfig
    A: np.ndarray = None
    num_blocks: int = 3
    genie: bool = False

    def __post_init__(self):
        if self.channel.M != 1:
            raise UnsupportedError("link simulation supports a single receiver")
        if (self.steering.L, self.steering.M) != (self.channel.L, self.channel.M):
            raise DimensionError("steering does not match the channel")
        if self.P <= 0 or self.noise_var < 0:
            raise ParameterError("need P > 0 and noise_var >= 0")
        if self.num_blocks < 1:
            raise ParameterError("need at least one block")
        if not self.steering.B and self.codebook.k_r > 0:
            raise ParameterError("resolution symbols need at least one cooperating transmitter")
        A = np.ones(self.channel.L, dtype=np.int64) if self.A is None else self.A
        A = np.asarray(A, dtype=np.int64).reshape(-1)
        if A.shape != (self.channel.L,) or not A.any():
            raise DimensionError("A must hold one coefficient per transmitter, not all zero")
        self.A = A

    @property
    def L(self):
        return self.channel.L

    @property
    def sigma_s(self):
        return math.sqrt(self.codebook.second_moment)


@dataclass
class RoundOutcome:
    transmitter_decode_ok: list
    resolution_ok: list
    vestigial_ok: list
    function_recovered: list
    recovered: list
    log: list = field(default_factory=list)

    @property
    def all_recovered(self):
        return all(self.function_recovered)


def mmse_coefficients(gains_eff, P, interference_plus_noise, target=None):
    """Scalar minimizing the effective noise when estimating ``target . u`` from ``y``.

    ``y = sqrt(P) * gains_eff . u + z`` with unit-power ``u`` and ``E z^2``
    equal to ``interference_plus_noise``; ``target`` defaults to ones.
    Returns 0 when there is neither signal nor noise.
    """
    g = np.atleast_1d(np.asarray(gains_eff, dtype=float))
    a = np.ones_like(g) if target is None else np.atleast_1d(np.asarray(target, dtype=float))
    if P <= 0 or interference_plus_noise < 0:
        raise ParameterError("need P > 0 and nonnegative interference plus noise")
    den = P * float(g @ g) + interference_plus_noise
    return 0.0 if den == 0 else math.sqrt(P) * float(g @ a) / den


def _mod(params, x):
    b = float(params.beta)
    return x - b * np.ceil(x / b - 0.5)


class _Codebook:
    """Float coordinates of every codeword, in message order."""

    def __init__(self, params):
        self.params = params
        self.messages = params.messages()
        self.points = np.array([phi(params, w).to_float() for w in self.messages])

    def dithered(self, t):
        return _mod(self.params, self.points + t[None, :])


def transmitter_decode(params, received, known_signals, P, gains, dithers, sigma_s=None,
                       codebook=None):
    """Joint minimum-distance estimate of the peers' messages.

    ``received`` is the peer superposition plus noise; the vectors in
    ``known_signals`` are subtracted first. ``gains[i]`` is the effective
    amplitude of peer ``i`` (channel gain times steering) and ``dithers[i]``
    its dither. Returns ``(messages, squared_distance)``.
    """
    sigma_s = math.sqrt(params.second_moment) if sigma_s is None else sigma_s
    cb = codebook or _Codebook(params)
    z = np.asarray(received, dtype=float).copy()
    for s in known_signals:
        z -= s
    scale = math.sqrt(P) / sigma_s
    per_peer = [scale * g * cb.dithered(t) for g, t in zip(gains, dithers)]
    K = len(cb.messages)
    combos = np.array(list(itertools.product(range(K), repeat=len(per_peer))), dtype=np.int64)
    cands = np.zeros((len(combos), params.n))
    for i, sig in enumerate(per_peer):
        cands += sig[combos[:, i]]
    j, d2 = kernels.nearest_row(np.ascontiguousarray(cands), np.ascontiguousarray(z))
    return [cb.messages[c].copy() for c in combos[j]], float(d2)


def random_messages(params, L, T, rng):
    """``L x T x k`` uniformly random messages over F_p."""
    return rng.integers(0, params.p, size=(L, T, params.k))


def _dither_resolution(params, lam, s):
    return _mod(params, lam.to_float() + s)


def run_round(config, messages, rng_seed=0):
    """Run one transmission of ``T`` message blocks over ``T + 1`` channel blocks.

    ``messages`` has shape ``(L, T, k)``. Dithers and noise come from two
    independent streams derived from ``rng_seed``; noise is standard normal
    scaled by ``sqrt(noise_var)``, so runs that differ only in the noise
    level share their random numbers.
    """
    cfg = config
    params = cfg.codebook
    L, T, n = cfg.L, cfg.num_blocks, params.n
    W = np.asarray(messages, dtype=np.int64) % params.p
    if W.shape != (L, T, params.k):
        raise DimensionError(f"messages must have shape {(L, T, params.k)}, got {W.shape}")
    ss = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    dither_ss, noise_ss = ss.spawn(2)
    drng = np.random.default_rng(dither_ss)
    nrng = np.random.default_rng(noise_ss)
    b = float(params.beta)
    t_own = drng.uniform(-b / 2, b / 2, size=(L, T, n))
    s_res = drng.uniform(-b / 2, b / 2, size=(T, n))
    noise_sd = math.sqrt(cfg.noise_var)
    n_rx = nrng.standard_normal((T + 1, n)) * noise_sd
    n_tx = nrng.standard_normal((T + 1, L, n)) * noise_sd

    h = cfg.channel.H[:, 0]
    G = cfg.channel.G
    V = cfg.steering.V
    v0, v1 = V[:, 0], V[:, 1]
    B = sorted(cfg.steering.B)
    a = cfg.A
    P = cfg.P
    sig = cfg.sigma_s
    amp = math.sqrt(P) / sig
    cb = _Codebook(params) if (B and not cfg.genie and L > 1) else None

    f_true = [field_combine(W[:, t], a, params.p) for t in range(T)]
    c_own = np.array([[_mod(params, phi(params, W[l, t]).to_float() + t_own[l, t])
                       for t in range(T)] for l in range(L)])

    log = []
    tx_ok = []
    # resolution codeword each cooperating transmitter sends in block t + 1
    c_res_tx = {l: [None] * T for l in B}
    for t in range(T):
        ok_t = True
        for l in B:
            est = W[:, t].copy()
            if not cfg.genie and L > 1:
                peers = [lp for lp in range(L) if lp != l]
                z = amp * sum(G[lp, l] * v0[lp] * c_own[lp, t] for lp in peers) + n_tx[t, l]
                known = []
                if t > 0:
                    for lp in B:
                        if lp != l:
                            z = z + amp * G[lp, l] * v1[lp] * c_res_tx[lp][t - 1]
                            known.append(amp * G[lp, l] * v1[lp] * c_res_tx[l][t - 1])
                decoded, d2 = transmitter_decode(
                    params, z, known, P, [G[lp, l] * v0[lp] for lp in peers],
                    [t_own[lp, t] for lp in peers], sig, cb)
                for lp, w in zip(peers, decoded):
                    est[lp] = w
                good = all(np.array_equal(est[lp], W[lp, t]) for lp in peers)
                log.append((t + 1, f"tx{l + 1}", good, math.sqrt(d2)))
                ok_t &= good
            f_hat = field_combine(est, a, params.p)
            c_res_tx[l][t] = _dither_resolution(params, phi_r(params, f_hat), s_res[t])
        tx_ok.append(bool(ok_t))

    # channel outputs, blocks 0..T
    y = []
    for blk in range(T + 1):
        out = n_rx[blk].copy()
        for l in range(L):
            if blk < T:
                out += amp * h[l] * v0[l] * c_own[l, blk]
            if l in c_res_tx and blk > 0:
                out += amp * h[l] * v1[l] * c_res_tx[l][blk - 1]
        y.append(out)

    g_res = float(sum(h[l] * v1[l] for l in B))
    fresh_power = P * float(np.sum((h * v0) ** 2))
    res_ok, vest_ok, fun_ok, recovered = [], [], [], []
    lam_r_hat = [None] * T
    for t in range(T):
        # resolution of block t rides on block t + 1
        interference = fresh_power if t + 1 < T else 0.0
        gamma = sig * mmse_coefficients(g_res, P, interference + cfg.noise_var)
        yr = _mod(params, gamma * y[t + 1] - s_res[t])
        pt, dist = nearest_sublattice_point(params, "resolution", yr)
        lam_r_hat[t] = pt.reduce()
        lam_r_true = phi_r(params, f_true[t])
        res_ok.append(lam_r_hat[t] == lam_r_true)
        log.append((t + 1, "resolution", res_ok[-1], dist))

    for t in range(T):
        yv = y[t].copy()
        if t > 0 and B:
            yv -= amp * g_res * _dither_resolution(params, lam_r_hat[t - 1], s_res[t - 1])
        alpha = sig * mmse_coefficients(h * v0, P, cfg.noise_var, target=a)
        dith = np.tensordot(a.astype(float), t_own[:, t], axes=1)
        yv = _mod(params, alpha * yv - dith - lam_r_hat[t].to_float())
        pt, dist = nearest_sublattice_point(params, "vestigial", yv)
        lam_v_hat = pt.reduce()
        vest_ok.append(lam_v_hat == phi_v(params, f_true[t]))
        log.append((t + 1, "vestigial", vest_ok[-1], dist))
        f_hat = phi_inverse(params, lam_r_hat[t] + lam_v_hat)
        recovered.append(f_hat)
        fun_ok.append(bool(np.array_equal(f_hat, f_true[t])))
        log.append((t + 1, "function", fun_ok[-1], float("nan")))

    return RoundOutcome(tx_ok, res_ok, vest_ok, fun_ok, recovered, log)


def dump_outcome_csv(outcome, path):
    """One row per decoding step: ``block, stage, ok, distance``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["block", "stage", "ok", "distance"])
        for blk, stage, ok, dist in outcome.log:
            w.writerow([blk, stage, int(bool(ok)), f"{dist:.6g}"])


def _trial(config, seed):
    ss = np.random.SeedSequence(seed)
    msg_ss, run_ss = ss.spawn(2)
    W = random_messages(config.codebook, config.L, config.num_blocks, np.random.default_rng(msg_ss))
    return run_round(config, W, run_ss)


def run_trials(config, num_trials, rng_seed=0, workers=1):
    """Fraction of (trial, block) pairs whose function was recovered, and the outcomes.

    Trial ``i`` uses seed ``(rng_seed, i)`` for messages, dithers and noise,
    so changing only the noise level keeps all other randomness fixed.
    """
    seeds = [[rng_seed, i] for i in range(num_trials)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            outcomes = list(pool.map(lambda s: _trial(config, s), seeds))
    else:
        outcomes = [_trial(config, s) for s in seeds]
    flags = [f for o in outcomes for f in o.function_recovered]
    return float(np.mean(flags)), outcomes


def split_rates(H, G, P, A, steering, log2p, n, fraction=0.5):
    """Message split ``(k, k_r)`` at ``fraction`` of each constraint of the cooperative rate.

    The resolution and vestigial dimensions are sized from their own rate
    terms, and the total is capped by the peer-decoding MAC rate.
    """
    bd = rate_coop(H, G, P, np.asarray(A).reshape(-1, 1), steering)
    res = float(np.min(bd.resolution_term)) if steering.B else 0.0
    vest = float(np.min(bd.vestigial_term))
    k_r = int(math.floor(fraction * res * n / log2p + 1e-12))
    k_v = int(math.floor(fraction * vest * n / log2p + 1e-12))
    if math.isfinite(bd.mac_term):
        k_cap = int(math.floor(fraction * bd.mac_term * n / log2p + 1e-12))
        while k_r + k_v > k_cap:
            if k_v > 0:
                k_v -= 1
            else:
                k_r -= 1
    k = min(k_r + k_v, n)
    return k, min(k_r, k)


def _distance_profile(params):
    d = [min_distance(params, w) for w in ("resolution", "vestigial", "coding")]
    return (min(d[0] if params.k_r else np.inf, d[1] if params.k_v else np.inf), d[2])


def design_codebook(H, G, P, A, steering, n, p, fraction=0.5, seed=0, seed_search=1):
    """Codebook whose resolution and vestigial rates sit at ``fraction`` of the formula.

    Generators drawn from ``seed, seed + 1, ...`` (``seed_search`` draws) are
    compared by the smaller of the resolution and vestigial minimum
    distances, then by the coding minimum distance; the first best wins.
    """
    k, k_r = split_rates(H, G, P, A, steering, math.log2(p), n, fraction)
    if k == 0:
        raise ParameterError("rate budget too small for a nonempty codebook")
    best, best_key = None, None
    for s in range(seed, seed + max(1, seed_search)):
        cand = build_codebook(n, k, k_r, p, seed=s)
        if cand.seed != s:
            continue
        key = _distance_profile(cand)
        if best is None or key > best_key:
            best, best_key = cand, key
    return best if best is not None else build_codebook(n, k, k_r, p, seed=seed)


def interference_margin(config):
    """Worst-case noiseless effective-noise norms against the packing radii.

    Returns ``(resolution_noise, resolution_radius, vestigial_noise,
    vestigial_radius)``; when each noise bound is below its radius, the
    noiseless decode chain is exact for every message and dither.
    """
    params = config.codebook
    P, sig = config.P, config.sigma_s
    h = config.channel.H[:, 0]
    V = config.steering.V
    B = sorted(config.steering.B)
    half = float(params.beta) / 2 * math.sqrt(params.n)
    g_res = float(sum(h[l] * V[l, 1] for l in B))
    fresh = P * float(np.sum((h * V[:, 0]) ** 2))
    gamma = sig * mmse_coefficients(g_res, P, fresh)
    amp = math.sqrt(P) / sig
    res_noise = (abs(gamma * amp * g_res - 1.0) + gamma * amp * float(np.sum(np.abs(h * V[:, 0])))) * half
    alpha = sig * mmse_coefficients(h * V[:, 0], P, 0.0, target=config.A)
    vest_noise = float(np.sum(np.abs(alpha * amp * h * V[:, 0] - config.A))) * half
    return (res_noise, min_distance(params, "resolution") / 2,
            vest_noise, min_distance(params, "vestigial") / 2)

"""Diversity-multiplexing tradeoff curves and outage probabilities under Rayleigh fading.

A scheme is in outage when its rate falls below ``(r/2) log2 P``. Squared
gains are i.i.d. Exponential(1). Monte Carlo estimates are split into
fixed-size chunks with independent seed streams, so results do not depend
on the number of workers.
"""
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelPair
from .errors import FitError, InfeasibleError, ParameterError, UnsupportedError
from .rates import rate_superposition

__all__ = [
    "DmtCurve", "OutageCurve", "OutageEstimate", "dmt_nc_upper", "dmt_coop_upper",
    "dmt_random", "dmt_lattice", "lattice_inner_max", "dmt_curve", "outage_closed_form",
    "estimate_outage_mc", "nc_align_scheme", "fit_diversity_slope", "outage_curve",
    "SCHEMES", "CURVES",
]

SCHEMES = ("nc_align", "random_coop")
CHUNK = 10_000


@dataclass(frozen=True)
class DmtCurve:
    """Diversity order sampled on multiplexing gains in ``[0, 1]``."""

    name: str
    L: int
    samples: list

    @property
    def r(self):
        return np.array([s[0] for s in self.samples])

    @property
    def d(self):
        return np.array([s[1] for s in self.samples])


@dataclass
class OutageCurve:
    snr_db: list
    outage_prob: list
    r: float
    fitted_slope: float = None
    stderr: list = field(default_factory=list)


@dataclass(frozen=True)
class OutageEstimate:
    prob: float
    stderr: float
    count: int
    num_samples: int


def _check_r(r):
    if not (0.0 <= r <= 1.0):
        raise ParameterError(f"multiplexing gain must lie in [0, 1], got {r}")


def _check_L(L, minimum=1):
    if int(L) != L or L < minimum:
        raise ParameterError(f"need an integer L >= {minimum}, got {L}")


def dmt_nc_upper(r):
    """Single-link bound ``1 - r``."""
    _check_r(r)
    return 1.0 - r


def dmt_coop_upper(L, r):
    """``L``-antenna MISO bound ``L (1 - r)``."""
    _check_r(r)
    _check_L(L)
    return L * (1.0 - r)


def dmt_random(L, r):
    """Two-block random-coding scheme: ``L min{1-2r, (L-1)(1-2(L-1)r)}``, clamped at 0."""
    _check_r(r)
    _check_L(L, 2)
    return max(0.0, L * min(1.0 - 2.0 * r, (L - 1) * (1.0 - 2.0 * (L - 1) * r)))


def _inner_pieces(L, r, x):
    return np.minimum.reduce([1.0 - x - r, (L - 1) * (1.0 - (L - 1) * r - x), x - r])


def lattice_inner_max(L, r):
    """``max_{x in [0,1]} min{[1-x-r]^+, [(L-1)(1-(L-1)r-x)]^+, [x-r]^+}``.

    The objective is a clamped minimum of lines, so its maximum sits at an
    endpoint, a pairwise intersection or a zero crossing.
    """
    cands = [0.0, 1.0, 0.5, ((L - 1) * (1.0 - (L - 1) * r) + r) / L,
             1.0 - r, 1.0 - (L - 1) * r, r]
    if L != 2:
        cands.append(((L - 1) * (1.0 - (L - 1) * r) - 1.0 + r) / (L - 2))
    x = np.clip(np.array(cands), 0.0, 1.0)
    return max(0.0, float(np.max(_inner_pieces(L, r, x))))


def dmt_lattice(L, r):
    """Cooperative lattice scheme with constant own-codeword scaling."""
    _check_r(r)
    _check_L(L, 2)
    head = 1.0 - r + min(max(1.0 - 2.0 * r, 0.0), max((L - 1) * (1.0 - r * L), 0.0))
    return head + (L - 2) * lattice_inner_max(L, r)


CURVES = {
    "d_nc_upper": lambda L, r: dmt_nc_upper(r),
    "d_coop_upper": dmt_coop_upper,
    "d_random": dmt_random,
    "d_lattice": dmt_lattice,
}


def dmt_curve(name, L, num=101):
    """Sample one of :data:`CURVES` on ``num`` evenly spaced multiplexing gains."""
    try:
        fn = CURVES[name]
    except KeyError:
        raise ParameterError(f"unknown curve {name!r}; choose from {sorted(CURVES)}") from None
    rs = np.linspace(0.0, 1.0, num)
    return DmtCurve(name, L, [(float(r), float(fn(L, r))) for r in rs])


def _db(P_db):
    return 10.0 ** (P_db / 10.0)


def _gamma2_tail(s):
    """``Pr{X + Y >= s}`` for independent Exponential(1) ``X, Y``."""
    return 1.0 if s <= 0 else (1.0 + s) * math.exp(-s)


def _decode_failure(L, r, P, num_samples, rng_seed):
    """Probability that one transmitter fails to decode its ``L - 1`` peers.

    Union over nonempty peer subsets ``S`` of ``{sum_S g^2 < P^(2|S|r - 1)}``.
    """
    tau = [P ** (2 * k * r - 1.0) for k in range(L)]
    if L == 2:
        return -math.expm1(-tau[1])
    if L == 3:
        # complement: both gains above tau1 and their sum above tau2
        return 1.0 - math.exp(-2.0 * tau[1]) * _gamma2_tail(tau[2] - 2.0 * tau[1])
    rng = np.random.default_rng(rng_seed)
    g2 = np.sort(rng.exponential(1.0, size=(num_samples, L - 1)), axis=1)
    # the smallest |S|-subset sum is the sum of the |S| smallest gains
    partial = np.cumsum(g2, axis=1)
    fail = np.any(partial < np.array(tau[1:L]), axis=1)
    return float(np.mean(fail))


def outage_closed_form(L, r, P_db, scheme, num_samples=200_000, rng_seed=0):
    """Outage probability of a scheme's threshold events under Rayleigh fading.

    ``nc_align``: some ``h_l^2 < P^(r-1)`` (the aligning amplitude would exceed 1).
    ``random_coop``: for every transmitter, either it fails to decode its
    peers or its own link is weak (``h_l^2 < P^(2r-1)``); independent across
    transmitters. Exact for ``L <= 3``; for larger ``L`` the per-transmitter
    decoding failure is sampled with ``num_samples`` draws.
    """
    _check_r(r)
    _check_L(L)
    P = _db(P_db)
    if scheme == "nc_align":
        return -math.expm1(-L * P ** (r - 1.0))
    if scheme == "random_coop":
        _check_L(L, 2)
        weak = -math.expm1(-P ** (2 * r - 1.0))
        dec = _decode_failure(L, r, P, num_samples, rng_seed)
        per = 1.0 - (1.0 - dec) * (1.0 - weak)
        return per ** L
    raise UnsupportedError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")


def nc_align_scheme(r):
    """Rate evaluator of the non-cooperative aligned scheme (single receiver).

    Each transmitter scales its codeword so that ``h_l^2 v_l^2 = P^(r-1)``
    and ``a`` is all ones. Raises :class:`InfeasibleError` when some
    amplitude would exceed one.
    """
    _check_r(r)

    def evaluate(channel, P):
        h = channel.H[:, 0]
        target = P ** (r - 1.0)
        if np.any(h ** 2 < target):
            raise InfeasibleError("channel too weak to align")
        v0 = np.sqrt(target) / h
        return rate_superposition(channel.H, P, np.ones((channel.L, 1), dtype=np.int64), v0)

    return evaluate


def _rayleigh_batch(L, M, count, rng):
    H = np.sqrt(rng.exponential(1.0, size=(count, L, M)))
    G = np.sqrt(rng.exponential(1.0, size=(count, L, L)))
    G[:, np.arange(L), np.arange(L)] = 0.0
    return H, G


def _count_chunk(evaluator, L, M, P, target, count, seed):
    rng = np.random.default_rng(seed)
    H, G = _rayleigh_batch(L, M, count, rng)
    outages = 0
    for i in range(count):
        try:
            rate = evaluator(ChannelPair(H[i], G[i]), P)
        except InfeasibleError:
            outages += 1
            continue
        if rate < target:
            outages += 1
    return outages


def estimate_outage_mc(rate_evaluator, r, P_db, num_samples, rng_seed=0, L=2, M=1, workers=1):
    """Fraction of Rayleigh channels on which ``rate_evaluator(channel, P)`` is below target.

    Evaluators signal an infeasible configuration by raising
    :class:`InfeasibleError`, which counts as outage.
    """
    _check_r(r)
    if num_samples < 1:
        raise ParameterError("num_samples must be at least 1")
    P = _db(P_db)
    target = 0.5 * r * math.log2(P)
    sizes = [CHUNK] * (num_samples // CHUNK)
    if num_samples % CHUNK:
        sizes.append(num_samples % CHUNK)
    seeds = np.random.SeedSequence(rng_seed).spawn(len(sizes))
    args = [(rate_evaluator, L, M, P, target, n, s) for n, s in zip(sizes, seeds)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            counts = list(pool.map(lambda a: _count_chunk(*a), args))
    else:
        counts = [_count_chunk(*a) for a in args]
    count = int(sum(counts))
    prob = count / num_samples
    return OutageEstimate(prob, math.sqrt(prob * (1.0 - prob) / num_samples), count, num_samples)


def fit_diversity_slope(curve, snr_db=None):
    """Least-squares slope of ``-log10(prob)`` against ``log10(P)``.

    Accepts an :class:`OutageCurve` or two sequences ``(probs, snr_db)``.
    Zero-probability points are dropped with a warning; fewer than three
    remaining points raise :class:`FitError`.
    """
    if isinstance(curve, OutageCurve):
        snr_db, probs = curve.snr_db, curve.outage_prob
    else:
        probs = curve
    snr = np.asarray(snr_db, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if snr.shape != probs.shape:
        raise FitError("SNR and probability lists differ in length")
    keep = probs > 0
    if not keep.all():
        warnings.warn(f"dropping {int((~keep).sum())} zero-probability outage points",
                      RuntimeWarning, stacklevel=2)
    if keep.sum() < 3:
        raise FitError("need at least three nonzero outage points to fit a slope")
    x = snr[keep] / 10.0
    y = -np.log10(probs[keep])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def outage_curve(scheme, L, r, snr_db=(10, 15, 20, 25, 30), **kwargs):
    """Closed-form outage over an SNR grid, with the fitted slope attached."""
    probs = [outage_closed_form(L, r, s, scheme, **kwargs) for s in snr_db]
    curve = OutageCurve(list(snr_db), probs, r)
    curve.fitted_slope = fit_diversity_slope(curve)
    return curve

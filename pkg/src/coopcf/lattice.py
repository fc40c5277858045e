"""Desk-scale Construction-A nested lattice codes with exact arithmetic.

The shaping lattice is the scaled cube lattice ``beta * Z^n``. Its
fundamental Voronoi region is taken half-open as ``(-beta/2, beta/2]^n``,
which is what the shaping quantizer with "round half down" tie-breaking
produces. Every point of the coding lattice is ``beta * num / p`` for an
integer vector ``num``, so all group identities are checked on integers.
"""
import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import kernels
from .errors import DimensionError, ParameterError

__all__ = [
    "CodebookParams", "LatticePoint", "build_codebook", "phi", "phi_r", "phi_v",
    "phi_inverse", "mod_shaping", "quantize_sublattice", "nearest_sublattice_point",
    "field_combine", "dither_draw", "enumerate_codebook", "min_distance",
    "save_codebook", "load_codebook", "is_prime", "rank_mod_p", "UNIT_POWER",
]

#: ``shaping_scale`` value giving a shaping lattice with unit second moment.
UNIT_POWER = "unit"

SUBLATTICES = ("coding", "resolution", "vestigial")


def is_prime(p):
    if p < 2 or int(p) != p:
        return False
    p = int(p)
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    return all(p % d for d in range(3, math.isqrt(p) + 1, 2))


def rank_mod_p(F, p):
    """Rank of an integer matrix over the prime field F_p (Gaussian elimination)."""
    M = [[int(x) % p for x in row] for row in np.asarray(F)]
    if not M:
        return 0
    rows, cols = len(M), len(M[0])
    rank = 0
    for c in range(cols):
        pivot = next((r for r in range(rank, rows) if M[r][c]), None)
        if pivot is None:
            continue
        M[rank], M[pivot] = M[pivot], M[rank]
        inv = pow(M[rank][c], -1, p)
        M[rank] = [(x * inv) % p for x in M[rank]]
        for r in range(rows):
            if r != rank and M[r][c]:
                f = M[r][c]
                M[r] = [(x - f * y) % p for x, y in zip(M[r], M[rank])]
        rank += 1
        if rank == rows:
            break
    return rank


def _parse_scale(scale):
    if isinstance(scale, str) and scale == UNIT_POWER:
        return math.sqrt(12.0)
    if isinstance(scale, float):
        beta = Fraction(scale).limit_denominator(10 ** 9)
        if float(beta) != scale:
            return scale
    else:
        beta = Fraction(scale)
    if beta <= 0:
        raise ParameterError("shaping scale must be positive")
    return beta


@dataclass(frozen=True)
class LatticePoint:
    """Point ``beta * num / p`` of a Construction-A lattice."""

    num: tuple
    p: int
    beta: object = Fraction(1)

    def coords(self):
        """Exact coordinates as Fractions (requires a rational scale)."""
        if not isinstance(self.beta, Fraction):
            raise TypeError("exact coordinates need a rational shaping scale")
        return [self.beta * Fraction(x, self.p) for x in self.num]

    def to_float(self):
        return float(self.beta) * np.asarray(self.num, dtype=float) / self.p

    def _check(self, other):
        if not isinstance(other, LatticePoint) or other.p != self.p or other.beta != self.beta:
            raise TypeError("points belong to different lattices")

    def __add__(self, other):
        self._check(other)
        return LatticePoint(tuple(a + b for a, b in zip(self.num, other.num)), self.p, self.beta)

    def __sub__(self, other):
        self._check(other)
        return LatticePoint(tuple(a - b for a, b in zip(self.num, other.num)), self.p, self.beta)

    def __neg__(self):
        return LatticePoint(tuple(-a for a in self.num), self.p, self.beta)

    def scale(self, c):
        """Integer multiple of the point."""
        return LatticePoint(tuple(int(c) * a for a in self.num), self.p, self.beta)

    def reduce(self):
        """Representative in the fundamental region of the shaping lattice."""
        return LatticePoint(tuple(_reduce_num(a, self.p) for a in self.num), self.p, self.beta)

    def is_zero(self):
        return not any(self.num)


def _reduce_num(a, p):
    # a - p * ceil(a/p - 1/2), in integers
    q = -((p - 2 * a) // (2 * p))
    return a - p * q


@dataclass(frozen=True, eq=False)
class CodebookParams:
    """Construction-A nested code: generator ``F`` over F_p, split at ``k_r`` columns."""

    n: int
    k: int
    k_r: int
    p: int
    F: np.ndarray
    beta: object = Fraction(1)
    seed: object = None

    def __post_init__(self):
        if not is_prime(self.p):
            raise ParameterError(f"modulus {self.p} is not prime")
        if not (0 <= self.k_r <= self.k <= self.n):
            raise ParameterError("need 0 <= k_r <= k <= n")
        F = np.array(self.F, dtype=np.int64) % self.p
        if F.shape != (self.n, self.k):
            raise DimensionError(f"F must be {self.n}x{self.k}, got {F.shape}")
        if rank_mod_p(F, self.p) != self.k:
            raise ParameterError("F must have full column rank over F_p")
        F.setflags(write=False)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "beta", _parse_scale(self.beta))

    @property
    def k_v(self):
        return self.k - self.k_r

    @property
    def F_r(self):
        return self.F[:, :self.k_r]

    @property
    def F_v(self):
        return self.F[:, self.k_r:]

    @property
    def rate(self):
        """Bits per real dimension."""
        return self.k * math.log2(self.p) / self.n

    @property
    def rate_r(self):
        return self.k_r * math.log2(self.p) / self.n

    @property
    def rate_v(self):
        return self.k_v * math.log2(self.p) / self.n

    @property
    def shaping_generator(self):
        return [[self.beta if i == j else 0 for j in range(self.n)] for i in range(self.n)]

    @property
    def second_moment(self):
        """Per-dimension power of a uniform point in the shaping Voronoi region."""
        return float(self.beta) ** 2 / 12.0

    def messages(self, length=None):
        """All messages of the given length (default ``k``) in lexicographic order."""
        length = self.k if length is None else length
        return np.array(list(itertools.product(range(self.p), repeat=length)),
                        dtype=np.int64).reshape(self.p ** length, length)

    @cached_property
    def _reps(self):
        out = {}
        for which, cols in (("coding", self.F), ("resolution", self.F_r), ("vestigial", self.F_v)):
            W = self.messages(cols.shape[1])
            reps = (W @ cols.T) % self.p
            out[which] = np.ascontiguousarray(reps, dtype=np.int64)
        return out

    def coset_reps(self, which="coding"):
        """Codewords of the underlying linear code, one per coset of ``Z^n``."""
        if which not in SUBLATTICES:
            raise ParameterError(f"unknown sublattice {which!r}")
        return self._reps[which]

    @cached_property
    def _inverse_table(self):
        table = {}
        for w in self.messages():
            table[phi(self, w).num] = tuple(int(x) for x in w)
        return table

    def to_dict(self):
        return {
            "n": self.n, "k": self.k, "k_r": self.k_r, "p": self.p, "seed": self.seed,
            "shaping_scale": UNIT_POWER if isinstance(self.beta, float) else str(self.beta),
            "F": self.F.tolist(),
        }


def build_codebook(n, k, k_r, p, shaping_scale=1, seed=0, F=None, max_draws=1000):
    """Draw a Construction-A codebook.

    ``F`` is drawn uniformly over F_p^{n x k} from ``seed``; rank-deficient
    draws are replaced by a draw from ``seed + 1``, ``seed + 2``, ... The
    seed actually used is stored on the result. An explicit ``F`` is used
    as given and rejected if rank deficient.
    """
    if not is_prime(p):
        raise ParameterError(f"modulus {p} is not prime")
    if not (0 <= k_r <= k <= n):
        raise ParameterError("need 0 <= k_r <= k <= n")
    if F is not None:
        return CodebookParams(n, k, k_r, p, F, shaping_scale, None)
    for attempt in range(max_draws):
        s = seed + attempt
        cand = np.random.default_rng(s).integers(0, p, size=(n, k))
        if rank_mod_p(cand, p) == k:
            return CodebookParams(n, k, k_r, p, cand, shaping_scale, s)
    raise ParameterError("could not draw a full-rank generator")


def _as_message(params, w, length):
    w = np.asarray(w, dtype=np.int64)
    if w.shape != (length,):
        raise DimensionError(f"message must have length {length}, got shape {w.shape}")
    return w % params.p


def _embed(params, cols, w):
    num = (cols @ w) % params.p
    return LatticePoint(tuple(int(x) for x in num), params.p, params.beta).reduce()


def phi(params, w):
    """Message -> codeword: ``[beta * F w / p] mod beta Z^n``."""
    return _embed(params, params.F, _as_message(params, w, params.k))


def phi_r(params, w):
    """Resolution component, from the first ``k_r`` message symbols."""
    w = _as_message(params, w, params.k)
    return _embed(params, params.F_r, w[:params.k_r])


def phi_v(params, w):
    """Vestigial component, from the remaining symbols."""
    w = _as_message(params, w, params.k)
    return _embed(params, params.F_v, w[params.k_r:])


def phi_inverse(params, point):
    """Codeword (any representative mod the shaping lattice) -> message."""
    key = point.reduce().num
    try:
        return np.array(params._inverse_table[key], dtype=np.int64)
    except KeyError:
        raise ParameterError("point is not a codeword") from None


def enumerate_codebook(params):
    """All ``p**k`` codewords, in message order."""
    return [phi(params, w) for w in params.messages()]


def mod_shaping(params, x):
    """``x mod beta Z^n`` into ``(-beta/2, beta/2]^n``.

    Exact for :class:`LatticePoint` and for sequences of Fractions/ints;
    floating point otherwise.
    """
    if isinstance(x, LatticePoint):
        return x.reduce()
    beta = params.beta
    if isinstance(beta, Fraction) and all(isinstance(v, (int, Fraction)) for v in x):
        if len(x) != params.n:
            raise DimensionError(f"expected length {params.n}")
        out = []
        for v in x:
            u = Fraction(v) / beta
            out.append(Fraction(v) - beta * math.ceil(u - Fraction(1, 2)))
        return out
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.n:
        raise DimensionError(f"expected length {params.n}")
    b = float(beta)
    return x - b * np.ceil(x / b - 0.5)


def nearest_sublattice_point(params, which, y):
    """Nearest point of the chosen sublattice to ``y`` and its Euclidean distance.

    Searches every coset of ``Z^n`` in the sublattice; inside a coset the
    nearest point is found by coordinate-wise rounding, which is the same as
    scanning all shaping-lattice translates. Ties go to the lexicographically
    smallest point.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (params.n,):
        raise DimensionError(f"expected length {params.n}")
    u = np.ascontiguousarray(y / float(params.beta))
    out = np.empty(params.n, dtype=np.int64)
    d2 = kernels.nearest_coset_point(u, params.coset_reps(which), params.p, out)
    point = LatticePoint(tuple(int(v) for v in out), params.p, params.beta)
    return point, float(params.beta) * math.sqrt(d2)


def quantize_sublattice(params, which, y):
    """Nearest point of the coding, resolution or vestigial lattice."""
    return nearest_sublattice_point(params, which, y)[0]


def field_combine(messages, coeffs, p):
    """Elementwise ``sum_l a_l * w_l mod p``."""
    W = np.asarray(messages, dtype=np.int64)
    a = np.asarray(coeffs, dtype=np.int64)
    if W.ndim != 2 or a.shape != (W.shape[0],):
        raise DimensionError("need one coefficient per message and equal message lengths")
    return (a % p) @ W % p


def dither_draw(params, rng_seed):
    """Uniform dither over the shaping cell (``rng_seed`` may also be a Generator)."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    b = float(params.beta)
    return rng.uniform(-b / 2, b / 2, size=params.n)


def min_distance(params, which="coding"):
    """Minimum distance of the sublattice (shortest nonzero vector), by enumeration."""
    reps = params.coset_reps(which)
    best = 1.0
    for c in reps:
        if not c.any():
            continue
        centred = np.array([_reduce_num(int(v), params.p) for v in c], dtype=float) / params.p
        best = min(best, float(np.linalg.norm(centred)))
    return float(params.beta) * best


def save_codebook(params, path):
    with open(path, "w") as fh:
        json.dump(params.to_dict(), fh, indent=2)


def load_codebook(path):
    """Inverse of :func:`save_codebook`. Rebuilds from the seed if ``F`` is absent."""
    with open(path) as fh:
        d = json.load(fh)
    scale = d.get("shaping_scale", "1")
    scale = UNIT_POWER if scale == UNIT_POWER else Fraction(scale)
    if "F" in d:
        return CodebookParams(d["n"], d["k"], d["k_r"], d["p"], d["F"], scale, d.get("seed"))
    return build_codebook(d["n"], d["k"], d["k_r"], d["p"], scale, seed=d["seed"], max_draws=1)

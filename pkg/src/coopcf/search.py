"""Maximization of the cooperative rate over coefficients, cooperating sets and steering.

The steering search is a deterministic heuristic: a coarse grid over a
common power split followed by coordinate ascent. Each transmitter ``l``
keeps amplitude ``x_l`` for its own codeword; cooperating transmitters put
the remaining power ``1 - x_l^2`` into resolution beams. Larger budgets
only ever add candidate points, so the returned rate is nondecreasing in
every budget component.
"""
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, InfeasibleError, ParameterError
from .rates import (RateBreakdown, SteeringConfig, _as_channel, coefficient_validity,
                    rate_coop, zero_forcing_vectors)

__all__ = [
    "SearchBudget", "OptimizationResult", "enumerate_coefficients", "prune_coefficients",
    "zero_forcing_vectors", "optimize_steering", "best_cooperative_rate", "candidate_subsets",
]

BEAM_MODES = ("matched", "zf")
START_STEP = 0.125


@dataclass(frozen=True)
class SearchBudget:
    """Search effort: coefficient range, steering grid size, ascent sweeps."""

    coeff_bound: int = 3
    grid_points: int = 9
    refine_iters: int = 20

    def __post_init__(self):
        for name in ("coeff_bound", "grid_points", "refine_iters"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ParameterError(f"{name} must be a positive integer, got {v}")
        if self.grid_points < 2:
            raise ParameterError("grid_points must be at least 2")

    @classmethod
    def parse(cls, text):
        """Parse ``"coeff:grid:iters"``."""
        try:
            parts = [int(p) for p in str(text).split(":")]
        except ValueError:
            raise ConfigurationError(f"bad budget {text!r}; expected coeff:grid:iters") from None
        if len(parts) != 3:
            raise ConfigurationError(f"bad budget {text!r}; expected coeff:grid:iters")
        return cls(*parts)

    def __str__(self):
        return f"{self.coeff_bound}:{self.grid_points}:{self.refine_iters}"


@dataclass(frozen=True)
class OptimizationResult:
    best_rate: float
    A: np.ndarray
    B: frozenset
    V: np.ndarray
    breakdown: RateBreakdown

    @property
    def steering(self):
        return SteeringConfig(self.B, self.V)


def _columns(L, bound, strict, dedup):
    rng = range(-bound, bound + 1)
    cols = []
    for c in itertools.product(rng, repeat=L):
        if not any(c) or (strict and not all(c)):
            continue
        if dedup and next(v for v in c if v) < 0:
            continue
        cols.append(c)
    # small norms first, positive entries before negative ones
    cols.sort(key=lambda c: (sum(v * v for v in c), tuple(-v for v in c)))
    return np.array(cols, dtype=np.int64).reshape(-1, L)


def enumerate_coefficients(L, M, coeff_bound, strict=False, dedup=True):
    """All admissible integer ``L x M`` matrices with entries in ``[-bound, bound]``.

    With ``dedup`` each column's first nonzero entry is positive (negating a
    column leaves every rate unchanged). Returned as a ``(K, L, M)`` stack in
    a fixed order (columns sorted by norm).
    """
    if coeff_bound < 1:
        raise ParameterError("coeff_bound must be at least 1")
    if M > L:
        return np.zeros((0, L, M), dtype=np.int64)
    cols = _columns(L, int(coeff_bound), strict, dedup)
    idx = np.array(list(itertools.product(range(len(cols)), repeat=M)), dtype=np.int64)
    A = np.transpose(cols[idx], (0, 2, 1)) if len(idx) else np.zeros((0, L, M), dtype=np.int64)
    keep = coefficient_validity(A, strict) if len(A) else np.zeros(0, dtype=bool)
    return np.ascontiguousarray(A[keep])


def prune_coefficients(As, H, P):
    """Drop matrices with a column ``a_m`` where ``|a_m|^2 > 1 + P |h_m|^2``.

    Such columns give zero non-cooperative rate. The full set is kept if
    pruning would leave nothing.
    """
    H = _as_channel(H)
    cap = 1.0 + P * np.sum(H ** 2, axis=0)
    keep = np.all(np.sum(As.astype(float) ** 2, axis=1) <= cap + 1e-9, axis=-1)
    return As[keep] if keep.any() else As


def candidate_subsets(L, all_subsets=False):
    """Cooperating sets searched: empty, singletons and the full set (or all subsets)."""
    if all_subsets:
        return [frozenset(s) for k in range(L + 1) for s in itertools.combinations(range(L), k)]
    out = [frozenset()] + [frozenset([l]) for l in range(L)]
    if L > 1:
        out.append(frozenset(range(L)))
    return out


class _Objective:
    """Builds ``V`` from search parameters and evaluates the rate kernel."""

    def __init__(self, H, G, P, A, B, beams):
        self.H = np.ascontiguousarray(H, dtype=float)
        self.G = np.ascontiguousarray(G, dtype=float)
        self.P = float(P)
        self.A = np.ascontiguousarray(A, dtype=np.int64)
        self.L, self.M = self.H.shape
        self.B = frozenset(B)
        self.in_B = np.zeros(self.L, dtype=np.uint8)
        self.in_B[list(self.B)] = 1
        self.mask = self.in_B.astype(bool)
        if self.M == 1:
            s = np.sign(self.A[:, 0] * self.H[:, 0])
            self.sign = np.where(s == 0, 1.0, s)
        else:
            self.sign = np.ones(self.L)
        self.beams = beams
        self.maskf = self.mask.astype(float)
        self.U = None
        if self.B and beams == "zf":
            self.U = np.column_stack([zero_forcing_vectors(self.H, m, self.B) for m in range(self.M)])
            self.load = np.sum(self.U ** 2, axis=1)
            self.act = self.load > 0
        elif self.B:
            D = self.H.copy()
            if self.M == 1:
                # single receiver: beam along the channel sign, full remaining power
                D = np.where(D == 0, 1.0, np.sign(D))
            self.D = D * self.maskf[:, None]
        # number of parameters: one amplitude per transmitter, one weight per receiver beam
        self.num_w = self.M if (self.B and self.M > 1) else 0
        self.cache = {}

    def steering(self, theta):
        L, M = self.L, self.M
        x = theta[:L]
        V = np.zeros((L, M + 1))
        V[:, 0] = self.sign * x
        if not self.B:
            return V
        room = self.maskf * (1.0 - x * x)
        if self.U is not None:
            if self.num_w:
                U = self.U * theta[L:]
                load = np.einsum("ij,ij->i", U, U)
                act = load > 0
            else:
                U, load, act = self.U, self.load, self.act
            c = math.sqrt(np.min(room[act] / load[act])) if act.any() else 0.0
            V[:, 1:] = c * U
        else:
            Dl = self.D * theta[L:] if self.num_w else self.D
            norm = np.sqrt(np.einsum("ij,ij->i", Dl, Dl))
            scale = np.sqrt(room) / np.where(norm > 0, norm, np.inf)
            V[:, 1:] = Dl * scale[:, None]
        # round-off guard on the power constraint
        tot = np.einsum("ij,ij->i", V, V)
        if tot.max() > 1.0:
            over = tot > 1.0
            V[over] /= np.sqrt(tot[over])[:, None]
        return V

    def __call__(self, theta):
        key = theta.tobytes()
        val = self.cache.get(key)
        if val is None:
            V = np.ascontiguousarray(self.steering(theta))
            val = kernels.coop_rate(self.H, self.G, self.P, self.A, V, self.in_B)
            self.cache[key] = val
        return val


def _ascent(obj, theta, value, iters):
    """Coordinate ascent with a shared-move direction; step halves when stuck."""
    n = theta.size
    L = obj.L
    groups = [list(range(L))] + [[i] for i in range(L)]
    if obj.num_w:
        groups += [list(range(L, n))] + [[i] for i in range(L, n)]
    step = START_STEP
    for _ in range(iters):
        improved = False
        for g in groups:
            for sgn in (step, -step):
                cand = theta.copy()
                changed = False
                for i in g:
                    c = min(1.0, max(0.0, cand[i] + sgn))
                    if c != cand[i]:
                        cand[i] = c
                        changed = True
                if not changed:
                    continue
                v = obj(cand)
                if v > value:
                    theta, value, improved = cand, v, True
                    break
        if not improved:
            step /= 2
    return theta, value


def _grid_levels(grid_points):
    j = 1
    while (1 << j) + 1 <= grid_points:
        yield np.linspace(0.0, 1.0, (1 << j) + 1)
        j += 1


def _alignment_amplitudes(H, A):
    """Amplitudes making ``h o v0`` proportional to ``a`` (single receiver), else ``None``."""
    if H.shape[1] != 1:
        return None
    h = np.abs(H[:, 0])
    a = np.abs(A[:, 0]).astype(float)
    if np.any((h == 0) & (a != 0)):
        return None
    ratio = np.where(h > 0, a / np.where(h > 0, h, 1.0), 0.0)
    top = ratio.max()
    return ratio / top if top > 0 else None


def optimize_steering(H, G, P, A, B, budget=None, beams="matched", fallback=True):
    """Best steering found for fixed ``A`` and cooperating set ``B``.

    With ``fallback`` the non-cooperative candidates (``B`` empty with
    all-one and channel-aligned amplitudes) are included, so the result
    never falls below the superposition rate. Without it only steering with
    the given ``B`` is searched.
    """
    budget = budget or SearchBudget()
    if beams not in BEAM_MODES:
        raise ConfigurationError(f"beams must be one of {BEAM_MODES}")
    H = _as_channel(H)
    L, M = H.shape
    A = np.asarray(A, dtype=np.int64).reshape(L, M)
    B = frozenset(B)
    align = _alignment_amplitudes(H, A)

    best_theta, best_val, best_obj = None, -math.inf, None

    def consider(obj, theta, val):
        nonlocal best_theta, best_val, best_obj
        if val > best_val:
            best_theta, best_val, best_obj = theta, val, obj

    objectives = []
    if fallback or not B:
        noncoop = _Objective(H, G, P, A, frozenset(), beams)
        for th in [np.ones(L)] + ([align] if align is not None else []):
            consider(noncoop, th, noncoop(th))
        objectives.append(noncoop)
    if B:
        try:
            objectives.append(_Objective(H, G, P, A, B, beams))
        except InfeasibleError:
            if not objectives:
                raise
    for obj in objectives:
        n = L + obj.num_w
        fixed = [np.ones(n)]
        if obj.B:
            corner = np.ones(n)
            corner[sorted(obj.B)] = 0.0
            fixed.append(corner)
        if align is not None:
            fixed.append(np.concatenate([align, np.ones(obj.num_w)]))
        for th in fixed:
            v = obj(th)
            consider(obj, th, v)
            th2, v2 = _ascent(obj, th, v, budget.refine_iters)
            consider(obj, th2, v2)
        for level in _grid_levels(budget.grid_points):
            lvl_theta, lvl_val = None, -math.inf
            for x in level:
                th = np.concatenate([np.full(L, x), np.ones(obj.num_w)])
                v = obj(th)
                consider(obj, th, v)
                if v > lvl_val:
                    lvl_theta, lvl_val = th, v
            th2, v2 = _ascent(obj, lvl_theta, lvl_val, budget.refine_iters)
            consider(obj, th2, v2)

    V = best_obj.steering(best_theta)
    steering = SteeringConfig(best_obj.B, V)
    bd = rate_coop(H, G, P, A, steering)
    return OptimizationResult(float(bd.overall), A, best_obj.B, steering.V, bd)


def best_cooperative_rate(H, G, P, budget=None, strict=False, all_subsets=False,
                          subsets=None, beams="matched", coefficients=None, fallback=True):
    """Maximize over coefficient matrices, cooperating sets and steering.

    ``subsets`` overrides the searched cooperating sets; ``coefficients``
    overrides the enumerated matrices; ``fallback`` is passed to
    :func:`optimize_steering`. Ties keep the first candidate found.
    """
    budget = budget or SearchBudget()
    H = _as_channel(H)
    L, M = H.shape
    if coefficients is None:
        As = enumerate_coefficients(L, M, budget.coeff_bound, strict=strict)
        As = prune_coefficients(As, H, P)
    else:
        As = np.asarray(coefficients, dtype=np.int64).reshape(-1, L, M)
    if len(As) == 0:
        raise ParameterError("no admissible coefficient matrix")
    subsets = candidate_subsets(L, all_subsets) if subsets is None else [frozenset(s) for s in subsets]
    best = None
    for A in As:
        for B in subsets:
            res = optimize_steering(H, G, P, A, B, budget, beams, fallback)
            if best is None or res.best_rate > best.best_rate:
                best = res
    return best

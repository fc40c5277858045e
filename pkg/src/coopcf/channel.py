"""Channel matrices, Rayleigh fading draws and geometric scenarios.

Gains are real, nonnegative amplitudes. ``H[l, m]`` is the gain from
transmitter ``l`` to receiver ``m``; ``G[l_src, l_dst]`` is the gain from
transmitter ``l_src`` to transmitter ``l_dst`` and has a zero diagonal
(full-duplex convention). Indices are 0-based throughout the code.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DimensionError, ParameterError

__all__ = [
    "ChannelPair", "GeometryScenario", "draw_rayleigh", "place_on_arc",
    "preset_scenario", "PRESETS", "DEFAULT_MAX_GAIN",
]

#: Inter-transmitter amplitude used when two transmitters coincide.
DEFAULT_MAX_GAIN = 1e6


@dataclass(frozen=True)
class ChannelPair:
    """Forward gains ``H`` (L x M) and inter-transmitter gains ``G`` (L x L)."""

    H: np.ndarray
    G: np.ndarray

    def __post_init__(self):
        H = np.array(self.H, dtype=float)
        G = np.array(self.G, dtype=float)
        if H.ndim == 1:
            H = H[:, None]
        if H.ndim != 2 or G.ndim != 2:
            raise DimensionError("H and G must be matrices")
        L, M = H.shape
        if not (L >= M >= 1):
            raise DimensionError(f"need L >= M >= 1, got L={L}, M={M}")
        if G.shape != (L, L):
            raise DimensionError(f"G must be {L}x{L}, got {G.shape}")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(G))):
            raise ParameterError("channel gains must be finite")
        if np.any(np.diag(G) != 0):
            raise ParameterError("G must have a zero diagonal")
        H.setflags(write=False)
        G.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "G", G)

    @property
    def L(self):
        return self.H.shape[0]

    @property
    def M(self):
        return self.H.shape[1]


@dataclass(frozen=True)
class GeometryScenario:
    """Transmitters placed uniformly on an arc of a circle around the receiver."""

    num_transmitters: int
    arclength: float
    pathloss_exponent: float = 4.0
    circle_radius: float = 1.0
    max_gain: float = field(default=DEFAULT_MAX_GAIN)

    def __post_init__(self):
        if self.num_transmitters < 1:
            raise ParameterError("need at least one transmitter")
        if not (0.0 <= self.arclength <= np.pi):
            raise ParameterError("arclength must lie in [0, pi]")
        if self.pathloss_exponent <= 0:
            raise ParameterError("path-loss exponent must be positive")
        if self.circle_radius <= 0:
            raise ParameterError("circle radius must be positive")


def draw_rayleigh(L, M, rng_seed):
    """Draw an i.i.d. Rayleigh channel with unit mean-square amplitude.

    Squared amplitudes are Exponential(1); the diagonal of ``G`` is zero.
    The result depends only on ``(L, M, rng_seed)``.
    """
    if not (L >= M >= 1):
        raise DimensionError(f"need L >= M >= 1, got L={L}, M={M}")
    rng = np.random.default_rng(rng_seed)
    H = np.sqrt(rng.exponential(1.0, size=(L, M)))
    G = np.sqrt(rng.exponential(1.0, size=(L, L)))
    np.fill_diagonal(G, 0.0)
    return ChannelPair(H, G)


def _pathloss_amplitude(d, alpha, max_gain):
    d = np.asarray(d, dtype=float)
    with np.errstate(divide="ignore"):
        amp = np.where(d > 0, d ** (-alpha / 2.0), np.inf)
    return np.minimum(amp, max_gain)


def arc_positions(scenario, rng_seed):
    """Transmitter coordinates (L x 2), angles uniform on ``[0, arclength]``."""
    rng = np.random.default_rng(rng_seed)
    theta = rng.uniform(0.0, scenario.arclength, size=scenario.num_transmitters)
    return scenario.circle_radius * np.column_stack([np.cos(theta), np.sin(theta)])


def channel_from_positions(positions, alpha, max_gain=DEFAULT_MAX_GAIN):
    """Path-loss gains for transmitters at ``positions`` and a receiver at the origin."""
    positions = np.asarray(positions, dtype=float)
    d_rx = np.linalg.norm(positions, axis=1)
    h = _pathloss_amplitude(d_rx, alpha, max_gain)
    diff = positions[:, None, :] - positions[None, :, :]
    G = _pathloss_amplitude(np.linalg.norm(diff, axis=2), alpha, max_gain)
    np.fill_diagonal(G, 0.0)
    return ChannelPair(h[:, None], G)


def place_on_arc(scenario, rng_seed):
    """Random placement on the arc; returns the single-receiver channel."""
    pos = arc_positions(scenario, rng_seed)
    return channel_from_positions(pos, scenario.pathloss_exponent, scenario.max_gain)


def _example1(g):
    return ChannelPair(np.ones((2, 1)), np.array([[0.0, g], [g, 0.0]]))


def _example3(h21):
    H = np.ones((2, 1))
    H[1, 0] = h21
    return ChannelPair(H, 1.0 - np.eye(2))


def _example4(h21):
    H = np.ones((2, 2))
    H[1, 0] = h21
    return ChannelPair(H, 1.0 - np.eye(2))


PRESETS = {"example1": _example1, "example3": _example3, "example4": _example4}


def preset_scenario(name, sweep_value):
    """Fixed topologies of the numerical examples.

    ``sweep_value`` is the inter-transmitter amplitude ``g`` for
    ``example1`` and the forward amplitude ``h21`` (``H[1, 0]``) for
    ``example3`` and ``example4``.
    """
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown scenario {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(float(sweep_value))

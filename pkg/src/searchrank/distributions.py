"""Gumbel/normal kernels, truncated sampling, counter-based uniforms, and a 1-d Sobol sequence."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

EULER_GAMMA = float(np.euler_gamma)

_MASK64 = (1 << 64) - 1
_MIX_C1 = 0x9E3779B97F4A7C15
_MIX_C2 = 0xBF58476D1CE4E5B9
_MIX_C3 = 0x94D049BB133111EB
_KEY_CONSUMER = 0xA24BAED4963EE407
_KEY_INDEX = 0x9FB21C651E98DF25


class EmptyIntervalError(ValueError):
    """Truncation interval carries no representable probability mass."""


@dataclass(frozen=True)
class GumbelParams:
    """Location/scale of a (max-)Gumbel distribution."""

    location: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not (self.scale > 0.0):
            raise ValueError(f"scale must be > 0, got {self.scale}")


STD_GUMBEL = GumbelParams(0.0, 1.0)


def gumbel_cdf(t, p: GumbelParams = STD_GUMBEL):
    """CDF exp(-exp(-(t - location)/scale)); accepts scalars or arrays."""
    t = np.asarray(t, dtype=float)
    if np.any(np.isnan(t)):
        raise ValueError("non-finite t in gumbel_cdf")
    with np.errstate(over="ignore", under="ignore"):
        out = np.exp(-np.exp(-(t - p.location) / p.scale))
    return float(out) if out.ndim == 0 else out


def gumbel_quantile(u, p: GumbelParams = STD_GUMBEL):
    """Inverse CDF; u must lie strictly inside (0, 1)."""
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0.0) | (u >= 1.0)) or np.any(np.isnan(u)):
        raise ValueError("u must be in (0,1)")
    out = p.location - p.scale * np.log(-np.log(u))
    return float(out) if out.ndim == 0 else out


def _neg_exponent(bound, p: GumbelParams):
    """A(bound) = exp(-(bound - location)/scale), the Gumbel CDF's inner exponent."""
    if bound == math.inf:
        return 0.0
    if bound == -math.inf:
        return math.inf
    z = (bound - p.location) / p.scale
    if z < -700.0:
        return math.inf
    return math.exp(-z)


def gumbel_interval_mass(lower: float, upper: float, p: GumbelParams = STD_GUMBEL) -> float:
    """P(lower < X <= upper), computed stably in exponent space."""
    if not lower < upper:
        raise ValueError("need lower < upper")
    a_lo = _neg_exponent(lower, p)
    a_hi = _neg_exponent(upper, p)
    return math.exp(-a_hi) * -math.expm1(-(a_lo - a_hi))


def truncated_gumbel_draw(u, lower: float, upper: float, p: GumbelParams = STD_GUMBEL):
    """Inverse-transform draw from the Gumbel restricted to (lower, upper].

    Maps u in (0,1) to quantile(F(lower) + u * (F(upper) - F(lower))) without
    evaluating the CDFs directly, so deep-tail intervals keep full precision.
    Raises EmptyIntervalError when the interval mass underflows (< 1e-300).
    """
    if not lower < upper:
        raise ValueError("need lower < upper")
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr <= 0.0) | (u_arr >= 1.0)):
        raise ValueError("u must be in (0,1)")
    a_lo = _neg_exponent(lower, p)
    a_hi = _neg_exponent(upper, p)
    if gumbel_interval_mass(lower, upper, p) < 1e-300:
        raise EmptyIntervalError(f"interval ({lower}, {upper}] has no mass")
    # T solves exp(-T) = F(lower) + u*(F(upper)-F(lower)) in exponent space
    d = a_lo - a_hi
    expm1_term = -1.0 if d > 745.0 else math.expm1(-d)
    with np.errstate(divide="ignore"):
        t = a_hi - np.log1p((1.0 - u_arr) * expm1_term)
    out = p.location - p.scale * np.log(t)
    lo_open = np.nextafter(lower, math.inf)
    out = np.minimum(np.maximum(out, lo_open), upper)
    return float(out) if out.ndim == 0 else out


def gumbel_partial_expectation(threshold, p: GumbelParams = STD_GUMBEL):
    """Upper partial expectation integral(threshold, inf) of [1 - F(t)] dt.

    Evaluated through the exponential-integral series: with z the standardized
    threshold and a = exp(-z), the integral equals scale * (gamma + z*(-1)... )
    i.e. scale * (EULER_GAMMA - z + E1(a)), with series fallbacks in both tails
    to avoid overflow/cancellation.
    """
    scalar_in = np.ndim(threshold) == 0
    z = (np.asarray(threshold, dtype=float) - p.location) / p.scale
    if np.any(np.isnan(z)):
        raise ValueError("non-finite threshold")
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    low = z < -33.0  # E1(e^-z) below 1e-300: integral is mean - threshold
    high = z > 30.0  # cancellation regime: leading series terms suffice
    mid = ~(low | high)
    out[low] = EULER_GAMMA - z[low]
    a_hi = np.exp(-z[high])
    out[high] = a_hi * (1.0 - a_hi / 4.0 + a_hi * a_hi / 18.0)
    a_mid = np.exp(-z[mid])
    out[mid] = EULER_GAMMA - z[mid] + special.exp1(a_mid)
    out *= p.scale
    return float(out[0]) if scalar_in else out


def normal_quantile(u, mean: float = 0.0, sd: float = 1.0):
    """Inverse normal transform; sd = 0 collapses to the mean."""
    if sd < 0.0:
        raise ValueError("sd must be >= 0")
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr <= 0.0) | (u_arr >= 1.0)):
        raise ValueError("u must be in (0,1)")
    if sd == 0.0:
        out = np.full_like(u_arr, mean)
    else:
        out = mean + sd * special.ndtri(u_arr)
    return float(out) if out.ndim == 0 else out


def _mix64_int(x: int) -> int:
    x &= _MASK64
    x = ((x ^ (x >> 30)) * _MIX_C2) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX_C3) & _MASK64
    return x ^ (x >> 31)


def uniform01(seed: int, consumer_id: int, draw_index: int) -> float:
    """Counter-based uniform in (0,1): a pure function of its three keys."""
    h = _mix64_int(seed + _MIX_C1)
    h ^= _mix64_int(consumer_id + _KEY_CONSUMER)
    h ^= _mix64_int(draw_index + _KEY_INDEX)
    h = _mix64_int(_mix64_int(h + _MIX_C1))
    return ((h >> 11) + 0.5) / 9007199254740992.0  # 2**53


def uniform01_block(seed: int, consumer_id: int, start: int, n: int) -> np.ndarray:
    """Vectorized uniform01 for draw indices start..start+n-1."""

    def mix(x):
        x = (x ^ (x >> np.uint64(30))) * np.uint64(_MIX_C2)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(_MIX_C3)
        return x ^ (x >> np.uint64(31))

    idx = np.arange(start, start + n, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h0 = np.uint64(_mix64_int(seed + _MIX_C1))
        hc = np.uint64(_mix64_int(consumer_id + _KEY_CONSUMER))
        x = mix(idx + np.uint64(_KEY_INDEX))
        x = mix(mix((x ^ h0 ^ hc) + np.uint64(_MIX_C1)))
    return ((x >> np.uint64(11)).astype(np.float64) + 0.5) / 9007199254740992.0


@dataclass(frozen=True)
class UniformStream:
    """Common-random-number source keyed by (seed, consumer_id, draw_index).

    Evaluations at different parameter vectors reuse identical uniforms, which
    is what keeps the simulated likelihood smooth in the parameters.
    """

    seed: int

    def uniform(self, consumer_id: int, draw_index: int) -> float:
        return uniform01(self.seed, consumer_id, draw_index)

    def uniforms(self, consumer_id: int, start: int, n: int) -> np.ndarray:
        return uniform01_block(self.seed, consumer_id, start, n)


def sobol_point(index: int) -> float:
    """Dimension-1 Sobol point (direction numbers 2^-k, Gray-code ordering).

    index 0 maps to the sequence's first nonzero point so outputs stay in (0,1).
    """
    if index < 0:
        raise ValueError("index must be >= 0")
    g = (index + 1) ^ ((index + 1) >> 1)
    x = 0.0
    v = 0.5
    while g:
        if g & 1:
            x += v
        v *= 0.5
        g >>= 1
    return x


def sobol_points(n: int) -> np.ndarray:
    """First n points of the dimension-1 sequence, all strictly inside (0,1)."""
    return np.array([sobol_point(i) for i in range(n)])

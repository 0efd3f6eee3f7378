"""Scalar statistics: normal CDF / quantile, Clopper-Pearson lower bound, RNG streams."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import betainc

from .errors import DomainError

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)

# Acklam's rational approximation, |rel err| < 1.15e-9 before refinement.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF, Phi(x) = erfc(-x / sqrt 2) / 2."""
    return 0.5 * math.erfc(-x / SQRT2)


def std_normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / SQRT2PI


def _icdf_lower(p: float) -> float:
    # valid for 0 < p <= 0.5
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    else:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    # one Halley step on Phi
    e = 0.5 * math.erfc(-x / SQRT2) - p
    u = e * SQRT2PI * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def std_normal_icdf(p: float) -> float:
    """Inverse of the standard normal CDF on the open interval (0, 1)."""
    if not (0.0 < p < 1.0):
        raise DomainError(f"std_normal_icdf requires 0 < p < 1, got {p!r}")
    if p <= 0.5:
        return _icdf_lower(p)
    return -_icdf_lower(1.0 - p)


def clopper_pearson_lower(k: int, n: int, alpha: float, width: float = 1e-10) -> float:
    """One-sided exact lower confidence bound on a binomial proportion.

    Returns the largest p (to within ``width``) with P[Binomial(n, p) >= k] <= alpha,
    found by bisection on the regularized incomplete beta I_p(k, n - k + 1),
    which equals that upper binomial tail.
    """
    if isinstance(k, bool) or isinstance(n, bool):
        raise DomainError("k and n must be integers")
    k, n = int(k), int(n)
    if n < 1 or k < 0 or k > n:
        raise DomainError(f"need 0 <= k <= n and n >= 1, got k={k}, n={n}")
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if k == 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if betainc(k, n - k + 1, mid) <= alpha:
            lo = mid
        else:
            hi = mid
    return lo


class RngStream:
    """Counter-based random stream keyed by (global seed, stream id).

    Backed by the Philox bit generator, so every variate is a pure function of the
    two keys and the draw position. Normals are produced with Box-Muller on the
    stream's uniforms rather than a library normal sampler.
    """

    def __init__(self, seed: int, stream: int = 0):
        if seed < 0 or stream < 0:
            raise DomainError("seed and stream id must be non-negative")
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream = int(stream) & 0xFFFFFFFFFFFFFFFF
        key = self.seed | (self.stream << 64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"

    def derive(self, stream: int) -> "RngStream":
        """Fresh stream with the same global seed and a different id."""
        return RngStream(self.seed, stream)

    def uniform(self, size=None) -> np.ndarray:
        """Uniform variates on [0, 1)."""
        return self._gen.random(size)

    def normal(self, size) -> np.ndarray:
        """Standard normal variates via Box-Muller (both halves used)."""
        size = (size,) if np.isscalar(size) else tuple(size)
        count = int(np.prod(size)) if size else 1
        pairs = (count + 1) // 2
        u1 = 1.0 - self._gen.random(pairs)  # (0, 1], keeps log finite
        u2 = self._gen.random(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        z = np.empty(2 * pairs)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        return z[:count].reshape(size)

    def choice(self, weights, size) -> np.ndarray:
        """Indices drawn according to ``weights`` (one uniform consumed per index)."""
        cdf = np.cumsum(np.asarray(weights, dtype=float))
        cdf /= cdf[-1]
        u = self._gen.random(size)
        return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


def stream_id(index: int, phase: int = 0) -> int:
    """Stream id for one sample in one pipeline phase (phase tag in the high bits)."""
    return (int(phase) << 48) ^ int(index)

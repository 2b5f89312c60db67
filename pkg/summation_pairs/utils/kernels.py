"""
Auxiliary kernels behind the bridge between Fourier series and the
Nevanlinna factorization.

    G_0(w, z, x) = (e^{-2 pi i conj(w) |x|} 1_{x<0} + e^{2 pi i z |x|} 1_{x>=0}) / (z - conj(w))
    A_k          = k-fold convolution of e^{-2 pi |x|}
    G_k          = G_0 * A_k
    S_k(x)       = sinc(x)^{2(k+1)} / v_k,   S_k-hat = B-spline of order 2(k+1) / v_k

All functions are pure; the small caches only hold immutable results.
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.interpolate import BSpline

from summation_pairs.exceptions import DomainError
from summation_pairs.utils.qseries import (
    TruncatedPowerSeries,
    series_mul,
    series_pow,
)

logger = logging.getLogger(__name__)

R_POLY_MAX_INDEX = 16
SINGULAR_RADIUS = 1e-6


@dataclass(frozen=True)
class RPolynomial:
    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.size != self.k + 1 or coeffs[self.k] == 0.0:
            raise DomainError(f"r_{self.k} must have degree exactly {self.k}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def shifted_coeffs(self):
        """b_{k,j} with pi^{-k} r_k(2 pi x) = sum_j b_{k,j} x^j."""
        j = np.arange(self.k + 1)
        return self.coeffs * (2.0 * np.pi) ** j / np.pi ** self.k


@dataclass(frozen=True)
class KernelPoint:
    """Arguments (w, z) of G_k, both in the upper half-plane, and the last value computed there."""

    w: complex
    z: complex
    value: complex = 0j

    def __post_init__(self):
        _check_upper_half_plane(w=self.w, z=self.z)

    def evaluate(self, k, lam, singular_radius=SINGULAR_RADIUS):
        return replace(self, value=eval_G(k, self.w, self.z, float(lam), singular_radius))


def _check_upper_half_plane(**points):
    for name, point in points.items():
        if not np.imag(point) > 0:
            raise DomainError(f"{name}={point} is not in the upper half-plane")


def _check_away_from_i(radius, **points):
    for name, point in points.items():
        if abs(point - 1j) < radius:
            raise DomainError(
                f"{name}={point} lies within {radius} of i, where the closed form is singular"
            )


@lru_cache(maxsize=None)
def r_poly(k):
    """r_k from the generating series e^{(1 - sqrt(1-q)) X} / sqrt(1-q)."""
    if int(k) != k or k < 0:
        raise DomainError(f"k must be a non-negative integer, got {k}")
    if k > R_POLY_MAX_INDEX:
        raise DomainError(f"k={k} exceeds the supported maximum {R_POLY_MAX_INDEX}")
    k = int(k)
    base = np.zeros(k + 1)
    base[0] = 1.0
    if k:
        base[1] = -1.0
    one_minus_q = TruncatedPowerSeries(0.0, base)
    inv_sqrt = series_pow(one_minus_q, -0.5)
    # u = 1 - sqrt(1 - q), zero constant term
    shift_coeffs = -series_pow(one_minus_q, 0.5).coeffs
    shift = TruncatedPowerSeries(0.0, np.r_[0.0, shift_coeffs[1:]])

    coeffs = np.zeros(k + 1)
    power = inv_sqrt
    for m in range(k + 1):
        coeffs[m] = power.coeffs[k] / math.factorial(m)
        power = series_mul(power, shift)
    return RPolynomial(k, coeffs)


def eval_A(k, x):
    """A_k(x) = e^{-2 pi |x|} pi^{1-k} r_{k-1}(2 pi |x|)."""
    if int(k) != k or k < 1:
        raise DomainError(f"A_k is defined for k >= 1, got {k}")
    ax = np.abs(x)
    return np.exp(-2.0 * np.pi * ax) * np.pi ** (1 - k) * r_poly(int(k) - 1)(2.0 * np.pi * ax)


@lru_cache(maxsize=None)
def _cardinal_bspline(order):
    knots = np.arange(order + 1, dtype=float) - order / 2.0
    return BSpline.basis_element(knots, extrapolate=False)


def _bspline_values(order, t):
    t = np.asarray(t, dtype=float)
    values = np.nan_to_num(_cardinal_bspline(order)(t), nan=0.0)
    return np.where(np.abs(t) >= order / 2.0, 0.0, values)


@lru_cache(maxsize=None)
def s_normalizer(k):
    """v_k: the 2(k+1)-fold indicator convolution evaluated at 0."""
    if int(k) != k or k < 0:
        raise DomainError(f"k must be a non-negative integer, got {k}")
    return float(_bspline_values(2 * (int(k) + 1), 0.0))


def eval_S(k, x):
    """S_k(x) = sinc(x)^{2(k+1)} / v_k, equal to 1/v_k at x = 0."""
    return np.sinc(x) ** (2 * (k + 1)) / s_normalizer(k)


def eval_Shat(k, t):
    """Fourier transform of S_k: supported on [-(k+1), k+1], equal to 1 at 0."""
    return _bspline_values(2 * (k + 1), t) / s_normalizer(k)


def eval_Ghat(k, w, z, t):
    """(1 / (2 pi^{k+1} i)) / ((t - z)(t - conj w)(1 + t^2)^k)."""
    KernelPoint(complex(w), complex(z))
    t = np.asarray(t, dtype=float)
    return 1.0 / (
        2.0 * np.pi ** (k + 1) * 1j * (t - z) * (t - np.conj(w)) * (1.0 + t * t) ** k
    )


def _partial_exponential_sums(k, zeta, lam):
    # sum_j j! b_j / ((2 pi)^{j+1} zeta^{j+1}) sum_{l<=j} (2 pi lam zeta)^l / l!
    b = r_poly(k - 1).shifted_coeffs()
    x = 2.0 * np.pi * lam * zeta
    total = np.zeros_like(x, dtype=complex)
    inner = np.zeros_like(x, dtype=complex)
    term = np.ones_like(x, dtype=complex)
    for j in range(k):
        if j > 0:
            term = term * x / j
        inner = inner + term
        total = total + math.factorial(j) * b[j] / ((2.0 * np.pi) ** (j + 1) * zeta ** (j + 1)) * inner
    return total


def _g_nonnegative(k, w, z, lam):
    if k == 0:
        return np.exp(2j * np.pi * z * lam) / (z - np.conj(w))
    zeta_w = 1.0 + 1j * np.conj(w)
    zeta_z = 1.0 + 1j * z
    decay = np.exp(-2.0 * np.pi * lam)
    scaled = (
        decay * (_partial_exponential_sums(k, zeta_w, lam) - _partial_exponential_sums(k, zeta_z, lam))
        + np.exp(2j * np.pi * lam * z) / (np.pi ** k * (1.0 + z * z) ** k)
    )
    return scaled / (z - np.conj(w))


def eval_G(k, w, z, lam, singular_radius=SINGULAR_RADIUS):
    """
    G_k(w, z, lam) in closed form.

    lam >= 0 uses the three-term expression; lam < 0 uses
    G_k(w, z, -lam) = -conj(G_k(z, w, lam)). Accepts scalar or array lam.
    """
    if int(k) != k or k < 0:
        raise DomainError(f"k must be a non-negative integer, got {k}")
    k = int(k)
    KernelPoint(complex(w), complex(z))
    if k >= 1:
        _check_away_from_i(singular_radius, w=w, z=z)

    lam = np.asarray(lam, dtype=float)
    scalar = lam.ndim == 0
    lam = np.atleast_1d(lam)
    out = np.empty(lam.shape, dtype=complex)
    positive = lam >= 0
    out[positive] = _g_nonnegative(k, w, z, lam[positive])
    out[~positive] = -np.conj(_g_nonnegative(k, z, w, -lam[~positive]))
    return complex(out[0]) if scalar else out


def pf_identity_residual(k, z, singular_radius=SINGULAR_RADIUS):
    """
    |sum_j j! b_{k-1,j} / (2 pi)^{j+1} [(1+iz)^{-(j+1)} + (1-iz)^{-(j+1)}] - pi^{-k} (1+z^2)^{-k}|.
    """
    if int(k) != k or k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if abs(z - 1j) < singular_radius or abs(z + 1j) < singular_radius:
        raise DomainError(f"z={z} is a pole of the identity")
    k = int(k)
    b = r_poly(k - 1).shifted_coeffs()
    lhs = 0j
    for j in range(k):
        lhs += (
            math.factorial(j) * b[j] / (2.0 * np.pi) ** (j + 1)
            * ((1.0 + 1j * z) ** (-(j + 1)) + (1.0 - 1j * z) ** (-(j + 1)))
        )
    rhs = 1.0 / (np.pi ** k * (1.0 + z * z) ** k)
    return float(abs(lhs - rhs))

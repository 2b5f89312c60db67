"""
Formal q-series over float64: Euler products, eta quotients, theta series
and the sum-of-three-squares function.

A TruncatedPowerSeries stands for q^c * sum_{n<=n_max} coeffs[n] q^n. The
fractional prefactor c is tracked as a real number and never expanded.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from numba import jit

from summation_pairs.exceptions import DomainError

logger = logging.getLogger(__name__)

GUINAND_C_MAX = 1.0 / 8.0


@jit(nopython=True)
def _log_recurrence(s):
    # s[0] == 1; solves L' s = s' term by term
    n = s.shape[0]
    out = np.zeros(n)
    for m in range(1, n):
        acc = m * s[m]
        for k in range(1, m):
            acc -= k * out[k] * s[m - k]
        out[m] = acc / m
    return out


@jit(nopython=True)
def _exp_recurrence(log_coeffs):
    # log_coeffs[0] == 0; solves E' = L' E term by term
    n = log_coeffs.shape[0]
    out = np.zeros(n)
    out[0] = 1.0
    for m in range(1, n):
        acc = 0.0
        for k in range(1, m + 1):
            acc += k * log_coeffs[k] * out[m - k]
        out[m] = acc / m
    return out


@jit(nopython=True)
def _r3_counts(n_max):
    values = np.zeros(n_max + 1, dtype=np.int64)
    bound = int(np.sqrt(n_max))
    while (bound + 1) * (bound + 1) <= n_max:
        bound += 1
    for a in range(-bound, bound + 1):
        a2 = a * a
        for b in range(-bound, bound + 1):
            ab = a2 + b * b
            if ab > n_max:
                continue
            for c in range(-bound, bound + 1):
                s = ab + c * c
                if s <= n_max:
                    values[s] += 1
    return values


@dataclass(frozen=True)
class TruncatedPowerSeries:
    leading_exponent: float
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise DomainError("coeffs must be a non-empty 1-d array")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "leading_exponent", float(self.leading_exponent))

    @property
    def n_max(self):
        return self.coeffs.size - 1

    def __getitem__(self, n):
        return self.coeffs[n]

    def __mul__(self, other):
        return series_mul(self, other)

    def exponents(self):
        """Real exponents n + c attached to each coefficient."""
        return np.arange(self.n_max + 1) + self.leading_exponent


@dataclass(frozen=True)
class R3Table:
    values: np.ndarray
    n_max: int = field(init=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.int64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "n_max", values.size - 1)

    def __getitem__(self, n):
        return int(self.values[n])

    def partial_sum(self, x):
        """sum_{n <= x} r3(n)."""
        upper = min(int(np.floor(x)), self.n_max)
        return int(self.values[: upper + 1].sum())


def _check_order(n_max):
    if int(n_max) != n_max or n_max < 0:
        raise DomainError(f"n_max must be a non-negative integer, got {n_max}")
    return int(n_max)


def euler_coeffs(n_max):
    """prod_{n>=1}(1 - q^n) to order n_max via the pentagonal number theorem."""
    n_max = _check_order(n_max)
    coeffs = np.zeros(n_max + 1)
    coeffs[0] = 1.0
    j = 1
    while j * (3 * j - 1) // 2 <= n_max:
        sign = -1.0 if j % 2 else 1.0
        for exponent in (j * (3 * j - 1) // 2, j * (3 * j + 1) // 2):
            if exponent <= n_max:
                coeffs[exponent] += sign
        j += 1
    return TruncatedPowerSeries(0.0, coeffs)


def series_mul(s, t):
    """Product of two series, truncated to the smaller order."""
    n_max = min(s.n_max, t.n_max)
    coeffs = np.convolve(s.coeffs[: n_max + 1], t.coeffs[: n_max + 1])[: n_max + 1]
    return TruncatedPowerSeries(s.leading_exponent + t.leading_exponent, coeffs)


def _require_unit_constant(s):
    if s.coeffs[0] != 1.0:
        raise DomainError(f"series must start with coefficient 1, got {s.coeffs[0]}")


def series_log(s):
    """log s for a series with constant term 1 (leading exponent ignored)."""
    _require_unit_constant(s)
    return TruncatedPowerSeries(0.0, _log_recurrence(np.ascontiguousarray(s.coeffs)))


def series_exp(s):
    """exp s for a series with zero constant term."""
    if s.coeffs[0] != 0.0:
        raise DomainError("series_exp needs a zero constant term")
    return TruncatedPowerSeries(0.0, _exp_recurrence(np.ascontiguousarray(s.coeffs)))


def series_pow(s, e):
    """
    s**e = exp(e log s), same order as s.

    The q^c prefactor goes along as q^{c e}.
    """
    _require_unit_constant(s)
    log_coeffs = _log_recurrence(np.ascontiguousarray(s.coeffs))
    coeffs = _exp_recurrence(e * log_coeffs)
    return TruncatedPowerSeries(s.leading_exponent * e, coeffs)


def dilate(s, m):
    """s(q^m): coefficients spread onto every m-th slot of the same q-grid."""
    if int(m) != m or m < 1:
        raise DomainError(f"dilation must be a positive integer, got {m}")
    m = int(m)
    coeffs = np.zeros(s.n_max + 1)
    coeffs[::m] = s.coeffs[: s.n_max // m + 1]
    return TruncatedPowerSeries(s.leading_exponent * m, coeffs)


def guinand_coeffs(c, n_max):
    """
    alpha_{n,c} of eta(z)^{24c-2} eta(4z)^{24c-2} / eta(2z)^{48c-5}.

    The returned leading exponent is the tracked q-power, which equals c.
    """
    if not 0.0 <= c <= GUINAND_C_MAX:
        raise DomainError(
            f"c={c} outside [0, 1/8]; the coefficients grow exponentially there"
        )
    n_max = _check_order(n_max)
    outer = 24.0 * c - 2.0
    middle = 48.0 * c - 5.0
    # Exponentiate the summed logs once; single Euler-product powers have
    # partition-sized coefficients.
    log_euler = series_log(euler_coeffs(n_max))
    log_quotient = (
        outer * dilate(log_euler, 1).coeffs
        + outer * dilate(log_euler, 4).coeffs
        - middle * dilate(log_euler, 2).coeffs
    )
    leading = (outer * 1 + outer * 4 - middle * 2) / 24.0
    quotient = TruncatedPowerSeries(leading, _exp_recurrence(log_quotient))
    logger.debug(
        f"Guinand quotient c={c}: tracked exponent {quotient.leading_exponent}, n_max={n_max}"
    )
    return quotient


def theta_coeffs(n_max):
    """sum_{m in Z} q^{m^2} truncated at n_max, by enumerating m."""
    n_max = _check_order(n_max)
    coeffs = np.zeros(n_max + 1)
    m = 0
    while m * m <= n_max:
        coeffs[m * m] += 1.0 if m == 0 else 2.0
        m += 1
    return TruncatedPowerSeries(0.0, coeffs)


def r3_sequence(n_max):
    """r3(n) for n <= n_max by enumerating integer triples in the ball."""
    n_max = _check_order(n_max)
    return R3Table(_r3_counts(n_max))


def legendre_excluded(n):
    """True exactly when n = 4^a (8b + 7)."""
    if n <= 0:
        return False
    while n % 4 == 0:
        n //= 4
    return n % 8 == 7


def meyer_character(n):
    """-1/2 off 4N, 4 on 4N minus 16N, 0 on 16N."""
    if n % 16 == 0:
        return 0.0
    if n % 4 == 0:
        return 4.0
    return -0.5


@dataclass(frozen=True)
class HeckeReport:
    constant: float
    per_c: dict
    max_abs: dict


def hecke_constant(c_values, n_max):
    """
    Measure K in |alpha_{n,c}| <= K (n+1)^{1/4} over a grid of c.

    max_abs records max_n |alpha_{n,c}| for n >= 1 alongside.
    """
    weights = np.arange(n_max + 1, dtype=float) + 1.0
    per_c = {}
    max_abs = {}
    for c in c_values:
        alpha = guinand_coeffs(c, n_max).coeffs
        per_c[float(c)] = float(np.max(np.abs(alpha) / weights ** 0.25))
        max_abs[float(c)] = float(np.max(np.abs(alpha[1:]))) if n_max > 0 else 0.0
    constant = max(per_c.values()) if per_c else 0.0
    logger.info(f"Hecke constant over {len(per_c)} values of c up to n={n_max}: K={constant:.4f}")
    return HeckeReport(constant, per_c, max_abs)

"""
Smooth test functions, their Fourier transforms and the FS-pair check

    int phi-hat(t) dmu(t) = sum_lambda a(lambda) phi(lambda)

with phi-hat(xi) = int phi(x) e^{-2 pi i x xi} dx.
"""

import logging
import time
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from summation_pairs.exceptions import DomainError, QuadratureError
from summation_pairs.utils.measures import integrate_against

logger = logging.getLogger(__name__)

TESTFN_KINDS = ("bump", "plateau", "gaussian_diag")
GAUSSIAN_HALF_WIDTH = 7.0
TAIL_WINDOW = 1.0
TAIL_SPACING = 1.0 / 64.0
# Transforms are never asked for more than this fraction of P-hat(0).
RELATIVE_FLOOR = 1e-13


@dataclass(frozen=True)
class TestFunctionSpec:
    """phi(x) = P((x - shift) / scale) for a unit profile P."""

    kind: str
    scale: float = 1.0
    shift: float = 0.0
    inner: float = 0.5
    outer: float = 1.0

    def __post_init__(self):
        if self.kind not in TESTFN_KINDS:
            raise DomainError(f"Unknown test function kind {self.kind!r}")
        if not self.scale > 0:
            raise DomainError(f"scale must be positive, got {self.scale}")
        if self.kind == "plateau" and not 0 <= self.inner < self.outer <= 1:
            raise DomainError(
                f"plateau radii need 0 <= inner < outer <= 1, got {self.inner}, {self.outer}"
            )
        for name in ("scale", "shift", "inner", "outer"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def compact(self):
        return self.kind != "gaussian_diag"

    @property
    def support(self):
        if not self.compact:
            return -np.inf, np.inf
        return self.shift - self.scale, self.shift + self.scale


@dataclass(frozen=True)
class TestFunctionCombination:
    """Finite linear combination sum_i c_i phi_i."""

    terms: tuple = ()

    def __post_init__(self):
        terms = tuple((complex(c), spec) for c, spec in self.terms)
        for _, spec in terms:
            if not isinstance(spec, TestFunctionSpec):
                raise DomainError(f"combination terms must be TestFunctionSpec, got {spec!r}")
        object.__setattr__(self, "terms", terms)

    @property
    def compact(self):
        return all(spec.compact for _, spec in self.terms)

    @property
    def support(self):
        if not self.terms:
            return 0.0, 0.0
        lows, highs = zip(*(spec.support for _, spec in self.terms))
        return min(lows), max(highs)


@dataclass
class VerificationReport:
    pair_name: str
    testfn: object
    lhs: complex
    rhs: complex
    mu_truncation: float
    a_truncation: float
    quadrature_tol: float
    runtime_ms: int
    error_estimate: float = 0.0
    degraded: bool = False

    @property
    def abs_residual(self):
        return float(abs(self.lhs - self.rhs))

    def to_dict(self):
        data = asdict(self)
        data["abs_residual"] = self.abs_residual
        return data


def _bump(u):
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    gap = np.where(inside, 1.0 - u * u, 1.0)
    return np.where(inside, np.exp(-1.0 / gap), 0.0)


def _flat_exp(v):
    return np.where(v > 0, np.exp(-1.0 / np.where(v > 0, v, 1.0)), 0.0)


def _smooth_step(s):
    # 0 for s <= 0, 1 for s >= 1, C-infinity in between
    s = np.asarray(s, dtype=float)
    rising = _flat_exp(s)
    return rising / (rising + _flat_exp(1.0 - s))


def _unit_profile(kind, inner, outer):
    if kind == "bump":
        return _bump
    if kind == "plateau":
        return lambda u: _smooth_step((outer - np.abs(np.asarray(u, dtype=float))) / (outer - inner))
    return lambda u: np.exp(-np.pi * np.asarray(u, dtype=float) ** 2)


class UnitTransform:
    """
    P-hat(eta) = 2 int_0^X P(u) cos(2 pi eta u) du for a real even unit profile,
    memoised on |eta|. Oscillatory panels use QUADPACK's cosine-weighted rule.
    """

    def __init__(self, kind, inner=0.5, outer=1.0, limit=400):
        self.profile = _unit_profile(kind, inner, outer)
        if kind == "bump":
            self.half_width = 1.0
        elif kind == "plateau":
            self.half_width = outer
        else:
            self.half_width = GAUSSIAN_HALF_WIDTH
        self.limit = limit
        self._memo = {}
        self.mass = 2.0 * integrate.quad(self._scalar_profile, 0.0, self.half_width, limit=limit)[0]

    def _scalar_profile(self, u):
        return float(self.profile(u))

    def __call__(self, eta, epsabs):
        key = (abs(float(eta)), epsabs)
        if key not in self._memo:
            self._memo[key] = self._integrate(key[0], epsabs)
        return self._memo[key]

    def _integrate(self, eta, epsabs):
        width = self.half_width
        kwargs = {"epsabs": epsabs / 2.0, "epsrel": 1e-13, "limit": self.limit, "full_output": 1}
        if eta < 1.0:
            # panels no wider than 1 / (4 |eta| + 1)
            panel = 1.0 / (4.0 * eta + 1.0)
            points = np.arange(panel, width, panel)
            if points.size:
                kwargs["points"] = points
            result = integrate.quad(
                lambda u: self._scalar_profile(u) * np.cos(2.0 * np.pi * eta * u), 0.0, width, **kwargs
            )
        else:
            result = integrate.quad(
                self._scalar_profile, 0.0, width, weight="cos", wvar=2.0 * np.pi * eta, **kwargs
            )
        ok = len(result) < 4 or result[1] <= epsabs / 2.0
        if len(result) >= 4:
            logger.debug(f"unit transform at eta={eta} flagged at {epsabs} (error {2.0 * result[1]:.1e}): {result[3]}")
        return 2.0 * result[0], 2.0 * result[1], ok


@lru_cache(maxsize=32)
def unit_transform(kind, inner=0.5, outer=1.0):
    return UnitTransform(kind, inner, outer)


def _spec_transform(spec, xi, tol):
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    transform = unit_transform(spec.kind, spec.inner, spec.outer)
    epsabs = max(tol * 1e-3 / max(spec.scale, 1.0), RELATIVE_FLOOR * transform.mass)
    values = np.empty(xi.size, dtype=complex)
    errors = np.empty(xi.size)
    ok = True
    for i, x in enumerate(xi):
        unit_value, unit_error, unit_ok = transform(spec.scale * x, epsabs)
        phase = np.exp(-2j * np.pi * spec.shift * x) if spec.shift else 1.0
        values[i] = spec.scale * phase * unit_value
        errors[i] = spec.scale * unit_error
        ok = ok and unit_ok
    return values, errors, ok


def _transform(testfn, xi, tol):
    if isinstance(testfn, TestFunctionCombination):
        xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
        values = np.zeros(xi_arr.size, dtype=complex)
        errors = np.zeros(xi_arr.size)
        ok = True
        for coeff, spec in testfn.terms:
            v, e, term_ok = _spec_transform(spec, xi_arr, tol)
            values += coeff * v
            errors += abs(coeff) * e
            ok = ok and term_ok
        return values, errors, ok
    return _spec_transform(testfn, xi, tol)


def eval_testfn(testfn, x):
    """phi(x); bump and plateau are exactly zero outside [shift - scale, shift + scale]."""
    if isinstance(testfn, TestFunctionCombination):
        x = np.asarray(x, dtype=float)
        return sum((coeff * eval_testfn(spec, x) for coeff, spec in testfn.terms), np.zeros(x.shape, dtype=complex))
    profile = _unit_profile(testfn.kind, testfn.inner, testfn.outer)
    return profile((np.asarray(x, dtype=float) - testfn.shift) / testfn.scale)


def ft_testfn(testfn, xi, tol=1e-8):
    """
    phi-hat(xi) = scale * e^{-2 pi i shift xi} * P-hat(scale * xi).

    Raises QuadratureError (carrying the best estimate) when tol is not met.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    values, errors, ok = _transform(testfn, xi, tol)
    if not ok or np.max(errors, initial=0.0) > tol:
        raise QuadratureError(
            f"Fourier transform did not reach tol={tol}", estimate=values, error=float(np.max(errors))
        )
    return complex(values[0]) if np.ndim(xi) == 0 else values


def _tail_constant(testfn, m, radius, tol):
    """C_m = max |phi-hat(xi)| |xi|^m measured on [R, R + 1] with spacing 1/64."""
    grid = radius + np.arange(0.0, TAIL_WINDOW + TAIL_SPACING / 2, TAIL_SPACING)
    values, _, _ = _transform(testfn, grid, tol)
    return float(np.max(np.abs(values) * grid ** m))


def _lhs_tail_bound(pair, testfn, tol):
    # Beyond R the |mu| mass per unit length is extrapolated from the shell [R/2, R]
    # with polynomial growth of order degree_bound - 1.
    mu = pair.mu
    radius = mu.radius
    if not np.isfinite(radius) or radius <= 0 or mu.locations.size == 0:
        return 0.0
    m = mu.degree_bound + 2
    shell = (np.abs(mu.locations) > radius / 2.0) & (np.abs(mu.locations) <= radius)
    shell_mass = float(np.sum(np.abs(mu.weights[shell])))
    return shell_mass * _tail_constant(testfn, m, radius, tol) * radius ** (-m)


def verify_pair(pair, testfn, quadrature_tol=1e-8):
    """
    Both sides of the summation identity for one test function.

    Quadrature shortfalls never raise here: the report comes back with
    degraded set and a warning is logged.
    """
    if not testfn.compact and not pair.gaussian_ok:
        raise DomainError(
            f"pair {pair.name!r} is not flagged for Gaussian test functions; use bump or plateau"
        )
    start = time.perf_counter()
    degraded = False

    def phihat(xi):
        nonlocal degraded
        values, _, ok = _transform(testfn, xi, quadrature_tol)
        degraded = degraded or not ok
        return values if np.ndim(xi) else complex(values[0])

    lhs = integrate_against(pair.mu, phihat, tol=quadrature_tol)
    degraded = degraded or lhs.degraded
    tail_bound = _lhs_tail_bound(pair, testfn, quadrature_tol)

    lambdas = pair.a.lambdas
    rhs = complex(np.sum(pair.a.values * eval_testfn(testfn, lambdas))) if lambdas.size else 0j
    low, high = testfn.support
    if np.isfinite(pair.a.radius) and max(abs(low), abs(high)) > pair.a.radius:
        if testfn.compact:
            degraded = True
            logger.warning(
                f"test function support [{low}, {high}] reaches past the stored a-side radius {pair.a.radius}"
            )

    if degraded:
        logger.warning(f"verification of {pair.name!r} is degraded: quadrature tolerance not met")
    runtime_ms = int(round((time.perf_counter() - start) * 1000))
    report = VerificationReport(
        pair_name=pair.name,
        testfn=testfn,
        lhs=lhs.value,
        rhs=rhs,
        mu_truncation=float(pair.mu.radius),
        a_truncation=float(pair.a.radius),
        quadrature_tol=quadrature_tol,
        runtime_ms=runtime_ms,
        error_estimate=float(lhs.error + tail_bound + quadrature_tol * 1e-3 * pair.mu.locations.size),
        degraded=degraded,
    )
    logger.info(
        f"verify {pair.name}: |lhs - rhs| = {report.abs_residual:.3e} "
        f"(estimate {report.error_estimate:.1e}, {runtime_ms} ms)"
    )
    return report

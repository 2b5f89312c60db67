"""
The holomorphic function F attached to an FS-pair, in its two forms

    F(z) = a(0)/2 + sum_{lambda > 0} a(lambda) e^{2 pi i lambda z}                  (Im z > c1)
    F(z) = (z^2+1)^k / (2 pi i) int (1+tz)/(t-z) dmu(t)/(1+t^2)^{k+1} + i Q(z)     (Im z > 0)

and what can be read off from it: Bohr-Fourier coefficients, the measure,
the Nevanlinna matrix and its negative index, and the bridge sum.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from summation_pairs.exceptions import DomainError, FitError
from summation_pairs.utils.eigen import jacobi_eigh
from summation_pairs.utils.kernels import SINGULAR_RADIUS, eval_G, eval_Ghat, eval_Shat
from summation_pairs.utils.measures import Estimate, integrate_against

logger = logging.getLogger(__name__)

SERIES_CHUNK = 4096
EFFECTIVE_TERM_CUTOFF = 1e-18
FIT_CONDITION_MAX = 1e10
FIT_RESIDUAL_FLOOR = 1e-10
MIN_POINT_DISTANCE = 1e-8
ATOM_CLEARANCE = 1e-3
RECOVER_S_SEQUENCE = (1e-1, 1e-2, 1e-3)
EIGEN_TOL_REL = 1e-9


@dataclass(frozen=True)
class HolomorphicModel:
    pair: object
    k: int
    q_poly: np.ndarray = field(default_factory=lambda: np.zeros(1))
    valid_strip: float = 0.1
    fit_residual: float = 0.0
    tol: float = 1e-8
    limit: int = 400

    def __post_init__(self):
        q_poly = np.array(self.q_poly, dtype=float).reshape(-1)
        if q_poly.size > 2 * self.k + 1:
            raise DomainError(f"Q must have degree <= 2k = {2 * self.k}, got {q_poly.size - 1}")
        q_poly.setflags(write=False)
        object.__setattr__(self, "q_poly", q_poly)

    def q(self, z):
        return np.polynomial.polynomial.polyval(z, self.q_poly)


@dataclass(frozen=True)
class QFit:
    coeffs: np.ndarray
    residual: float
    error_budget: float
    condition: float


@dataclass(frozen=True)
class NevMatrix:
    points: np.ndarray
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        scale = max(np.max(np.abs(entries), initial=0.0), 1e-300)
        if not np.allclose(entries, entries.conj().T, rtol=0.0, atol=1e-13 * scale):
            raise DomainError("Nevanlinna matrix is not Hermitian")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def submatrix(self, indices):
        indices = list(indices)
        return NevMatrix(self.points[indices], self.entries[np.ix_(indices, indices)])


@dataclass(frozen=True)
class RecoveryReport:
    a: float
    b: float
    k: int
    s_values: list
    values: list
    extrapolated: float
    target: float


@dataclass(frozen=True)
class RepresentationGap:
    points: np.ndarray
    gaps: np.ndarray
    budgets: np.ndarray

    @property
    def within_budget(self):
        return bool(np.all(self.gaps <= 10.0 * self.budgets + FIT_RESIDUAL_FLOOR))


def _pair_of(obj):
    return getattr(obj, "pair", obj)


def _check_upper_half_plane(points):
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    if np.any(points.imag <= 0):
        raise DomainError("points must lie in the upper half-plane")
    return points


def _positive_terms(pair):
    mask = pair.a.lambdas > 0
    return pair.a.lambdas[mask], pair.a.values[mask]


def _series_values(pair, z, lambdas=None, values=None):
    if lambdas is None:
        lambdas, values = _positive_terms(pair)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.full(z.size, 0.5 * pair.a.value_at(0.0), dtype=complex)
    if lambdas.size == 0:
        return out
    for start in range(0, z.size, SERIES_CHUNK):
        block = z[start:start + SERIES_CHUNK]
        out[start:start + SERIES_CHUNK] += np.exp(2j * np.pi * np.outer(block, lambdas)) @ values
    return out


def series_tail_bound(pair, y):
    """e^{-(2 pi y - c2) Lambda} sum |a| e^{-c2 |lambda|}, Lambda the a-side truncation."""
    radius = pair.a.radius
    if not np.isfinite(radius) or pair.a.lambdas.size == 0:
        return 0.0
    c2 = pair.a.growth_constant
    if 2.0 * np.pi * y <= c2:
        return np.inf
    return float(np.exp(-(2.0 * np.pi * y - c2) * radius) * pair.a.decay_mass())


def f_series(pair, z):
    """F from the Fourier-series side; only trusted above the strip constant."""
    if not np.imag(z) > pair.strip_constant:
        raise DomainError(
            f"Im z = {np.imag(z)} is not above the strip constant {pair.strip_constant} of {pair.name!r}"
        )
    value = complex(_series_values(pair, z)[0])
    return Estimate(value, series_tail_bound(pair, np.imag(z)))


def _cauchy_kernel(k, z):
    def kernel(t):
        t = np.asarray(t, dtype=float)
        return (1.0 + t * z) / ((t - z) * (1.0 + t * t) ** (k + 1))

    return kernel


def integral_part(pair, k, z, tol=1e-8, limit=400):
    """(z^2+1)^k / (2 pi i) int (1+tz)/(t-z) dmu(t)/(1+t^2)^{k+1}, truncation included."""
    z = complex(z)
    if not z.imag > 0:
        raise DomainError(f"z={z} is not in the upper half-plane")
    result = integrate_against(
        pair.mu, _cauchy_kernel(k, z), tol=tol, limit=limit, points=[z.real], truncation_tail=True
    )
    factor = (z * z + 1.0) ** k / (2j * np.pi)
    return Estimate(factor * result.value, abs(factor) * result.error, result.degraded)


def f_integral(model, z):
    """F from the Nevanlinna-integral side, valid on the whole upper half-plane."""
    part = integral_part(model.pair, model.k, z, model.tol, model.limit)
    return Estimate(part.value + 1j * complex(model.q(complex(z))), part.error, part.degraded)


def choose_k(pair):
    """Smallest k with 2(k+1) >= degree_bound."""
    return max(0, math.ceil(pair.mu.degree_bound / 2) - 1)


def fit_q(pair, k, sample, tol=1e-8, limit=400):
    """
    Real least-squares fit of Q (degree <= 2k) to f_series - integral_part.

    The residual must stay within 10x the combined error estimates of the
    two sides, else FitError.
    """
    sample = _check_upper_half_plane(sample)
    if sample.size < 4 * k + 4:
        raise DomainError(f"fit_q needs at least {4 * k + 4} sample points, got {sample.size}")
    if np.any(sample.imag <= pair.strip_constant):
        raise DomainError(f"sample points must lie above the strip constant {pair.strip_constant}")

    differences = np.empty(sample.size, dtype=complex)
    budgets = np.empty(sample.size)
    for j, z in enumerate(sample):
        series = f_series(pair, z)
        part = integral_part(pair, k, z, tol, limit)
        differences[j] = series.value - part.value
        budgets[j] = series.error + part.error

    powers = np.vander(sample, 2 * k + 1, increasing=True)
    # i q_m z^m contributes -Im(z^m) to the real part and Re(z^m) to the imaginary part
    design = np.vstack([-powers.imag, powers.real])
    target = np.r_[differences.real, differences.imag]
    column_norms = np.linalg.norm(design, axis=0)
    column_norms[column_norms == 0] = 1.0
    condition = float(np.linalg.cond(design / column_norms))
    if not condition < FIT_CONDITION_MAX:
        raise FitError(f"sample too clustered for a degree {2 * k} fit (condition number {condition:.2e})")

    scaled, *_ = np.linalg.lstsq(design / column_norms, target, rcond=None)
    coeffs = scaled / column_norms
    residual = float(np.max(np.abs(differences - 1j * (powers @ coeffs))))
    budget = float(np.max(budgets))
    if residual > 10.0 * budget + FIT_RESIDUAL_FLOOR:
        raise FitError(
            f"Q fit residual {residual:.3e} exceeds 10x the error budget {budget:.3e}; "
            f"wrong k or truncation too coarse for {pair.name!r}"
        )
    logger.debug(f"fit_q {pair.name} k={k}: Q={coeffs}, residual {residual:.2e}, budget {budget:.2e}")
    return QFit(coeffs, residual, budget, condition)


def default_fit_sample(pair, k):
    """Two rows of 4k+4 points above the strip, |Re z| <= 1."""
    count = 4 * k + 4
    x = np.linspace(-1.0, 1.0, count)
    base = pair.strip_constant
    return np.r_[x + 1j * (base + 0.5), x + 1j * (base + 1.0)]


def validation_grid(pair, size=5, half_width=2.0, top=4.0):
    """size x size grid in {|Re z| <= half_width, c1 < Im z <= top}; its heights differ from the fit sample."""
    x = np.linspace(-half_width, half_width, size)
    y = np.linspace(pair.strip_constant, top, size + 1)[1:]
    return (x[None, :] + 1j * y[:, None]).reshape(-1)


def representation_gap(model, points):
    """|f_series - f_integral| with the combined error estimates, point by point."""
    points = _check_upper_half_plane(points)
    gaps = np.empty(points.size)
    budgets = np.empty(points.size)
    for j, z in enumerate(points):
        series = f_series(model.pair, z)
        integral = f_integral(model, z)
        gaps[j] = abs(series.value - integral.value)
        budgets[j] = series.error + integral.error
    return RepresentationGap(points, gaps, budgets)


def build_model(pair, k=None, sample=None, tol=1e-8, limit=400):
    """Choose k, fit Q and validate both representations out of sample."""
    k = choose_k(pair) if k is None else int(k)
    if sample is None:
        sample = default_fit_sample(pair, k)
    fit = fit_q(pair, k, sample, tol, limit)
    model = HolomorphicModel(
        pair, k, fit.coeffs, valid_strip=pair.strip_constant, fit_residual=fit.residual, tol=tol, limit=limit
    )
    check = representation_gap(model, validation_grid(pair))
    level = logging.DEBUG if check.within_budget else logging.WARNING
    logger.log(
        level,
        f"model {pair.name} k={k}: out-of-sample gap {np.max(check.gaps):.2e} "
        f"(budget {np.max(check.budgets):.2e})",
    )
    return model


def _effective_lambda_max(pair, y):
    lambdas, values = _positive_terms(pair)
    if lambdas.size == 0:
        return 0.0, lambdas, values
    sizes = np.abs(values) * np.exp(-2.0 * np.pi * lambdas * y)
    lead = max(np.max(sizes), abs(pair.a.value_at(0.0)))
    keep = sizes >= EFFECTIVE_TERM_CUTOFF * lead
    if not keep.any():
        return 0.0, lambdas[:0], values[:0]
    return float(np.max(lambdas[keep])), lambdas[keep], values[keep]


def ef_coeff(model_or_pair, lam, y, T, panel_order=10):
    """
    (1/2T) int_{-T}^{T} F(x+iy) e^{-2 pi i lam (x+iy)} dx with F from f_series.

    Gauss-Legendre panels no wider than 1/(4(|lam| + lambda_max)), where
    lambda_max ignores terms below 1e-18 of the leading one at height y.
    """
    pair = _pair_of(model_or_pair)
    if not y > pair.strip_constant:
        raise DomainError(f"y={y} is not above the strip constant {pair.strip_constant}")
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    lam_max, lambdas, values = _effective_lambda_max(pair, y)
    width = 1.0 / (4.0 * (abs(lam) + lam_max) + 1e-300)
    panels = max(1, int(np.ceil(2.0 * T / width)))
    edges = np.linspace(-T, T, panels + 1)
    nodes, weights = np.polynomial.legendre.leggauss(panel_order)
    half = (edges[1] - edges[0]) / 2.0
    starts = edges[:-1]

    total = 0j
    for start in range(0, panels, SERIES_CHUNK // panel_order):
        centres = starts[start:start + SERIES_CHUNK // panel_order] + half
        x = (centres[:, None] + half * nodes[None, :]).reshape(-1)
        z = x + 1j * y
        f = _series_values(pair, z, lambdas, values)
        total += np.sum(np.tile(weights, centres.size) * half * f * np.exp(-2j * np.pi * lam * z))
    logger.debug(f"ef_coeff lam={lam} y={y} T={T}: {panels} panels, lambda_max {lam_max}")
    return complex(total / (2.0 * T))


def _recovery_integrand(pair, k, s, tol, limit):
    def integrand(x):
        z = complex(x, s)
        value = integrate_against(
            pair.mu, _cauchy_kernel(k, z), tol=tol, limit=limit, points=[x], truncation_tail=True
        ).value
        # (F - iQ) / (z^2+1)^{k+1}, with the (z^2+1)^k of F cancelled
        return float(np.real(value / (2j * np.pi * (z * z + 1.0))))

    return integrand


def recover_value(model, a, b, s, tol=1e-10, limit=1000):
    """Re int_{a+is}^{b+is} (F - iQ)(z) / (z^2+1)^{k+1} dz for one height s."""
    if not a < b:
        raise DomainError(f"need a < b, got a={a}, b={b}")
    if not 0 < s <= 0.1:
        raise DomainError(f"s must lie in (0, 0.1], got {s}")
    locations = model.pair.mu.locations
    for end in (a, b):
        if locations.size and np.min(np.abs(locations - end)) < ATOM_CLEARANCE:
            raise DomainError(f"endpoint {end} lies within {ATOM_CLEARANCE} of an atom")
    atoms = [float(t) for t in locations if a < t < b]
    value, error = integrate.quad(
        _recovery_integrand(model.pair, model.k, s, tol, limit),
        a,
        b,
        points=atoms or None,
        epsabs=tol,
        epsrel=1e-10,
        limit=limit,
    )
    logger.debug(f"recover [{a}, {b}] at s={s}: {value} (+- {error:.1e})")
    return float(value)


def recover_measure(model, a, b, s_values=RECOVER_S_SEQUENCE, tol=1e-10, limit=1000):
    """
    Values at each height s plus the Richardson extrapolation of the last two,
    converging to (1/2) int_a^b dmu / (1+t^2)^{k+1}.
    """
    s_values = [float(s) for s in s_values]
    values = [recover_value(model, a, b, s, tol, limit) for s in s_values]
    if len(values) >= 2:
        ratio = s_values[-2] / s_values[-1]
        extrapolated = (ratio * values[-1] - values[-2]) / (ratio - 1.0)
    else:
        extrapolated = values[-1]
    mu = model.pair.mu
    inside = (mu.locations > a) & (mu.locations < b)
    target = 0.5 * float(np.sum(mu.weights[inside].real / (1.0 + mu.locations[inside] ** 2) ** (model.k + 1)))
    if mu.density is not None:
        def weight(t):
            return 0.5 / (1.0 + np.asarray(t) ** 2) ** (model.k + 1)

        target += integrate_against(mu.__class__([], [], density=mu.density), weight).value.real
    return RecoveryReport(float(a), float(b), model.k, s_values, values, float(extrapolated), target)


def nev_matrix(model, points, min_distance=MIN_POINT_DISTANCE):
    """Entries i (F(z_n) + conj F(z_m)) / (z_n - conj z_m) with F from f_integral."""
    points = _check_upper_half_plane(points)
    distances = np.abs(points[:, None] - points[None, :])
    np.fill_diagonal(distances, np.inf)
    if points.size > 1 and np.min(distances) < min_distance:
        raise DomainError(f"points closer than {min_distance} make the matrix ill-conditioned")
    values = np.array([f_integral(model, z).value for z in points])
    entries = 1j * (values[:, None] + np.conj(values)[None, :]) / (points[:, None] - np.conj(points)[None, :])
    return NevMatrix(points, entries)


def neg_index(matrix, tol_rel=EIGEN_TOL_REL):
    """Number of eigenvalues below -tol_rel * ||M||."""
    if not tol_rel > 0:
        raise DomainError(f"tol_rel must be positive, got {tol_rel}")
    entries = matrix.entries if isinstance(matrix, NevMatrix) else np.asarray(matrix)
    eigenvalues, _ = jacobi_eigh(entries)
    norm = float(np.max(np.abs(eigenvalues), initial=0.0))
    return int(np.sum(eigenvalues < -tol_rel * norm))


def bridge_sum(pair, k, w, z, T, singular_radius=SINGULAR_RADIUS):
    """sum over |lambda| <= T(k+1) of a(lambda) G_k(w, z, lambda) S_k-hat(lambda / T)."""
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    lambdas = pair.a.lambdas
    inside = np.abs(lambdas) <= T * (k + 1)
    if not inside.any():
        eval_G(k, w, z, 0.0, singular_radius)
        return 0j
    lam = lambdas[inside]
    kernel = eval_G(k, w, z, lam, singular_radius)
    return complex(np.sum(pair.a.values[inside] * kernel * eval_Shat(k, lam / T)))


def bridge_rhs(pair, k, w, z, tol=1e-10, limit=400):
    """(1 / 2 pi^{k+1} i) int dmu(t) / ((t-z)(t-conj w)(1+t^2)^k)."""
    eval_Ghat(k, w, z, 0.0)

    def kernel(t):
        return eval_Ghat(k, w, z, t)

    return integrate_against(pair.mu, kernel, tol=tol, limit=limit, truncation_tail=True).value


def ap_proxy(pair, y, trunc_list, grid_points=1024, half_width=8.0):
    """
    sup over an x-grid of |F_N(x+iy) - F(x+iy)| for each N, F_N keeping the
    first N positive frequencies. The tail sum is evaluated directly.
    """
    if not y > pair.strip_constant:
        raise DomainError(f"y={y} is not above the strip constant {pair.strip_constant}")
    lambdas, values = _positive_terms(pair)
    x = -half_width + 2.0 * half_width * np.arange(grid_points) / grid_points
    z = x + 1j * y
    sups = []
    for n in trunc_list:
        n = int(n)
        if n >= lambdas.size:
            sups.append(0.0)
            continue
        tail = np.exp(2j * np.pi * np.outer(z, lambdas[n:])) @ values[n:]
        sups.append(float(np.max(np.abs(tail))))
    return sups


def shifted_kernel_identity_residual(m, r, t, z):
    """
    |(z^2+r^2)^m (r^2+tz) / ((r^2+t^2)^{m+1} (t-z))
      - [1/(t-z) - (t+z)/(r^2+t^2) sum_{j<m} ((z^2+r^2)/(r^2+t^2))^j - t (r^2+z^2)^m / (r^2+t^2)^{m+1}]|

    divided by the largest of the three right-hand terms (at least 1).
    """
    base = r * r + t * t
    ratio = (z * z + r * r) / base
    lhs = (z * z + r * r) ** m * (r * r + t * z) / (base ** (m + 1) * (t - z))
    geometric = sum(ratio ** j for j in range(m))
    terms = (1.0 / (t - z), (t + z) / base * geometric, t * (r * r + z * z) ** m / base ** (m + 1))
    scale = max(1.0, *(abs(term) for term in terms))
    return float(abs(lhs - (terms[0] - terms[1] - terms[2])) / scale)


def leading_growth(model, y):
    """y^{-2k-1} Re F(iy): tends to the top coefficient behaviour of Q as y grows."""
    value = f_integral(model, 1j * y).value
    return float(np.real(value) * y ** (-2 * model.k - 1))

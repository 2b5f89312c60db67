"""
Strongly tempered measures, summation functions and the FS-pairs built from them.

An FS-pair (mu, a) satisfies  int phi-hat dmu = sum_lambda a(lambda) phi(lambda)
for every smooth compactly supported phi. Infinite measures are always stored
truncated; the radius and a human-readable note travel with the measure.
"""

import logging
import os
from dataclasses import dataclass, replace

import json5 as json
import numpy as np
from scipy import integrate

from summation_pairs.exceptions import AntipodalityError, DomainError, SchemaError
from summation_pairs.utils.qseries import (
    guinand_coeffs,
    meyer_character,
    r3_sequence,
)

logger = logging.getLogger(__name__)

DENSITY_KINDS = ("r_tanh_pi_r", "grid")
MERGE_DISTANCE = 1e-12
# Builder coefficients below this are treated as exact zeros (round-off of the q-series).
ZERO_WEIGHT = 1e-10
TAIL_NODES = 64
# Outer-shell atoms on each side are split into this many bands for the tail estimate.
SHELL_BANDS = 4

DEFAULT_STRIP_CONSTANT = 0.1
DEFAULT_GROWTH_CONSTANT = 0.5

PAIR_FIELDS = {"name", "antipodal", "strip_constant", "mu", "a"}
MU_FIELDS = {"degree_bound", "atoms", "density"}
ATOM_FIELDS = {"t", "re", "im"}
DENSITY_FIELDS = {"kind", "scale", "grid"}
GRID_FIELDS = {"t", "value"}
A_FIELDS = {"growth_constant", "support"}
SUPPORT_FIELDS = {"lambda", "re", "im"}


def _frozen_array(values, dtype):
    arr = np.array(values, dtype=dtype).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Density:
    """Real absolutely continuous part of a measure."""

    kind: str
    scale: float = 1.0
    grid_t: np.ndarray = None
    grid_values: np.ndarray = None

    def __post_init__(self):
        if self.kind not in DENSITY_KINDS:
            raise DomainError(f"Unknown density kind {self.kind!r}")
        object.__setattr__(self, "scale", float(self.scale))
        if self.kind == "grid":
            if self.grid_t is None or self.grid_values is None:
                raise DomainError("grid density needs grid_t and grid_values")
            grid_t = _frozen_array(self.grid_t, float)
            grid_values = _frozen_array(self.grid_values, float)
            if grid_t.size < 2 or grid_t.size != grid_values.size:
                raise DomainError("grid density needs at least two matching samples")
            if np.any(np.diff(grid_t) <= 0):
                raise DomainError("grid density samples must be strictly increasing in t")
            object.__setattr__(self, "grid_t", grid_t)
            object.__setattr__(self, "grid_values", grid_values)

    @property
    def support(self):
        if self.kind == "grid":
            return float(self.grid_t[0]), float(self.grid_t[-1])
        return -np.inf, np.inf

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "r_tanh_pi_r":
            return self.scale * t * np.tanh(np.pi * t)
        return self.scale * np.interp(t, self.grid_t, self.grid_values, left=0.0, right=0.0)


@dataclass(frozen=True)
class TemperedMeasure:
    locations: np.ndarray
    weights: np.ndarray
    density: Density = None
    degree_bound: int = 0
    truncation_note: str = ""
    radius: float = np.inf
    # Asymptotic mean density beyond tail_start, used to account for the
    # truncated part when integrating slowly decaying kernels.
    mean_density: float = 0.0
    tail_start: float = np.inf
    tail_spacing: float = 0.0

    def __post_init__(self):
        locations = _frozen_array(self.locations, float)
        weights = _frozen_array(self.weights, complex)
        if locations.size != weights.size:
            raise DomainError("atom locations and weights differ in length")
        if np.any(np.diff(locations) <= 0):
            raise DomainError("atom locations must be strictly increasing")
        if np.any(weights == 0):
            raise DomainError("zero atom weights must not be stored")
        object.__setattr__(self, "locations", locations)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "degree_bound", int(self.degree_bound))

    @property
    def is_real(self):
        return bool(np.all(self.weights.imag == 0))

    @property
    def atoms(self):
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    def weight_at(self, t):
        idx = np.searchsorted(self.locations, t)
        if idx < self.locations.size and abs(self.locations[idx] - t) <= MERGE_DISTANCE:
            return complex(self.weights[idx])
        if idx > 0 and abs(self.locations[idx - 1] - t) <= MERGE_DISTANCE:
            return complex(self.weights[idx - 1])
        return 0j


@dataclass(frozen=True)
class SummationFunction:
    lambdas: np.ndarray
    values: np.ndarray
    growth_constant: float = DEFAULT_GROWTH_CONSTANT
    radius: float = np.inf

    def __post_init__(self):
        lambdas = _frozen_array(self.lambdas, float)
        values = _frozen_array(self.values, complex)
        if lambdas.size != values.size:
            raise DomainError("support and values differ in length")
        if np.any(np.diff(lambdas) <= 0):
            raise DomainError("support must be strictly increasing")
        if np.any(values == 0):
            raise DomainError("zero values of a must not be stored")
        if not self.growth_constant > 0:
            raise DomainError(f"growth constant must be positive, got {self.growth_constant}")
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "values", values)

    @property
    def support(self):
        return list(zip(self.lambdas.tolist(), self.values.tolist()))

    def value_at(self, lam):
        idx = np.searchsorted(self.lambdas, lam)
        if idx < self.lambdas.size and abs(self.lambdas[idx] - lam) <= MERGE_DISTANCE:
            return complex(self.values[idx])
        if idx > 0 and abs(self.lambdas[idx - 1] - lam) <= MERGE_DISTANCE:
            return complex(self.values[idx - 1])
        return 0j

    def decay_mass(self):
        """sum |a(lambda)| e^{-c2 |lambda|} over the stored support."""
        return float(np.sum(np.abs(self.values) * np.exp(-self.growth_constant * np.abs(self.lambdas))))


@dataclass(frozen=True)
class FSPair:
    name: str
    mu: TemperedMeasure
    a: SummationFunction
    antipodal: bool = False
    strip_constant: float = DEFAULT_STRIP_CONSTANT
    gaussian_ok: bool = False

    def __post_init__(self):
        if not self.strip_constant > 0:
            raise DomainError(f"strip constant must be positive, got {self.strip_constant}")
        if self.antipodal:
            check_antipodal(self.mu, self.a)

    @property
    def is_empty(self):
        return self.mu.locations.size == 0 and self.mu.density is None and self.a.lambdas.size == 0


@dataclass(frozen=True)
class Estimate:
    value: complex
    error: float
    degraded: bool = False


@dataclass(frozen=True)
class DegreeProbe:
    n: int
    t_grid: list
    partial_integrals: list
    ratios: list
    verdict: str


def check_antipodal(mu, a):
    """Raise AntipodalityError unless mu is real and a(-lambda) == conj(a(lambda)) exactly."""
    if not mu.is_real:
        bad = mu.locations[np.argmax(mu.weights.imag != 0)]
        raise AntipodalityError(f"weight at t={bad} is not real", field="mu.atoms")
    lambdas = a.lambdas
    for lam, value in zip(lambdas, a.values):
        idx = np.searchsorted(lambdas, -lam)
        mirrored = a.values[idx] if idx < lambdas.size and lambdas[idx] == -lam else 0j
        if mirrored != np.conj(value):
            raise AntipodalityError(
                f"a({-lam}) = {mirrored} differs from conj(a({lam})) = {np.conj(value)}",
                field="a.support",
            )


def _merge_atoms(locations, weights, merge_distance=MERGE_DISTANCE):
    """Sum weights of atoms closer than merge_distance and drop zero weights."""
    locations = np.asarray(locations, dtype=float)
    weights = np.asarray(weights, dtype=complex)
    if locations.size == 0:
        return locations, weights
    order = np.argsort(locations, kind="stable")
    locations = locations[order]
    weights = weights[order]
    breaks = np.r_[True, np.diff(locations) > merge_distance]
    groups = np.cumsum(breaks) - 1
    merged_w = np.zeros(groups[-1] + 1, dtype=complex)
    np.add.at(merged_w, groups, weights)
    merged_t = locations[breaks] + 0.0
    keep = merged_w != 0
    return merged_t[keep], merged_w[keep]


def make_poisson(t_max, lambda_max):
    """Dirac comb on the integers, self-dual: sum phi(n) = sum phi-hat(n)."""
    if not (t_max > 0 and lambda_max > 0):
        raise DomainError("t_max and lambda_max must be positive")
    n_mu = int(np.floor(t_max))
    n_a = int(np.floor(lambda_max))
    locations = np.arange(-n_mu, n_mu + 1, dtype=float)
    lambdas = np.arange(-n_a, n_a + 1, dtype=float)
    mu = TemperedMeasure(
        locations,
        np.ones(locations.size),
        degree_bound=2,
        truncation_note=f"integers |n| <= {t_max}",
        radius=float(t_max),
        mean_density=1.0,
        tail_start=n_mu + 0.5,
        tail_spacing=1.0,
    )
    a = SummationFunction(lambdas, np.ones(lambdas.size), radius=float(lambda_max))
    return FSPair("poisson", mu, a, antipodal=True, gaussian_ok=True)


def make_guinand(c, n_max):
    """
    Self-dual pair mu_c = sum alpha_{n,c} (delta_{sqrt(n+c)} + delta_{-sqrt(n+c)}).

    At c = 0 the two atoms at the origin coincide, so mu_0 is twice the
    integer comb rather than the comb itself. No rescaling is applied.
    """
    alpha = guinand_coeffs(c, n_max).coeffs
    roots = np.sqrt(np.arange(alpha.size) + c)
    tiny = np.abs(alpha) <= ZERO_WEIGHT
    if np.any(tiny[1:]):
        logger.debug(f"Guinand c={c}: {int(tiny.sum())} coefficients below {ZERO_WEIGHT} dropped")
    alpha = np.where(tiny, 0.0, alpha)
    locations, weights = _merge_atoms(np.r_[-roots, roots], np.r_[alpha, alpha])
    radius = float(roots[-1])
    mu = TemperedMeasure(
        locations,
        weights.real,
        degree_bound=3,
        truncation_note=f"n <= {n_max}, |t| <= sqrt({n_max} + {c})",
        radius=radius,
        mean_density=2.0 if c == 0 else 0.0,
        tail_start=np.floor(radius) + 0.5 if c == 0 else np.inf,
        tail_spacing=1.0 if c == 0 else 0.0,
    )
    a = SummationFunction(locations, weights.real, radius=radius)
    return FSPair(f"guinand_c={c:.6g}", mu, a, antipodal=True, gaussian_ok=True)


def make_meyer(n_max):
    """
    Odd crystalline measure with mu-hat = -i mu:
    mu = sum chi(n) r3(n)/sqrt(n) (delta_{sqrt(n)/2} - delta_{-sqrt(n)/2}).
    """
    if int(n_max) != n_max or n_max < 1:
        raise DomainError(f"n_max must be a positive integer, got {n_max}")
    n_max = int(n_max)
    r3 = r3_sequence(n_max).values
    n = np.arange(1, n_max + 1)
    chi = np.array([meyer_character(int(m)) for m in n])
    weights = chi * r3[1:] / np.sqrt(n)
    keep = weights != 0
    n, weights = n[keep], weights[keep]
    half_roots = np.sqrt(n) / 2.0
    locations = np.r_[-half_roots[::-1], half_roots]
    weights = np.r_[-weights[::-1], weights]
    radius = float(np.sqrt(n_max) / 2.0)
    mu = TemperedMeasure(
        locations,
        weights,
        degree_bound=3,
        truncation_note=f"n <= {n_max}, |t| <= sqrt({n_max})/2",
        radius=radius,
    )
    a = SummationFunction(locations, -1j * weights, radius=radius)
    return FSPair("meyer", mu, a, antipodal=True, gaussian_ok=True)


def _require(obj, name, kind, path):
    if name not in obj:
        raise SchemaError("missing required field", field=f"{path}.{name}" if path else name)
    value = obj[name]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"expected a number, got {value!r}", field=f"{path}.{name}" if path else name)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(f"expected an integer, got {value!r}", field=f"{path}.{name}" if path else name)
        return value
    if not isinstance(value, kind):
        raise SchemaError(f"expected {kind.__name__}, got {value!r}", field=f"{path}.{name}" if path else name)
    return value


def _reject_unknown(obj, allowed, path):
    if not isinstance(obj, dict):
        raise SchemaError(f"expected an object, got {obj!r}", field=path or None)
    unknown = set(obj) - allowed
    if unknown:
        raise SchemaError(f"unknown fields {sorted(unknown)}", field=path or None)


def _read_points(entries, key, allowed, path, merge_distance):
    points, values = [], []
    for i, entry in enumerate(entries):
        entry_path = f"{path}[{i}]"
        _reject_unknown(entry, allowed, entry_path)
        points.append(_require(entry, key, float, entry_path))
        values.append(complex(_require(entry, "re", float, entry_path), _require(entry, "im", float, entry_path)))
    points = np.array(points, dtype=float)
    drops = np.diff(points) < -merge_distance
    if np.any(drops):
        bad = int(np.argmax(drops)) + 1
        raise SchemaError(
            f"entries must be sorted ascending; {points[bad]} follows {points[bad - 1]}",
            field=f"{path}[{bad}]",
        )
    return _merge_atoms(points, np.array(values, dtype=complex), merge_distance)


def _read_density(spec):
    if spec is None:
        return None
    _reject_unknown(spec, DENSITY_FIELDS, "mu.density")
    kind = _require(spec, "kind", str, "mu.density")
    if kind not in DENSITY_KINDS:
        raise SchemaError(f"unknown kind {kind!r}", field="mu.density.kind")
    scale = _require(spec, "scale", float, "mu.density")
    if kind == "r_tanh_pi_r":
        if "grid" in spec:
            raise SchemaError("grid samples are only allowed for kind 'grid'", field="mu.density.grid")
        return Density(kind, scale)
    grid = _require(spec, "grid", list, "mu.density")
    for i, sample in enumerate(grid):
        _reject_unknown(sample, GRID_FIELDS, f"mu.density.grid[{i}]")
    try:
        return Density(
            kind,
            scale,
            grid_t=[_require(s, "t", float, f"mu.density.grid[{i}]") for i, s in enumerate(grid)],
            grid_values=[_require(s, "value", float, f"mu.density.grid[{i}]") for i, s in enumerate(grid)],
        )
    except DomainError as e:
        raise SchemaError(str(e), field="mu.density.grid") from e


def load_pair(path, merge_distance=MERGE_DISTANCE):
    """
    Read and validate a pair file. Atoms closer than merge_distance are merged.

    The file is read with json5: strict JSON always loads, and comments and
    trailing commas are accepted as well.
    """
    if not os.path.exists(path):
        raise SchemaError(f"pair file not found: {path}")
    with open(path, encoding="utf-8") as json_file:
        try:
            data = json.load(json_file)
        except ValueError as e:
            raise SchemaError(f"not valid JSON: {e}") from e

    _reject_unknown(data, PAIR_FIELDS, "")
    name = _require(data, "name", str, "")
    antipodal = _require(data, "antipodal", bool, "")
    strip_constant = _require(data, "strip_constant", float, "")
    if not strip_constant > 0:
        raise SchemaError("must be positive", field="strip_constant")

    mu_spec = _require(data, "mu", dict, "")
    _reject_unknown(mu_spec, MU_FIELDS, "mu")
    degree_bound = _require(mu_spec, "degree_bound", int, "mu")
    atoms = _require(mu_spec, "atoms", list, "mu")
    density = _read_density(mu_spec.get("density"))
    locations, weights = _read_points(atoms, "t", ATOM_FIELDS, "mu.atoms", merge_distance)

    a_spec = _require(data, "a", dict, "")
    _reject_unknown(a_spec, A_FIELDS, "a")
    growth_constant = _require(a_spec, "growth_constant", float, "a")
    if not growth_constant > 0:
        raise SchemaError("must be positive", field="a.growth_constant")
    support = _require(a_spec, "support", list, "a")
    lambdas, values = _read_points(support, "lambda", SUPPORT_FIELDS, "a.support", merge_distance)

    mu = TemperedMeasure(
        locations,
        weights,
        density=density,
        degree_bound=degree_bound,
        truncation_note=f"as stored in {os.path.basename(path)}",
        radius=float(np.max(np.abs(locations))) if locations.size else 0.0,
    )
    a = SummationFunction(
        lambdas,
        values,
        growth_constant=growth_constant,
        radius=float(np.max(np.abs(lambdas))) if lambdas.size else 0.0,
    )
    pair = FSPair(name, mu, a, antipodal=antipodal, strip_constant=strip_constant)
    logger.info(
        f"Loaded pair {name!r} from {path}: {locations.size} atoms, "
        f"{lambdas.size} support points, density={density.kind if density else None}"
    )
    return pair


def _measure_from(locations, weights, template, **changes):
    locations, weights = _merge_atoms(locations, weights)
    return replace(template, locations=locations, weights=weights, **changes)


def antipodal_split(pair):
    """
    Split (mu, a) into real-antipodal pairs with mu = mu1 - i mu2 and a = a1 - i a2.
    """
    mu = pair.mu
    mu1 = _measure_from(mu.locations, mu.weights.real, mu)
    mu2 = _measure_from(
        mu.locations, -mu.weights.imag, mu, density=None, mean_density=0.0, tail_start=np.inf
    )

    lambdas = np.union1d(pair.a.lambdas, -pair.a.lambdas)
    values = np.array([pair.a.value_at(lam) for lam in lambdas])
    mirrored = np.conj(np.array([pair.a.value_at(-lam) for lam in lambdas]))
    a1_values = (values + mirrored) / 2
    a2_values = -1j * (mirrored - values) / 2

    def summation(vals):
        keep = vals != 0
        return replace(pair.a, lambdas=lambdas[keep], values=vals[keep])

    first = FSPair(f"{pair.name}_re", mu1, summation(a1_values), True, pair.strip_constant, pair.gaussian_ok)
    second = FSPair(f"{pair.name}_im", mu2, summation(a2_values), True, pair.strip_constant, pair.gaussian_ok)
    return first, second


def _combine_densities(terms):
    densities = [(s, p.mu.density) for s, p in terms if p.mu.density is not None]
    if not densities:
        return None
    if any(np.iscomplexobj(s) and np.imag(s) != 0 for s, _ in densities):
        raise DomainError("densities can only be combined with real coefficients")
    first = densities[0][1]
    for _, d in densities[1:]:
        same_grid = d.kind == "grid" and first.kind == "grid" and np.array_equal(d.grid_t, first.grid_t)
        if d.kind != first.kind or (d.kind == "grid" and not same_grid):
            raise DomainError("only densities of the same kind (and grid) can be combined")
    if first.kind == "grid":
        values = sum(float(np.real(s)) * d.scale * d.grid_values for s, d in densities)
        return Density("grid", 1.0, first.grid_t, values)
    scale = sum(float(np.real(s)) * d.scale for s, d in densities)
    return None if scale == 0 else Density(first.kind, scale)


def combine_pairs(terms, name=None):
    """
    Linear combination sum_i s_i (mu_i, a_i) of FS-pairs.

    terms: iterable of (coefficient, FSPair). Atoms and support points
    that cancel are dropped, as is a density whose scale cancels.
    """
    terms = list(terms)
    if not terms:
        raise DomainError("combine_pairs needs at least one term")
    locations = np.concatenate([p.mu.locations for _, p in terms])
    weights = np.concatenate([s * p.mu.weights for s, p in terms])
    lambdas = np.concatenate([p.a.lambdas for _, p in terms])
    values = np.concatenate([s * p.a.values for s, p in terms])
    locations, weights = _merge_atoms(locations, weights)
    lambdas, values = _merge_atoms(lambdas, values)

    real_coeffs = all(np.imag(s) == 0 for s, _ in terms)
    tails = [(s, p.mu) for s, p in terms if p.mu.mean_density != 0]
    mean_density = float(np.real(sum(s * m.mean_density for s, m in tails))) if tails else 0.0
    mu = TemperedMeasure(
        locations,
        weights,
        density=_combine_densities(terms),
        degree_bound=max(p.mu.degree_bound for _, p in terms),
        truncation_note="; ".join(p.mu.truncation_note for _, p in terms if p.mu.truncation_note),
        radius=min(p.mu.radius for _, p in terms),
        mean_density=mean_density,
        tail_start=min((m.tail_start for _, m in tails), default=np.inf) if mean_density else np.inf,
        tail_spacing=tails[0][1].tail_spacing if len({m.tail_spacing for _, m in tails}) == 1 else 0.0,
    )
    a = SummationFunction(
        lambdas,
        values,
        growth_constant=max(p.a.growth_constant for _, p in terms),
        radius=min(p.a.radius for _, p in terms),
    )
    name = name or " + ".join(f"{s}*{p.name}" for s, p in terms)
    antipodal = real_coeffs and all(p.antipodal for _, p in terms)
    return FSPair(
        name,
        mu,
        a,
        antipodal=antipodal,
        strip_constant=max(p.strip_constant for _, p in terms),
        gaussian_ok=all(p.gaussian_ok for _, p in terms),
    )


def _quad(func, lo, hi, tol, limit, points=None):
    kwargs = {"epsabs": tol, "epsrel": 0.0, "limit": limit, "full_output": 1}
    if points is not None and np.isfinite(lo) and np.isfinite(hi):
        inside = [p for p in points if lo < p < hi]
        if inside:
            kwargs["points"] = inside
    result = integrate.quad(func, lo, hi, **kwargs)
    degraded = len(result) == 4
    if degraded:
        logger.warning(f"quad on [{lo}, {hi}] did not reach {tol}: {result[3]}")
    return result[0], result[1], degraded


def _density_integral(density, f, lo, hi, tol, limit, points=None):
    d_lo, d_hi = density.support
    lo, hi = max(lo, d_lo), min(hi, d_hi)
    if not lo < hi:
        return 0j, 0.0, False
    re, re_err, re_bad = _quad(lambda t: float(np.real(density(t) * f(t))), lo, hi, tol, limit, points)
    im, im_err, im_bad = _quad(lambda t: float(np.imag(density(t) * f(t))), lo, hi, tol, limit, points)
    return complex(re, im), float(np.hypot(re_err, im_err)), re_bad or im_bad


def _half_line_integral(f, start, sign):
    # int_start^inf f(sign t) dt through t = start / u, u in (0, 1]
    nodes, gl_weights = np.polynomial.legendre.leggauss(TAIL_NODES)
    u = (nodes + 1.0) / 2.0
    t = start / u
    return complex(np.sum(gl_weights / 2.0 * f(sign * t) * start / u ** 2))


def _derivative(f, t):
    step = 1e-3 * max(abs(t), 1.0)
    values = f(np.array([t - step, t + step]))
    return (values[1] - values[0]) / (2.0 * step)


def _lattice_continuum(mu, f, lo, hi, tol, limit):
    """
    rho * (int_lo^hi f - h^2/24 [f']_lo^hi): the atoms continued as a lattice
    of spacing h with mean density rho, boundaries at half-spacing offsets.
    """
    if np.isinf(hi):
        integral = _half_line_integral(f, lo, 1.0)
    elif np.isinf(lo):
        integral = _half_line_integral(f, -hi, -1.0)
    else:
        re = integrate.quad(lambda t: float(np.real(f(t))), lo, hi, epsabs=tol, limit=limit)[0]
        im = integrate.quad(lambda t: float(np.imag(f(t))), lo, hi, epsabs=tol, limit=limit)[0]
        integral = complex(re, im)
    h = mu.tail_spacing
    if h > 0:
        upper = 0j if np.isinf(hi) else _derivative(f, hi)
        lower = 0j if np.isinf(lo) else _derivative(f, lo)
        integral -= h * h / 24.0 * (upper - lower)
    return mu.mean_density * integral


def _shell(mu):
    """Inner and outer radius of the outermost shell [~R/2, R] of stored atoms."""
    radius = mu.tail_start if np.isfinite(mu.tail_start) else mu.radius
    positive = np.abs(mu.locations[mu.locations != 0])
    positive = np.unique(positive)
    idx = np.searchsorted(positive, radius / 2.0)
    if 0 < idx < positive.size:
        inner = (positive[idx - 1] + positive[idx]) / 2.0
    else:
        inner = radius / 2.0
    return inner, radius


def _banded_shell_sum(mu, f, shell):
    """sum over bands of |sum w f| on each side of the outer shell."""
    total = 0.0
    for side in (mu.locations < 0, mu.locations > 0):
        mask = shell & side
        if not mask.any():
            continue
        terms = mu.weights[mask] * f(mu.locations[mask])
        bands = np.array_split(terms, min(SHELL_BANDS, terms.size))
        total += float(sum(abs(np.sum(band)) for band in bands))
    return total


def _truncation_tail(mu, f, tol, limit):
    """
    Value and error estimate for the part of mu beyond the stored atoms.

    With a mean density the lattice continuation is added and its error is
    the model's discrepancy on the outer shell. Without one nothing is
    added and the error is what the outer shell contributes, summed with
    signs inside each of SHELL_BANDS bands per side so that oscillating
    weights cancel the way they do beyond the truncation.
    """
    inner, radius = _shell(mu)
    shell = (np.abs(mu.locations) > inner) & (np.abs(mu.locations) <= radius)
    if mu.mean_density == 0:
        return 0j, _banded_shell_sum(mu, f, shell)

    value = _lattice_continuum(mu, f, radius, np.inf, tol, limit) + _lattice_continuum(
        mu, f, -np.inf, -radius, tol, limit
    )
    error = 0.0
    for lo, hi in ((inner, radius), (-radius, -inner)):
        mask = (mu.locations > lo) & (mu.locations < hi)
        atom_sum = np.sum(mu.weights[mask] * f(mu.locations[mask]))
        error += abs(atom_sum - _lattice_continuum(mu, f, lo, hi, tol, limit))
    logger.debug(f"lattice tail beyond {radius}: {value} (shell discrepancy {error:.3e})")
    return value, error


def integrate_against(mu, f, T=np.inf, tol=1e-8, limit=400, points=None, truncation_tail=False):
    """
    int_{[-T, T]} f dmu for a vectorised evaluator f.

    Atoms are summed exactly and the density is integrated adaptively.
    With truncation_tail, and T reaching past the stored atoms of a
    truncated measure, the remainder is modelled (or bounded) from the
    outer shell. Quadrature shortfalls mark the result degraded instead
    of raising.
    """
    inside = np.abs(mu.locations) <= T
    locations = mu.locations[inside]
    value = complex(np.sum(mu.weights[inside] * f(locations))) if locations.size else 0j
    error = 0.0
    degraded = False

    if mu.density is not None:
        d_value, d_error, d_bad = _density_integral(mu.density, f, -T, T, tol, limit, points)
        value += d_value
        error += d_error
        degraded = degraded or d_bad

    if truncation_tail and np.isfinite(mu.radius) and T >= mu.radius and mu.locations.size:
        t_value, t_error = _truncation_tail(mu, f, tol, limit)
        value += t_value
        error += t_error

    return Estimate(value, error, degraded)


def degree_probe(mu, n, t_grid, tol=1e-10, limit=400):
    """
    Partial integrals I(T) = int_{|t|<=T} (1+t^2)^{-n/2} d|mu| and a verdict.

    Converging when the last two increment ratios are both below 0.9,
    diverging when both are at least one; anything else is inconclusive.
    This is a heuristic over finite data, never a proof.
    """
    t_grid = [float(t) for t in t_grid]
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise DomainError("T_grid must be strictly increasing")

    def weight_fn(t):
        return (1.0 + np.asarray(t) ** 2) ** (-n / 2.0)

    partial = []
    for T in t_grid:
        inside = np.abs(mu.locations) <= T
        total = float(np.sum(np.abs(mu.weights[inside]) * weight_fn(mu.locations[inside])))
        if mu.density is not None:
            abs_density = Density(mu.density.kind, abs(mu.density.scale), mu.density.grid_t,
                                  None if mu.density.grid_values is None else np.abs(mu.density.grid_values))
            total += _density_integral(abs_density, weight_fn, -T, T, tol, limit)[0].real
        partial.append(total)

    increments = np.diff(partial)
    ratios = [
        float(b / a) if a > 0 else (np.inf if b > 0 else 0.0)
        for a, b in zip(increments, increments[1:])
    ]
    if len(ratios) >= 2 and all(r < 0.9 for r in ratios[-2:]):
        verdict = "converging"
    elif len(ratios) >= 2 and all(r >= 1.0 - 1e-9 for r in ratios[-2:]):
        verdict = "diverging"
    else:
        verdict = "inconclusive"
    if verdict == "inconclusive":
        logger.warning(f"degree probe n={n} inconclusive on T={t_grid}: ratios {ratios}")
    return DegreeProbe(n, t_grid, partial, ratios, verdict)

import itertools

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from summation_pairs.exceptions import DomainError, FitError
from summation_pairs.utils.eigen import jacobi_eigh
from summation_pairs.utils.measures import (
    FSPair,
    SummationFunction,
    TemperedMeasure,
    combine_pairs,
    make_guinand,
    make_meyer,
    make_poisson,
)
from summation_pairs.utils.nevanlinna import (
    HolomorphicModel,
    NevMatrix,
    ap_proxy,
    bridge_rhs,
    bridge_sum,
    build_model,
    choose_k,
    ef_coeff,
    f_integral,
    f_series,
    fit_q,
    integral_part,
    leading_growth,
    neg_index,
    nev_matrix,
    recover_measure,
    recover_value,
    representation_gap,
    shifted_kernel_identity_residual,
    validation_grid,
)
from summation_pairs.utils.qseries import guinand_coeffs

COTH_PI = 1.0 / np.tanh(np.pi)


def poisson_f(z):
    return 0.5j / np.tan(np.pi * z)


class SeriesAndIntegralTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.poisson = make_poisson(64, 64)

    def test_series_is_half_cotangent(self):
        z = 0.3 + 0.5j
        result = f_series(self.poisson, z)
        self.assertAlmostEqual(result.value, poisson_f(z), delta=1e-13)
        self.assertLess(result.error, 1e-30)

    def test_guinand_series_matches_direct_sum(self):
        c = 1.0 / 9.0
        alpha = guinand_coeffs(c, 512).coeffs
        expected = np.sum(alpha * np.exp(-4.0 * np.pi * np.sqrt(np.arange(alpha.size) + c)))
        self.assertAlmostEqual(f_series(make_guinand(c, 512), 2j).value, expected, delta=1e-12)

    def test_series_needs_strip(self):
        with self.assertRaises(DomainError):
            f_series(self.poisson, 0.3 + 0.05j)

    def test_integral_part_matches_below_the_strip(self):
        for z in (0.3 + 0.05j, -1.7 + 0.5j, 0.25 + 3.0j):
            result = integral_part(self.poisson, 0, z)
            self.assertAlmostEqual(result.value, poisson_f(z), delta=1e-9)
            self.assertLess(result.error, 1e-6)

    def test_integral_part_needs_upper_half_plane(self):
        with self.assertRaises(DomainError):
            integral_part(self.poisson, 0, 0.5)

    def test_meyer_reflection(self):
        pair = make_meyer(400)
        for z in (0.3 + 0.7j, -1.1 + 0.2j):
            value = integral_part(pair, 1, z).value
            reflected = integral_part(pair, 1, -np.conj(z)).value
            self.assertAlmostEqual(reflected, -np.conj(value), delta=1e-12)
            series = f_series(pair, 1j + z.real).value
            self.assertAlmostEqual(f_series(pair, 1j - z.real).value, -np.conj(series), delta=1e-12)


class ModelTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.poisson = make_poisson(64, 64)
        cls.model = build_model(cls.poisson)

    def test_choose_k(self):
        self.assertEqual(choose_k(self.poisson), 0)
        self.assertEqual(choose_k(make_guinand(1.0 / 9.0, 16)), 1)
        self.assertEqual(choose_k(make_meyer(16)), 1)
        mu = TemperedMeasure([0.0], [1.0], degree_bound=5)
        self.assertEqual(choose_k(FSPair('deg5', mu, SummationFunction([], []))), 2)

    def test_poisson_q_is_zero(self):
        self.assertEqual(self.model.k, 0)
        self.assertEqual(self.model.q_poly.size, 1)
        self.assertLess(abs(self.model.q_poly[0]), 1e-9)

    def test_representation_agreement(self):
        gap = representation_gap(self.model, validation_grid(self.poisson))
        self.assertEqual(gap.points.size, 25)
        self.assertTrue(np.all(np.abs(gap.points.real) <= 2.0))
        self.assertLess(np.max(gap.gaps), 1e-6)
        self.assertTrue(gap.within_budget)

    def test_f_integral_everywhere(self):
        z = 0.4 + 0.02j
        self.assertAlmostEqual(f_integral(self.model, z).value, poisson_f(z), delta=1e-9)

    def test_forced_k_one(self):
        model = build_model(self.poisson, k=1)
        assert_allclose(model.q_poly, [0.0, -COTH_PI / 2.0, 0.0], atol=1e-7)

    def test_guinand_at_zero(self):
        pair = make_guinand(0.0, 256)
        model = build_model(pair)
        self.assertEqual(model.k, 1)
        assert_allclose(model.q_poly, [0.0, -COTH_PI, 0.0], atol=1e-6)
        self.assertTrue(representation_gap(model, validation_grid(pair)).within_budget)

    def test_scaling_the_pair_scales_q(self):
        doubled = combine_pairs([(2.0, self.poisson)])
        single = build_model(self.poisson, k=1)
        model = build_model(doubled, k=1)
        assert_allclose(model.q_poly, 2.0 * single.q_poly, atol=1e-7)

    def test_fit_rejects_wrong_pairs(self):
        fake = FSPair('fake', self.poisson.mu, SummationFunction(self.poisson.a.lambdas, 2.0 * self.poisson.a.values))
        with self.assertRaises(FitError):
            build_model(fake)

    def test_fit_sample_checks(self):
        with self.assertRaises(DomainError):
            fit_q(self.poisson, 1, [0.5 + 1j] * 7)
        with self.assertRaises(DomainError):
            fit_q(self.poisson, 0, [0.5 + 0.05j, 1.0 + 1j, 0.0 + 1j, 0.2 + 1j])
        with self.assertRaises(FitError):
            fit_q(self.poisson, 1, [0.5 + 1j] * 8)

    def test_q_degree_bound(self):
        with self.assertRaises(DomainError):
            HolomorphicModel(self.poisson, 0, [1.0, 2.0])

    def test_leading_growth(self):
        self.assertAlmostEqual(leading_growth(self.model, 3.0), 1.0 / np.tanh(3.0 * np.pi) / 6.0, delta=1e-9)


class BuiltinModelTests(SimpleTestCase):
    def assert_agreement(self, pair):
        model = build_model(pair)
        gap = representation_gap(model, validation_grid(pair))
        self.assertTrue(gap.within_budget, msg=f"gaps {gap.gaps}, budgets {gap.budgets}")
        self.assertLess(np.max(gap.gaps), 1e-3)
        return gap

    def test_guinand(self):
        self.assert_agreement(make_guinand(1.0 / 9.0, 512))

    def test_meyer(self):
        gap = self.assert_agreement(make_meyer(2000))
        # oscillating shell weights cancel in the truncation estimate
        self.assertLess(np.max(gap.budgets), 1.0)


class BohrFourierTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.poisson = make_poisson(64, 64)

    def test_coefficient_is_height_independent(self):
        for y in (1.0, 2.0):
            self.assertAlmostEqual(ef_coeff(self.poisson, 1.0, y, 256), 1.0, delta=1e-5)

    def test_negative_frequencies_vanish(self):
        self.assertLess(abs(ef_coeff(self.poisson, -1.0, 1.0, 256)), 1e-5)

    def test_mean_value(self):
        self.assertAlmostEqual(2.0 * ef_coeff(self.poisson, 0.0, 1.0, 256).real, 1.0, delta=1e-5)

    def test_off_support_frequency(self):
        self.assertLess(abs(ef_coeff(self.poisson, 0.5, 1.0, 64)), 1e-8)

    def test_accepts_a_model(self):
        model = HolomorphicModel(self.poisson, 0)
        self.assertAlmostEqual(ef_coeff(model, 2.0, 1.0, 16), 1.0, delta=1e-5)

    def test_domain(self):
        with self.assertRaises(DomainError):
            ef_coeff(self.poisson, 1.0, 0.05, 16)


class RecoveryTests(SimpleTestCase):
    def test_poisson(self):
        result = recover_measure(HolomorphicModel(make_poisson(64, 64), 0), 0.5, 1.5)
        self.assertEqual(len(result.values), 3)
        self.assertAlmostEqual(result.target, 0.25, delta=1e-15)
        self.assertAlmostEqual(result.extrapolated, 0.25, delta=1e-3)
        # the plain values approach the limit as s shrinks
        errors = [abs(v - 0.25) for v in result.values]
        self.assertLess(errors[-1], errors[0])

    def test_meyer(self):
        result = recover_measure(HolomorphicModel(make_meyer(2000), 1), 0.4, 0.6)
        self.assertAlmostEqual(result.target, -0.96, delta=1e-12)
        self.assertAlmostEqual(result.extrapolated, -0.96, delta=2e-3)

    def test_contour_values_follow_f_integral(self):
        model = HolomorphicModel(make_poisson(64, 64), 0)
        s = 0.1
        nodes, weights = np.polynomial.legendre.leggauss(120)
        z = 1.0 + 0.5 * nodes + 1j * s
        values = np.array([f_integral(model, point).value for point in z]) / (z * z + 1.0)
        expected = 0.5 * np.sum(weights * values.real)
        self.assertAlmostEqual(recover_value(model, 0.5, 1.5, s), expected, delta=1e-8)

    def test_endpoint_near_atom(self):
        model = HolomorphicModel(make_poisson(8, 8), 0)
        with self.assertRaises(DomainError):
            recover_measure(model, 0.9995, 1.5)
        with self.assertRaises(DomainError):
            recover_measure(model, 1.5, 0.5)
        with self.assertRaises(DomainError):
            recover_measure(model, 0.5, 1.5, s_values=[0.5])


class NevanlinnaMatrixTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.poisson = make_poisson(64, 64)
        cls.model = build_model(cls.poisson)

    def test_single_point(self):
        y = 0.7
        matrix = nev_matrix(self.model, [1j * y])
        self.assertAlmostEqual(matrix.entries[0, 0], 1.0 / np.tanh(np.pi * y) / (2.0 * y), delta=1e-9)

    def test_poisson_index_is_zero(self):
        for seed in range(50):
            rng = np.random.default_rng(seed)
            size = 2 + seed % 7
            points = rng.uniform(-2.0, 2.0, size) + 1j * rng.uniform(0.2, 3.0, size)
            self.assertEqual(neg_index(nev_matrix(self.model, points)), 0, msg=f"seed={seed}")

    def test_index_is_monotone_under_subsets(self):
        mu = TemperedMeasure([-1.0, 0.0, 1.0], [1.0, -1.0, 1.0])
        model = HolomorphicModel(FSPair('mixed', mu, SummationFunction([], [])), 0)
        rng = np.random.default_rng(11)
        for trial in range(10):
            points = np.r_[0.2j, rng.uniform(-2.0, 2.0, 5) + 1j * rng.uniform(0.2, 2.0, 5)]
            matrix = nev_matrix(model, points)
            full = neg_index(matrix)
            self.assertGreaterEqual(full, 1)
            for size in range(1, 6):
                for subset in itertools.combinations(range(6), size):
                    self.assertLessEqual(neg_index(matrix.submatrix(subset)), full, msg=f"{trial}: {subset}")

    def test_negative_mass_is_detected(self):
        negated = combine_pairs([(-1.0, self.poisson)])
        model = HolomorphicModel(negated, 0)
        matrix = nev_matrix(model, [0.5j, 1.0 + 1.0j, -1.0 + 2.0j])
        self.assertEqual(neg_index(matrix), 3)

    def test_constant_model(self):
        empty = FSPair('zero', TemperedMeasure([], []), SummationFunction([], []))
        model = HolomorphicModel(empty, 0, [2.5])
        matrix = nev_matrix(model, [0.5j, 1.0 + 1.0j])
        assert_allclose(matrix.entries, 0.0, atol=1e-15)
        self.assertEqual(neg_index(matrix), 0)

    def test_hermitian(self):
        matrix = nev_matrix(self.model, [0.3 + 0.4j, -1.0 + 1.2j, 0.8 + 2.5j, 0.0 + 0.9j])
        assert_allclose(matrix.entries, matrix.entries.conj().T, atol=1e-13)
        values, _ = jacobi_eigh(matrix.entries)
        self.assertGreater(values[0], 0.0)
        sub = matrix.submatrix([0, 2])
        self.assertEqual(sub.entries.shape, (2, 2))

    def test_point_checks(self):
        with self.assertRaises(DomainError):
            nev_matrix(self.model, [0.5j, 0.5j + 1e-10])
        with self.assertRaises(DomainError):
            nev_matrix(self.model, [0.5j, 1.0 - 0.5j])
        with self.assertRaises(DomainError):
            NevMatrix(np.array([1j, 2j]), np.array([[1.0, 1.0j], [1.0j, 1.0]]))
        with self.assertRaises(DomainError):
            neg_index(nev_matrix(self.model, [1j]), tol_rel=0.0)


class BridgeTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.poisson = make_poisson(64, 64)

    def test_poisson_oracle(self):
        target = (np.pi / 2.0) / np.tanh(2.0 * np.pi) / (2j * np.pi)
        self.assertAlmostEqual(bridge_rhs(self.poisson, 0, 2j, 2j), target, delta=1e-10)
        self.assertLess(abs(bridge_sum(self.poisson, 0, 2j, 2j, 512) - target), 1e-4)

    def test_sweep_is_monotone(self):
        target = (np.pi / 2.0) / np.tanh(2.0 * np.pi) / (2j * np.pi)
        residuals = [abs(bridge_sum(self.poisson, 0, 2j, 2j, t) - target) for t in (32, 64, 128, 256, 512)]
        self.assertTrue(all(b < a for a, b in zip(residuals[1:], residuals[2:])))

    def test_k_one_off_axis(self):
        z, w = 0.3 + 1.5j, -0.5 + 2.0j
        rhs = bridge_rhs(self.poisson, 1, w, z)
        self.assertLess(abs(bridge_sum(self.poisson, 1, w, z, 512) - rhs), 1e-4)

    def test_swap_symmetry_for_real_measures(self):
        z, w = 0.3 + 1.5j, -0.5 + 2.0j
        for k in (0, 1, 2):
            self.assertAlmostEqual(
                bridge_rhs(self.poisson, k, w, z), -np.conj(bridge_rhs(self.poisson, k, z, w)), delta=1e-12
            )

    def test_domain(self):
        with self.assertRaises(DomainError):
            bridge_sum(self.poisson, 1, 1j, 2j, 64)
        with self.assertRaises(DomainError):
            bridge_sum(self.poisson, 0, 2j, 2j, 0.0)


class AlmostPeriodicTests(SimpleTestCase):
    def test_poisson_tail(self):
        pair = make_poisson(64, 64)
        y = 0.5
        sups = ap_proxy(pair, y, [1, 2, 4, 8, 200])
        expected = [np.exp(-2.0 * np.pi * (n + 1) * y) * (1 - np.exp(-2.0 * np.pi * (64 - n) * y))
                    / (1.0 - np.exp(-2.0 * np.pi * y)) for n in (1, 2, 4, 8)]
        assert_allclose(sups[:4], expected, rtol=1e-12)
        self.assertEqual(sups[4], 0.0)
        self.assertTrue(all(b < a for a, b in zip(sups, sups[1:4])))

    def test_guinand_tail_decreases(self):
        sups = ap_proxy(make_guinand(1.0 / 9.0, 512), 1.0, [64, 128, 256])
        self.assertTrue(sups[0] > sups[1] > sups[2] > 0.0, msg=str(sups))

    def test_strip(self):
        with self.assertRaises(DomainError):
            ap_proxy(make_poisson(8, 8), 0.05, [1])


class ShiftedKernelTests(SimpleTestCase):
    def test_identity(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            m = int(rng.integers(0, 5))
            r = (1.0, 2.5)[int(rng.integers(0, 2))]
            t = rng.uniform(-3.0, 3.0)
            z = complex(rng.uniform(-2.0, 2.0), rng.uniform(0.1, 2.0))
            self.assertLess(shifted_kernel_identity_residual(m, r, t, z), 1e-11, msg=f"m={m}, r={r}, t={t}, z={z}")

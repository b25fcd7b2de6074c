#!/usr/bin/env python

"""
Unit tests for factor projections, the eigenfunction identity and the projection comparisons
"""

import math
import unittest

import numpy as np

from cubelab.cube_averages import cube3_naive
from cubelab.dynamics import (
    Observable,
    SystemKind,
    SystemSpec,
    Term,
    generate_orbit,
    observable_integral,
)
from cubelab.errors import NoFactorDataError, OrbitLengthError, ParameterError
from cubelab.factors import (
    CHARACTERISTIC_FACTORS,
    FACTOR_TABLE,
    Factor,
    characteristic_compare,
    correlation_energy,
    eigenfunction_identity_check,
    eq1_compare,
    eq10_compare,
    project,
)
from cubelab.spectral import _correlation_energy

ALPHA = math.sqrt(2.0) - 1.0
ROTATION = SystemSpec(kind=SystemKind.ROTATION, alpha=ALPHA)
DOUBLING = SystemSpec(kind=SystemKind.DOUBLING, seed=2718)
SKEW = SystemSpec(kind=SystemKind.SKEW_PRODUCT, alpha=ALPHA)
PRODUCT = SystemSpec(kind=SystemKind.PRODUCT_ROTATION, alpha=ALPHA, theta=ALPHA / 2)
MEAN_ZERO_COS = Observable.cosine(1, mean_zero=True)


def random_trig_poly(rng, degree=3):
    terms = [
        Term(k, 0, complex(rng.standard_normal(), rng.standard_normal()))
        for k in range(-degree, degree + 1)
    ]
    return Observable(terms=tuple(terms))


class TestProject(unittest.TestCase):
    """Test symbolic projections from the factor table"""

    def test_rotation_identity(self):
        """Test both projections are the identity on the rotation"""
        obs = Observable(terms=(Term(1, 0, 2.0), Term(-3, 0, 1j)), indicator=(0.1, 0.4))
        self.assertEqual(project(ROTATION, obs, Factor.KRONECKER), obs)
        self.assertEqual(project(ROTATION, obs, Factor.CL), obs)

    def test_doubling_integral(self):
        """Test the doubling map projects 2 + cos(2 pi x) to the constant 2"""
        obs = Observable(terms=Observable.cosine(1).terms + (Term(0, 0, 2.0),))
        self.assertEqual(project(DOUBLING, obs, Factor.KRONECKER), Observable.constant(2.0))
        self.assertEqual(project(DOUBLING, obs, 'CL'), Observable.constant(2.0))

    def test_doubling_mean_zero(self):
        """Test a mean-zero observable projects to the zero function"""
        image = project(DOUBLING, MEAN_ZERO_COS, Factor.KRONECKER)
        self.assertEqual(image.terms, ())
        self.assertIsNone(image.indicator)

    def test_skew_product(self):
        """Test the skew product drops y-modes for Kronecker and keeps them for CL"""
        obs = Observable(terms=(Term(0, 1, 1.0), Term(1, 0, 1.0)))
        self.assertEqual(project(SKEW, obs, Factor.KRONECKER), Observable.character(1))
        self.assertEqual(project(SKEW, obs, Factor.CL), obs)

    def test_skew_product_conditional_expectation(self):
        """Test the Kronecker projection against a numeric average over a y-grid"""
        obs = Observable(terms=(Term(0, 1, 1.0), Term(2, 1, 0.5), Term(1, 0, 1.0), Term(0, 0, 0.25)))
        image = project(SKEW, obs, Factor.KRONECKER)
        x = np.linspace(0, 1, 17, endpoint=False)
        y = np.arange(64) / 64
        numeric = np.mean(obs.evaluate(x[:, None] * np.ones(64), np.ones(17)[:, None] * y), axis=1)
        np.testing.assert_allclose(numeric, image.evaluate(x), atol=1e-12)

    def test_product_rotation(self):
        """Test both projections are the identity on the product rotation"""
        obs = Observable.character(1, 1)
        self.assertEqual(project(PRODUCT, obs, Factor.KRONECKER), obs)

    def test_external_sequence(self):
        """Test external sequences have no factor data"""
        system = SystemSpec(kind=SystemKind.EXTERNAL_SEQUENCE, path='samples.csv')
        with self.assertRaises(NoFactorDataError):
            project(system, Observable.constant(1.0), Factor.KRONECKER)

    def test_idempotent_and_integral_preserving(self):
        """Test projecting twice changes nothing and every projection keeps the integral"""
        one_dimensional = [
            Observable(terms=(Term(1, 0, 2.0), Term(0, 0, 0.5 - 0.25j)), indicator=(0.1, 0.4)),
            Observable(terms=(Term(-2, 0, 1j), Term(0, 0, 3.0)), indicator=(0.0, 0.5), mean_zero=True),
            Observable.interval(0.25, 0.75),
            MEAN_ZERO_COS,
            Observable.constant(-1.5),
        ]
        two_dimensional = one_dimensional + [
            Observable(terms=(Term(0, 1, 1.0), Term(2, -1, 0.5j), Term(0, 0, 0.75)), indicator=(0.2, 0.3)),
            Observable(terms=(Term(1, 1, 1.0), Term(0, 0, 2.0)), mean_zero=True),
            Observable.character(0, 1),
        ]
        for system in (ROTATION, DOUBLING, SKEW, PRODUCT):
            observables = two_dimensional if system.dimension == 2 else one_dimensional
            for factor in Factor:
                for obs in observables:
                    with self.subTest(system=system.kind.value, factor=factor.value, obs=obs):
                        image = project(system, obs, factor)
                        self.assertEqual(project(system, image, factor), image)
                        self.assertEqual(observable_integral(image), observable_integral(obs))

    def test_table_covers_catalog(self):
        """Test every dynamical catalog system has a rule pair"""
        for kind in SystemKind:
            if kind is SystemKind.EXTERNAL_SEQUENCE:
                continue
            self.assertIn(kind, FACTOR_TABLE.rules)


class TestEigenfunctionIdentity(unittest.TestCase):
    """Test the factorization with an eigenfunction third term"""

    def test_quarter_turn(self):
        """Test rotation by 1/4 with e^{2 pi i x} from x0 = 0"""
        system = SystemSpec(kind=SystemKind.ROTATION, alpha=0.25)
        orbit = generate_orbit(system, Observable.character(1), 0.0, 4)
        lhs, rhs = eigenfunction_identity_check(orbit, orbit, 0.25, 1.0, 4)
        self.assertLess(abs(lhs - rhs), 1e-15)

    def test_constants(self):
        """Test f1 = f2 = f3 = 1 with theta = 0"""
        lhs, rhs = eigenfunction_identity_check(np.ones(8), np.ones(8), 0.0, 1.0, 8)
        self.assertEqual(lhs, 1)
        self.assertEqual(rhs, 1)

    def test_random_trig_polynomials(self):
        """Test 100 random trigonometric polynomials on the rotation at N = 512"""
        rng = np.random.default_rng(31)
        x0 = 0.05
        f3value = np.exp(2j * np.pi * x0)
        for _ in range(100):
            f1 = generate_orbit(ROTATION, random_trig_poly(rng), x0, 512)
            f2 = generate_orbit(ROTATION, random_trig_poly(rng), x0, 512)
            lhs, rhs = eigenfunction_identity_check(f1, f2, ALPHA, f3value, 512)
            self.assertLessEqual(abs(lhs - rhs), 1e-12)

    def test_theta_range(self):
        """Test theta outside [0, 1) is rejected"""
        with self.assertRaises(ParameterError):
            eigenfunction_identity_check(np.ones(4), np.ones(4), 1.0, 1.0, 4)


class TestProjectionComparisons(unittest.TestCase):
    """Test raw against projected correlation energies"""

    def test_correlation_energy_matches_direct(self):
        """Test the transform energy against the direct sum"""
        rng = np.random.default_rng(32)
        a = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        b = rng.standard_normal(99) + 1j * rng.standard_normal(99)
        self.assertAlmostEqual(correlation_energy(a, b, 50), _correlation_energy(a, b, 50), places=12)

    def test_eq1_doubling(self):
        """Test mean-zero doubling: projected side is exactly 0, raw side small"""
        raw, projected = eq1_compare(DOUBLING, MEAN_ZERO_COS, MEAN_ZERO_COS, 2**10)
        self.assertEqual(projected, 0.0)
        self.assertLess(raw, 0.05)

    def test_eq1_rotation(self):
        """Test identity projection gives equal sides bit-for-bit"""
        obs1 = Observable.cosine(2)
        obs2 = Observable.character(1, c=0.5 - 0.5j)
        raw, projected = eq1_compare(ROTATION, obs1, obs2, 300, x0=0.2)
        self.assertEqual(raw, projected)

    def test_eq1_skew_product(self):
        """Test the quasi-eigenfunction projects to zero"""
        obs = Observable.character(0, 1)
        raw, projected = eq1_compare(SKEW, obs, obs, 2**10, x0=(0.3, 0.1))
        self.assertEqual(projected, 0.0)
        self.assertLess(raw, 0.1)

    def test_eq1_product_rotation(self):
        """Test identity projection on the product rotation"""
        obs = Observable.character(1, -1)
        raw, projected = eq1_compare(PRODUCT, obs, obs, 128)
        self.assertEqual(raw, projected)

    def test_eq10_doubling(self):
        """Test trivial CL factor on the doubling map"""
        obs = [MEAN_ZERO_COS] * 4
        raw, projected = eq10_compare(DOUBLING, *obs, 2**8)
        self.assertEqual(projected, 0.0)
        self.assertLess(raw, 0.1)

    def test_eq10_ones(self):
        """Test all-ones observables give 1 on both sides"""
        one = Observable.constant(1.0)
        raw, projected = eq10_compare(DOUBLING, one, one, one, one, 32)
        self.assertAlmostEqual(raw, 1.0, places=12)
        self.assertAlmostEqual(projected, 1.0, places=12)

    def test_eq10_skew_product(self):
        """Test CL projection is the identity on the skew product"""
        obs = Observable.character(0, 1)
        raw, projected = eq10_compare(SKEW, obs, obs, obs, obs, 64, x0=(0.3, 0.1))
        self.assertEqual(raw, projected)

    def test_eq10_external_sequence(self):
        """Test comparisons need factor data"""
        system = SystemSpec(kind=SystemKind.EXTERNAL_SEQUENCE, path='samples.csv')
        one = Observable.constant(1.0)
        with self.assertRaises(NoFactorDataError):
            eq10_compare(system, one, one, one, one, 8)

    def test_eigen_identity_length(self):
        """Test short inputs are rejected"""
        with self.assertRaises(OrbitLengthError):
            eigenfunction_identity_check(np.ones(3), np.ones(4), 0.1, 1.0, 4)


class TestCharacteristicCompare(unittest.TestCase):
    """Test cube averages against the averages of their factor projections"""

    def test_factor_per_cube_size(self):
        """Test three functions use the Kronecker factor and seven use CL"""
        self.assertEqual(CHARACTERISTIC_FACTORS, {2: Factor.KRONECKER, 3: Factor.CL})

    def test_rotation_identity(self):
        """Test identity projections give equal values bit-for-bit"""
        observables = [Observable.character(1), Observable.cosine(2), Observable.character(-1, c=0.5j)]
        raw, projected = characteristic_compare(ROTATION, observables, 96, x0=0.2)
        self.assertEqual(raw, projected)
        a, b, c = (generate_orbit(ROTATION, obs, 0.2, 191) for obs in observables)
        self.assertAlmostEqual(abs(raw - cube3_naive(a, b, c, 96)), 0.0, places=12)

    def test_product_rotation_seven_functions(self):
        """Test the CL projection is the identity on the product rotation"""
        observables = [Observable.character(1, 1)] * 7
        raw, projected = characteristic_compare(PRODUCT, observables, 24, k=3)
        self.assertEqual(raw, projected)

    def test_doubling_zero_projection(self):
        """Test mean-zero doubling observables project to 0 for both cube sizes"""
        raw, projected = characteristic_compare(DOUBLING, [MEAN_ZERO_COS] * 3, 256)
        self.assertEqual(projected, 0)
        self.assertLess(abs(raw), 0.05)
        raw, projected = characteristic_compare(DOUBLING, [MEAN_ZERO_COS] * 7, 16, k=3)
        self.assertEqual(projected, 0)

    def test_skew_product_quasi_eigenfunction(self):
        """Test e^{2 pi i y} has zero Kronecker projection on the skew product"""
        obs = Observable.character(0, 1)
        raw, projected = characteristic_compare(SKEW, [obs] * 3, 64, x0=(0.3, 0.1))
        self.assertEqual(projected, 0)
        raw, projected = characteristic_compare(SKEW, [obs] * 7, 16, k=3, x0=(0.3, 0.1))
        self.assertEqual(raw, projected)

    def test_parameter_checks(self):
        """Test cube size, observable count and factor data are checked"""
        one = Observable.constant(1.0)
        with self.assertRaises(ParameterError):
            characteristic_compare(ROTATION, [one] * 15, 8, k=4)
        with self.assertRaises(ParameterError):
            characteristic_compare(ROTATION, [one] * 3, 8, k=3)
        external = SystemSpec(kind=SystemKind.EXTERNAL_SEQUENCE, path='samples.csv')
        with self.assertRaises(NoFactorDataError):
            characteristic_compare(external, [one] * 3, 8)


if __name__ == '__main__':
    unittest.main()

#!/usr/bin/env python

"""
Unit tests for ExperimentRunner and run

Tests task dispatch, verify checks, error context and CSV output
"""

import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from cubelab.config import DEFAULT_ALPHA, ExperimentConfig
from cubelab.cube_averages import AverageTrace
from cubelab.dynamics import Observable, SystemKind, SystemSpec
from cubelab.errors import InsufficientDataError, NoFactorDataError, TaskError
from cubelab.harness import ExperimentRunner, run

ONE = Observable.constant(1.0)
MEAN_ZERO_COS = Observable.cosine(1, mean_zero=True)
DOUBLING = SystemSpec(kind=SystemKind.DOUBLING, seed=11)
SKEW = SystemSpec(kind=SystemKind.SKEW_PRODUCT, alpha=DEFAULT_ALPHA)


def make_config(task, parameters, observables=None, system=None, **kwargs):
    return ExperimentConfig(
        system=system or SystemSpec(kind=SystemKind.ROTATION, alpha=DEFAULT_ALPHA),
        observables=observables or {'f': ONE},
        task=task,
        parameters=parameters,
        **kwargs,
    )


class TestTasks(unittest.TestCase):
    """Test each task produces the expected rows"""

    def test_avg_all_ones(self):
        """Test k=2 average of constant observables is 1"""
        report = run(make_config('avg', {'k': 2, 'N': 16}))
        self.assertEqual(report.columns, ['N', 'method', 're', 'im', 'abs'])
        self.assertEqual(len(report.rows), 1)
        self.assertAlmostEqual(report.rows[0]['re'], 1.0, places=12)
        self.assertIsNone(report.passed)

    def test_avg_both_methods(self):
        """Test method=both reports naive and fast rows and passes"""
        config = make_config(
            'avg', {'k': 3, 'N': 12, 'method': 'both'}, observables={'f': Observable.cosine(1)}
        )
        report = run(config)
        self.assertEqual(report.column('method'), ['naive', 'fast'])
        self.assertTrue(report.passed)
        self.assertLess(report.flags['relative_difference'], 1e-8)

    def test_avg_k4(self):
        """Test k=4 goes through the general engine"""
        report = run(make_config('avg', {'k': 4, 'N': 6, 'method': 'both'}))
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.rows[1]['abs'], 1.0, places=10)

    def test_orbit(self):
        """Test orbit rows of a quarter-turn rotation"""
        config = make_config(
            'orbit',
            {'L': 4},
            observables={'f': Observable.character(1)},
            system=SystemSpec(kind=SystemKind.ROTATION, alpha=0.25),
        )
        report = run(config)
        self.assertEqual(report.column('n'), [0, 1, 2, 3])
        values = np.array(report.column('re')) + 1j * np.array(report.column('im'))
        np.testing.assert_allclose(values, [1, 1j, -1, -1j], atol=1e-15)

    def test_ww(self):
        """Test the Wiener-Wintner task on a constant"""
        report = run(make_config('ww', {'N': 64}))
        self.assertAlmostEqual(report.rows[0]['value'], 1.0, places=12)
        self.assertEqual(report.rows[0]['oversample'], 8)

    def test_seminorm(self):
        """Test order 2 and order 3 seminorm tasks"""
        report = run(make_config('seminorm', {'order': 2, 'N': 128, 'H': 8}))
        self.assertAlmostEqual(report.rows[0]['value'], 1.0, delta=1e-9)
        report = run(make_config('seminorm', {'order': 3, 'N': 128, 'H': 8, 'H_inner': 4}))
        self.assertEqual(report.rows[0]['H_inner'], 4)
        self.assertAlmostEqual(report.rows[0]['value'], 1.0, delta=1e-9)

    def test_trace_doubling(self):
        """Test the decay flag on mean-zero doubling observables"""
        config = make_config(
            'trace', {'k': 2, 'horizons': '2^6..2^12'}, observables={'f': MEAN_ZERO_COS}, system=DOUBLING
        )
        report = run(config)
        self.assertEqual(report.column('N'), [2**e for e in range(6, 13)])
        self.assertTrue(report.flags['decaying'])

    def test_trace_not_decaying_warns(self):
        """Test a trace without decay is flagged and logged"""
        with mock.patch.object(AverageTrace, 'is_decaying', return_value=False):
            with self.assertLogs('cubelab.harness', level='WARNING'):
                report = run(make_config('trace', {'k': 2, 'horizons': [2, 4, 8]}))
        self.assertFalse(report.flags['decaying'])


class TestVerify(unittest.TestCase):
    """Test verify checks"""

    def test_vdc_trials(self):
        """Test 1000 seeded trials all satisfy the inequality"""
        config = make_config('verify', {'check': 'vdc', 'N': 256, 'H': 16, 'trials': 1000}, seed=42)
        report = run(config)
        self.assertEqual(len(report.rows), 1000)
        self.assertTrue(all(report.column('holds')))
        self.assertTrue(report.passed)
        self.assertEqual(report.metadata['check'], 'vdc')

    def test_vdc_threads_deterministic(self):
        """Test threaded trials give the same numeric output"""
        params = {'check': 'vdc', 'N': 64, 'H': 8, 'trials': 20}
        serial = run(make_config('verify', dict(params), seed=5, threads=1))
        threaded = run(make_config('verify', dict(params), seed=5, threads=4))
        self.assertEqual(serial.numeric_lines(), threaded.numeric_lines())

    def test_vdc_seed_changes_trials(self):
        """Test a different seed draws different sequences"""
        params = {'check': 'vdc', 'N': 64, 'H': 8, 'trials': 3}
        first = run(make_config('verify', dict(params), seed=1))
        second = run(make_config('verify', dict(params), seed=2))
        self.assertNotEqual(first.column('lhs'), second.column('lhs'))

    def test_lemma2_flag(self):
        """Test the violation flag on an eigenfunction"""
        config = make_config('verify', {'check': 'lemma2', 'N': 1024, 'H': 32}, observables={'f': Observable.character(1)})
        report = run(config)
        self.assertFalse(report.flags['violation'])
        self.assertLess(report.rows[0]['lhs'], report.rows[0]['rhs'])

    def test_lemma3_and_lemma4(self):
        """Test both A-block statistics equal 1 on constants"""
        report = run(make_config('verify', {'check': 'lemma3', 'N': 32}))
        self.assertAlmostEqual(report.rows[0]['value'], 1.0, delta=1e-9)
        report = run(make_config('verify', {'check': 'lemma4', 'N': 8, 'k': 4}))
        self.assertAlmostEqual(report.rows[0]['value'], 1.0, delta=1e-9)

    def test_eq1_rotation_identity(self):
        """Test identity projections pass with equal sides"""
        config = make_config('verify', {'check': 'eq1', 'N': 128}, observables={'f': Observable.cosine(3)})
        report = run(config)
        self.assertEqual(report.rows[0]['raw'], report.rows[0]['projected'])
        self.assertTrue(report.passed)

    def test_eq1_doubling_zero(self):
        """Test zero projections pass with projected side 0"""
        config = make_config('verify', {'check': 'eq1', 'N': 256}, observables={'f': MEAN_ZERO_COS}, system=DOUBLING)
        report = run(config)
        self.assertEqual(report.rows[0]['projected'], 0.0)
        self.assertTrue(report.passed)

    def test_eq10_skew_identity(self):
        """Test CL identity on the skew product"""
        config = make_config(
            'verify',
            {'check': 'eq10', 'N': 32},
            observables={'f': Observable.character(0, 1)},
            system=SKEW,
            x0=(0.3, 0.1),
        )
        report = run(config)
        self.assertTrue(report.passed)

    def test_eq1_skew_mixed_projection(self):
        """Test a projection that is neither identity nor zero has no pass/fail outcome"""
        obs = Observable(terms=((0, 1, 1.0), (1, 0, 1.0)))
        config = make_config('verify', {'check': 'eq1', 'N': 64}, observables={'f': obs}, system=SKEW)
        report = run(config)
        self.assertIsNone(report.passed)

    def test_char_rotation_identity(self):
        """Test identity Kronecker projections give equal three-function averages"""
        config = make_config('verify', {'check': 'char', 'N': 64}, observables={'f': Observable.character(1)})
        report = run(config)
        row = report.rows[0]
        self.assertEqual(report.columns, ['k', 'N', 'raw_re', 'raw_im', 'projected_re', 'projected_im', 'difference'])
        self.assertEqual(row['k'], 2)
        self.assertEqual((row['raw_re'], row['raw_im']), (row['projected_re'], row['projected_im']))
        self.assertEqual(row['difference'], 0.0)
        self.assertTrue(report.passed)

    def test_char_doubling_zero(self):
        """Test trivial CL factor makes the projected seven-function average exactly 0"""
        config = make_config(
            'verify', {'check': 'char', 'N': 16, 'k': 3}, observables={'f': MEAN_ZERO_COS}, system=DOUBLING
        )
        report = run(config)
        row = report.rows[0]
        self.assertEqual((row['projected_re'], row['projected_im']), (0.0, 0.0))
        self.assertTrue(report.passed)

    def test_char_skew_mixed_projection(self):
        """Test the skew product Kronecker projection has no exact outcome"""
        obs = Observable(terms=((0, 1, 1.0), (1, 0, 1.0)))
        config = make_config('verify', {'check': 'char', 'N': 32}, observables={'f': obs}, system=SKEW)
        report = run(config)
        self.assertIsNone(report.passed)


class TestRunner(unittest.TestCase):
    """Test runner lifecycle, error context and output"""

    def test_error_context(self):
        """Test downstream errors are wrapped with the task and chained"""
        config = make_config(
            'verify',
            {'check': 'eq1', 'N': 8},
            system=SystemSpec(kind=SystemKind.EXTERNAL_SEQUENCE, path='missing.csv'),
        )
        with self.assertRaises(TaskError) as ctx:
            run(config)
        self.assertIn('task=verify, check=eq1', str(ctx.exception))
        self.assertIsInstance(ctx.exception.__cause__, NoFactorDataError)

    def test_missing_external_file(self):
        """Test unreadable sequences surface as OSError causes"""
        with tempfile.TemporaryDirectory() as tmp:
            config = make_config(
                'orbit',
                {'L': 4},
                system=SystemSpec(kind=SystemKind.EXTERNAL_SEQUENCE, path=os.path.join(tmp, 'none.csv')),
            )
            with self.assertRaises(TaskError) as ctx:
                run(config)
        self.assertIsInstance(ctx.exception.__cause__, OSError)
        self.assertEqual(ctx.exception.task, 'orbit')
        self.assertIsNone(ctx.exception.check)

    def test_undecodable_external_file(self):
        """Test a non-UTF-8 sequence file is wrapped with the task context"""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'binary.csv')
            with open(path, 'wb') as fh:
                fh.write(b'\xff\xfe')
            config = make_config(
                'orbit', {'L': 4}, system=SystemSpec(kind=SystemKind.EXTERNAL_SEQUENCE, path=path)
            )
            with self.assertRaises(TaskError) as ctx:
                run(config)
        self.assertIn('task=orbit', str(ctx.exception))
        self.assertIsInstance(ctx.exception.__cause__, InsufficientDataError)

    def test_shared_observable_shares_orbit(self):
        """Test roles with the same observable reuse one orbit"""
        runner = ExperimentRunner(make_config('avg', {'k': 2, 'N': 8}))
        orbits = runner.orbits_for(3, 15)
        self.assertIs(orbits[0], orbits[2])

    def test_default_start_point(self):
        """Test two-dimensional systems default to the origin"""
        runner = ExperimentRunner(make_config('avg', {'k': 2, 'N': 8}, system=SKEW))
        self.assertEqual(runner.x0, (0.0, 0.0))

    def test_lifecycle_logging(self):
        """Test setup and shutdown are logged"""
        with self.assertLogs('cubelab.harness', level='INFO') as log:
            run(make_config('avg', {'k': 2, 'N': 4}))
        self.assertTrue(any('Setting up run' in message for message in log.output))
        self.assertTrue(any('Run finished' in message for message in log.output))

    def test_writes_csv(self):
        """Test output path receives metadata and rows"""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'avg.csv')
            report = run(make_config('avg', {'k': 2, 'N': 16}, output=path))
            with open(path) as fh:
                lines = fh.read().splitlines()
        self.assertTrue(lines[0].startswith('# id: '))
        self.assertIn('# task: avg', lines)
        self.assertIn('N,method,re,im,abs', lines)
        self.assertEqual(lines[-1], report.numeric_lines()[-1])

    def test_deterministic_numeric_output(self):
        """Test identical configs give identical numeric columns"""
        params = {'k': 3, 'N': 20}
        first = run(make_config('avg', dict(params), observables={'f': MEAN_ZERO_COS}, system=DOUBLING))
        second = run(make_config('avg', dict(params), observables={'f': MEAN_ZERO_COS}, system=DOUBLING))
        self.assertEqual(first.numeric_lines(), second.numeric_lines())
        self.assertNotEqual(first.metadata['id'], second.metadata['id'])


if __name__ == '__main__':
    unittest.main()

#!/usr/bin/env python

"""
Unit tests for report metadata, CSV output and summaries
"""

import json
import os
import re
import tempfile
import unittest

import numpy as np

from cubelab.config import ExperimentConfig, default_config
from cubelab.report import Report, build_metadata, format_value


class TestFormatValue(unittest.TestCase):
    """Test CSV cell formatting"""

    def test_float(self):
        """Test floats use 17 significant digits"""
        self.assertEqual(format_value(0.1), '1.0000000000000001e-01')
        self.assertEqual(format_value(np.float64(-2.5)), '-2.5000000000000000e+00')

    def test_integer(self):
        """Test integers are written verbatim"""
        self.assertEqual(format_value(4096), '4096')
        self.assertEqual(format_value(np.int64(7)), '7')

    def test_bool(self):
        """Test booleans are lower case"""
        self.assertEqual(format_value(True), 'true')
        self.assertEqual(format_value(np.bool_(False)), 'false')

    def test_text(self):
        """Test strings pass through"""
        self.assertEqual(format_value('fast'), 'fast')


class TestBuildMetadata(unittest.TestCase):
    """Test the metadata block"""

    def test_required_fields(self):
        """Test id, tool, time, task, seed and config echo"""
        config = default_config()
        metadata = build_metadata(config, '0.1.0', wall_clock=1.23456)

        self.assertRegex(metadata['id'], r'^[0-9a-f-]{36}$')
        self.assertEqual(metadata['tool'], 'cubelab 0.1.0')
        self.assertTrue(metadata['time'].endswith('Z'))
        self.assertEqual(metadata['task'], 'avg')
        self.assertEqual(metadata['seed'], 0)
        self.assertEqual(json.loads(metadata['config']), config.to_dict())
        self.assertEqual(metadata['wall_clock_seconds'], '1.235')
        self.assertNotIn('check', metadata)

    def test_unique_ids(self):
        """Test every report gets a new id"""
        config = default_config()
        self.assertNotEqual(build_metadata(config, '0')['id'], build_metadata(config, '0')['id'])

    def test_verify_check(self):
        """Test verify reports carry the check name"""
        config = ExperimentConfig.normalize(
            ExperimentConfig(task='verify', parameters={'check': 'vdc', 'N': 32, 'H': 4, 'trials': 2})
        )
        self.assertEqual(build_metadata(config, '0')['check'], 'vdc')


class TestReport(unittest.TestCase):
    """Test report rows, CSV layout and summary"""

    def test_add_row_requires_columns(self):
        """Test a row must provide every column"""
        report = Report(columns=['N', 'value'])
        with self.assertRaises(KeyError):
            report.add_row(N=4)

    def test_add_row_keeps_column_order(self):
        """Test rows follow the column order and drop extras"""
        report = Report(columns=['N', 'value'])
        report.add_row(value=0.5, N=4, extra='x')
        self.assertEqual(list(report.rows[0]), ['N', 'value'])
        self.assertEqual(report.column('value'), [0.5])

    def test_write_csv(self):
        """Test metadata comment lines precede the header and rows"""
        report = Report(columns=['N', 'value'], metadata={'task': 'avg', 'seed': 3})
        report.add_row(N=8, value=1.0)
        report.flags['decaying'] = True
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'report.csv')
            report.write_csv(path)
            with open(path) as fh:
                lines = fh.read().splitlines()
        self.assertEqual(
            lines,
            [
                '# task: avg',
                '# seed: 3',
                '# decaying: true',
                'N,value',
                '8,1.0000000000000000e+00',
            ],
        )

    def test_numeric_lines_exclude_metadata(self):
        """Test the numeric block is independent of metadata"""
        first = Report(columns=['x'], metadata={'id': 'a'})
        second = Report(columns=['x'], metadata={'id': 'b'})
        for report in (first, second):
            report.add_row(x=1 / 3)
        self.assertEqual(first.numeric_lines(), second.numeric_lines())

    def test_summary(self):
        """Test the one-line summary"""
        report = Report(columns=['trial', 'holds'], metadata={'task': 'verify', 'check': 'vdc'})
        report.add_row(trial=0, holds=True)
        report.passed = True
        summary = report.summary()
        self.assertTrue(summary.startswith('verify vdc: 1 rows'))
        self.assertIn('trial=0, holds=true', summary)
        self.assertTrue(summary.endswith('PASS'))

    def test_summary_without_rows(self):
        """Test summary of an empty report"""
        report = Report(columns=['x'])
        report.passed = False
        self.assertIsNotNone(re.match(r'^\?: 0 rows \| FAIL$', report.summary()))


if __name__ == '__main__':
    unittest.main()

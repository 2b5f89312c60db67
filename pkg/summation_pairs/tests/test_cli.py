import io
import json
import os
import tempfile
from contextlib import redirect_stderr, redirect_stdout

import pandas as pd
from django.test import SimpleTestCase

from summation_pairs.cli import parse_complex, run


class ParseComplexTests(SimpleTestCase):
    def test_forms(self):
        self.assertEqual(parse_complex('0+2i'), 2j)
        self.assertEqual(parse_complex('-1.5-0.25i'), -1.5 - 0.25j)
        self.assertEqual(parse_complex('1e-3+4E2i'), 1e-3 + 400j)

    def test_rejects_other_spellings(self):
        for text in ('2i', '1+2j', '1 + 2i', 'i', '1+i', ''):
            with self.assertRaises(ValueError, msg=text):
                parse_complex(text)


class CommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def run_ok(self, *argv):
        out = io.StringIO()
        with self.assertLogs('summation_pairs', level='INFO') as logs, redirect_stdout(out):
            code = run(list(argv))
        return code, out.getvalue(), logs.output

    def run_quiet(self, *argv):
        err = io.StringIO()
        with redirect_stderr(err), redirect_stdout(io.StringIO()):
            code = run(list(argv))
        return code, err.getvalue()

    def read(self, name):
        with open(self.path(name)) as f:
            return json.load(f)

    def test_verify_poisson(self):
        code, _, logs = self.run_ok(
            'verify', '--pair', 'poisson', '--testfn', 'bump', '--scale', '5.3', '--json', self.path('v.json')
        )
        self.assertEqual(code, 0)
        report = self.read('v.json')
        self.assertLess(report['abs_residual'], 1e-8)
        self.assertEqual(report['testfn']['kind'], 'bump')
        self.assertTrue(any('fspair verify done' in line for line in logs))

    def test_verify_is_deterministic(self):
        argv = ['verify', '--pair', 'guinand', '--trunc', '128', '--testfn', 'plateau', '--scale', '2.5']
        self.run_ok(*argv, '--json', self.path('first.json'))
        self.run_ok(*argv, '--json', self.path('second.json'))
        first, second = self.read('first.json'), self.read('second.json')
        first.pop('runtime_ms')
        second.pop('runtime_ms')
        self.assertEqual(first, second)

    def test_verify_to_stdout(self):
        code, out, _ = self.run_ok('verify', '--pair', 'poisson', '--testfn', 'bump', '--scale', '2')
        self.assertEqual(code, 0)
        self.assertIn('abs_residual', json.loads(out))

    def test_usage_errors(self):
        code, err = self.run_quiet('verify', '--pair', 'nosuch', '--testfn', 'bump')
        self.assertEqual(code, 2)
        self.assertIn('nosuch', err)
        self.assertEqual(self.run_quiet('verify', '--pair', 'poisson', '--testfn', 'bump', '--bogus')[0], 2)
        self.assertEqual(self.run_quiet('bridge', '--pair', 'poisson', '--k', '0', '--z', '1+2',
                                        '--w', '0+1i', '--tmax', '32')[0], 2)
        self.assertEqual(self.run_quiet('frobnicate')[0], 2)

    def test_file_pair_needs_path(self):
        self.assertEqual(self.run_quiet('probe', '--pair', 'file', '--n', '3')[0], 2)

    def test_bad_pair_file(self):
        with open(self.path('bad.json'), 'w') as f:
            f.write('{"name": "x"}')
        with self.assertLogs('summation_pairs', level='ERROR'):
            code, err = self.run_quiet('probe', '--pair', 'file', '--file', self.path('bad.json'), '--n', '3')
        self.assertEqual(code, 1)
        self.assertIn('antipodal: missing required field', err)

    def test_pairs_list(self):
        out = io.StringIO()
        with redirect_stdout(out):
            self.assertEqual(run(['pairs', 'list']), 0)
        names = [line.split('\t')[0] for line in out.getvalue().splitlines()]
        self.assertEqual(names, ['poisson', 'guinand', 'meyer'])

    def test_coeffs_csv(self):
        self.run_ok('coeffs', '--family', 'guinand', '--c', '0.111111', '--n', '8', '--csv', self.path('g.csv'))
        table = pd.read_csv(self.path('g.csv'))
        self.assertEqual(list(table.columns), ['n', 'alpha_n'])
        self.assertEqual(len(table), 9)
        self.assertAlmostEqual(table.loc[1, 'alpha_n'], -(24.0 * 0.111111 - 2.0), delta=1e-12)

    def test_coeffs_r3(self):
        self.run_ok('coeffs', '--family', 'r3', '--n', '10', '--csv', self.path('r3.csv'))
        table = pd.read_csv(self.path('r3.csv'))
        self.assertEqual(table['r3_n'].tolist()[:8], [1, 6, 12, 8, 6, 24, 24, 0])

    def test_bridge_sweep(self):
        code, _, _ = self.run_ok(
            'bridge', '--pair', 'poisson', '--k', '0', '--z=0+2i', '--w=0+2i', '--tmax', '512', '--sweep',
            '--json', self.path('b.json'),
        )
        self.assertEqual(code, 0)
        report = self.read('b.json')
        self.assertEqual([row['T'] for row in report['sweep']], [32.0, 64.0, 128.0, 256.0, 512.0])
        self.assertLess(report['abs_residual'], 1e-4)

    def test_tolerance_violation_still_writes_report(self):
        with redirect_stderr(io.StringIO()):
            code, _, _ = self.run_ok(
                'bridge', '--pair', 'poisson', '--k', '0', '--z=0+2i', '--w=0+2i', '--tmax', '32',
                '--tol', '1e-12', '--json', self.path('b.json'),
            )
        self.assertEqual(code, 1)
        self.assertGreater(self.read('b.json')['abs_residual'], 1e-12)

    def test_efcoef(self):
        code, _, _ = self.run_ok(
            'efcoef', '--pair', 'poisson', '--lambda', '1', '--y', '1', '--T', '64', '--json', self.path('e.json')
        )
        self.assertEqual(code, 0)
        self.assertLess(self.read('e.json')['abs_residual'], 1e-6)

    def test_recover(self):
        code, _, _ = self.run_ok(
            'recover', '--pair', 'poisson', '--a', '0.5', '--b', '1.5', '--json', self.path('r.json')
        )
        self.assertEqual(code, 0)
        report = self.read('r.json')
        self.assertEqual(report['k'], 0)
        self.assertEqual(len(report['values']), 3)
        self.assertAlmostEqual(report['target_re'], 0.25)

    def test_nevindex(self):
        code, _, _ = self.run_ok(
            'nevindex', '--pair', 'poisson', '--points', '6', '--seed', '3', '--json', self.path('n.json')
        )
        self.assertEqual(code, 0)
        report = self.read('n.json')
        self.assertEqual(report['neg_index'], 0)
        self.assertEqual(report['seed'], 3)

    def test_approx(self):
        code, _, _ = self.run_ok(
            'approx', '--pair', 'poisson', '--y', '0.5', '--n', '1', '4', '200', '--json', self.path('a.json')
        )
        self.assertEqual(code, 0)
        report = self.read('a.json')
        self.assertEqual(report['grid_points'], 1024)
        sups = report['sup_distance']
        self.assertGreater(sups[0], sups[1])
        self.assertEqual(sups[2], 0.0)

    def test_probe(self):
        self.run_ok('probe', '--pair', 'poisson', '--n', '3', '--json', self.path('p.json'))
        self.assertEqual(self.read('p.json')['verdict'], 'converging')

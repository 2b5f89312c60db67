import logging
import time

import numpy as np
from django.core.management.base import BaseCommand, CommandError

from summation_pairs.cli import CliConfig, parse_complex
from summation_pairs.conf import get_config
from summation_pairs.exceptions import FSPairError
from summation_pairs.utils import nevanlinna, report_io
from summation_pairs.utils.measures import degree_probe, load_pair, make_guinand, make_meyer, make_poisson
from summation_pairs.utils.testfn import TestFunctionSpec, verify_pair

logger = logging.getLogger(__name__)

PAIR_CHOICES = ("poisson", "guinand", "meyer", "file")
TESTFN_CHOICES = {"bump": "bump", "plateau": "plateau", "gaussian": "gaussian_diag"}
BUILTIN_PAIRS = {
    "poisson": "Dirac comb on the integers (self-dual, degree 2)",
    "guinand": "eta-quotient family mu_c, 0 <= c <= 1/8 (self-dual, degree 3)",
    "meyer": "odd r3 measure with mu-hat = -i mu (degree 3)",
}


class Command(BaseCommand):
    help = 'Build Fourier summation pairs, verify them and probe the attached holomorphic function'

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest='subcommand', required=True)

        pairs = subparsers.add_parser('pairs', help='Built-in pairs')
        pairs.add_argument('action', choices=['list'])

        verify = subparsers.add_parser('verify', help='Check the summation identity for one test function')
        self._add_pair_arguments(verify)
        verify.add_argument('--testfn', choices=list(TESTFN_CHOICES), required=True)
        verify.add_argument('--scale', type=float, default=1.0)
        verify.add_argument('--shift', type=float, default=0.0)
        verify.add_argument('--tol', type=float, default=None)
        verify.add_argument('--json', dest='output_path')

        coeffs = subparsers.add_parser('coeffs', help='Coefficient tables as CSV')
        coeffs.add_argument('--family', choices=list(report_io.COEFF_FAMILIES), required=True)
        coeffs.add_argument('--c', type=float, default=None)
        coeffs.add_argument('--n', type=int, required=True)
        coeffs.add_argument('--csv', dest='output_path')

        bridge = subparsers.add_parser('bridge', help='Tapered sum against the measure-side integral')
        self._add_pair_arguments(bridge)
        bridge.add_argument('--k', type=int, required=True)
        bridge.add_argument('--z', type=parse_complex, required=True)
        bridge.add_argument('--w', type=parse_complex, required=True)
        bridge.add_argument('--tmax', type=float, required=True)
        bridge.add_argument('--sweep', action='store_true')
        bridge.add_argument('--tol', type=float, default=1e-4)
        bridge.add_argument('--json', dest='output_path')

        efcoef = subparsers.add_parser('efcoef', help='Bohr-Fourier coefficient of F')
        self._add_pair_arguments(efcoef)
        efcoef.add_argument('--lambda', dest='lam', type=float, required=True)
        efcoef.add_argument('--y', type=float, required=True)
        efcoef.add_argument('--T', dest='T', type=float, required=True)
        efcoef.add_argument('--json', dest='output_path')

        recover = subparsers.add_parser('recover', help='Recover mu on an interval from F')
        self._add_pair_arguments(recover)
        recover.add_argument('--k', type=int, default=None)
        recover.add_argument('--a', type=float, required=True)
        recover.add_argument('--b', type=float, required=True)
        recover.add_argument('--s', type=float, default=None)
        recover.add_argument('--tol', type=float, default=1e-3)
        recover.add_argument('--json', dest='output_path')

        nevindex = subparsers.add_parser('nevindex', help='Negative index of a random Nevanlinna matrix')
        self._add_pair_arguments(nevindex)
        nevindex.add_argument('--points', type=int, required=True)
        nevindex.add_argument('--seed', type=int, required=True)
        nevindex.add_argument('--json', dest='output_path')

        approx = subparsers.add_parser('approx', help='Sup distance between F and its truncated series')
        self._add_pair_arguments(approx)
        approx.add_argument('--y', type=float, required=True)
        approx.add_argument('--n', type=int, nargs='+', required=True)
        approx.add_argument('--json', dest='output_path')

        probe = subparsers.add_parser('probe', help='Partial integrals of (1+t^2)^{-n/2} d|mu|')
        self._add_pair_arguments(probe)
        probe.add_argument('--n', type=int, required=True)
        probe.add_argument('--grid', type=float, nargs='+', default=[4.0, 8.0, 16.0, 32.0])
        probe.add_argument('--json', dest='output_path')

    @staticmethod
    def _add_pair_arguments(parser):
        parser.add_argument('--pair', choices=PAIR_CHOICES, required=True)
        parser.add_argument('--file', default=None)
        parser.add_argument('--c', type=float, default=None)
        parser.add_argument('--trunc', type=int, default=None)

    def handle(self, *args, **options):
        subcommand = options['subcommand']
        config = CliConfig(
            subcommand=subcommand,
            options={k: v for k, v in options.items() if k not in self._django_options},
            output_path=options.get('output_path'),
            seed=options.get('seed') or 0,
        )
        start = time.perf_counter()
        try:
            report, ok = getattr(self, f'_{subcommand}')(config, get_config())
        except FSPairError as e:
            logger.error(f"fspair {subcommand} failed: {str(e)}", exc_info=True)
            raise CommandError(str(e), returncode=1)

        if report is not None:
            if config.output_path:
                report_io.write_json(config.output_path, report)
            else:
                self.stdout.write(report_io.dumps(report))
        logger.info(f"fspair {subcommand} done in {time.perf_counter() - start:.2f} s (ok={ok})")
        if not ok:
            raise CommandError(f"{subcommand}: residual outside the requested tolerance", returncode=1)

    _django_options = {'verbosity', 'settings', 'pythonpath', 'traceback', 'no_color', 'force_color', 'skip_checks'}

    def _pair(self, config, fspair):
        options = config.options
        kind = options['pair']
        trunc = options.get('trunc')
        if kind == 'poisson':
            t_max = trunc or fspair['poisson_t_max']
            lambda_max = trunc or fspair['poisson_lambda_max']
            return make_poisson(t_max, lambda_max)
        if kind == 'guinand':
            c = fspair['guinand_c'] if options.get('c') is None else options['c']
            return make_guinand(c, trunc or fspair['guinand_n_max'])
        if kind == 'meyer':
            return make_meyer(trunc or fspair['meyer_n_max'])
        if not options.get('file'):
            raise CommandError("--pair file needs --file PATH", returncode=2)
        return load_pair(options['file'], fspair['merge_distance'])

    def _pairs(self, config, fspair):
        for name, description in BUILTIN_PAIRS.items():
            self.stdout.write(f"{name}\t{description}")
        return None, True

    def _verify(self, config, fspair):
        options = config.options
        tol = options['tol'] if options['tol'] is not None else fspair['quadrature_tol']
        pair = self._pair(config, fspair)
        testfn = TestFunctionSpec(TESTFN_CHOICES[options['testfn']], options['scale'], options['shift'])
        report = verify_pair(pair, testfn, quadrature_tol=tol).to_dict()
        return report, report['abs_residual'] < tol

    def _coeffs(self, config, fspair):
        options = config.options
        c = options['c']
        if options['family'] == 'guinand' and c is None:
            c = fspair['guinand_c']
        table = report_io.coefficient_table(options['family'], options['n'], c)
        if config.output_path:
            report_io.write_csv(config.output_path, table)
        else:
            self.stdout.write(table.to_csv(index=False, lineterminator='\n', float_format='%.17g'), ending='')
        logger.info(f"coeffs {options['family']} n={options['n']}: {len(table)} rows")
        return None, True

    def _bridge(self, config, fspair):
        options = config.options
        pair = self._pair(config, fspair)
        k, z, w, tmax = options['k'], options['z'], options['w'], options['tmax']
        rhs = nevanlinna.bridge_rhs(pair, k, w, z)
        if options['sweep']:
            ts = [t for t in 32.0 * 2.0 ** np.arange(16) if t <= tmax] or [tmax]
        else:
            ts = [tmax]
        sweep = []
        for t in ts:
            value = nevanlinna.bridge_sum(pair, k, w, z, t, fspair['kernel_singular_radius'])
            sweep.append({'T': t, 'value_re': value.real, 'value_im': value.imag, 'abs_residual': abs(value - rhs)})
        last = sweep[-1]
        report = report_io.flat_report(
            complex(last['value_re'], last['value_im']), rhs,
            pair=pair.name, k=k, z=z, w=w, tmax=tmax, tol=options['tol'],
            mu_truncation=pair.mu.radius, a_truncation=pair.a.radius, sweep=sweep,
        )
        return report, report['abs_residual'] < options['tol']

    def _efcoef(self, config, fspair):
        options = config.options
        pair = self._pair(config, fspair)
        value = nevanlinna.ef_coeff(pair, options['lam'], options['y'], options['T'], fspair['ef_panel_order'])
        expected = pair.a.value_at(options['lam']) if options['lam'] > 0 else None
        report = report_io.flat_report(
            value, expected, pair=pair.name, lam=options['lam'], y=options['y'], T=options['T'],
            a_truncation=pair.a.radius, panel_order=fspair['ef_panel_order'],
        )
        return report, True

    def _recover(self, config, fspair):
        options = config.options
        pair = self._pair(config, fspair)
        model = nevanlinna.build_model(
            pair, options['k'], tol=fspair['quadrature_tol'], limit=fspair['quadrature_limit']
        )
        if options['s'] is None:
            s_values = fspair['recover_s_sequence']
        else:
            s_values = [options['s']]
        result = nevanlinna.recover_measure(model, options['a'], options['b'], s_values)
        report = report_io.flat_report(
            result.extrapolated, result.target, pair=pair.name, k=model.k, a=result.a, b=result.b,
            s_values=result.s_values, values=result.values, q_poly=model.q_poly, tol=options['tol'],
            mu_truncation=pair.mu.radius,
        )
        return report, report['abs_residual'] < options['tol']

    def _nevindex(self, config, fspair):
        options = config.options
        pair = self._pair(config, fspair)
        model = nevanlinna.build_model(pair, tol=fspair['quadrature_tol'], limit=fspair['quadrature_limit'])
        rng = np.random.default_rng(options['seed'])
        points = rng.uniform(-2.0, 2.0, options['points']) + 1j * rng.uniform(0.2, 3.0, options['points'])
        matrix = nevanlinna.nev_matrix(model, points)
        index = nevanlinna.neg_index(matrix, fspair['eigen_tol_rel'])
        report = {
            'pair': pair.name,
            'k': model.k,
            'neg_index': index,
            'points': points,
            'seed': options['seed'],
            'q_poly': model.q_poly,
            'eigen_tol_rel': fspair['eigen_tol_rel'],
            'mu_truncation': pair.mu.radius,
        }
        logger.info(f"nevindex {pair.name}: {index} negative eigenvalues on {points.size} points (k={model.k})")
        return report, index <= model.k

    def _probe(self, config, fspair):
        options = config.options
        pair = self._pair(config, fspair)
        result = degree_probe(pair.mu, options['n'], options['grid'], limit=fspair['quadrature_limit'])
        report = {
            'pair': pair.name,
            'n': result.n,
            't_grid': result.t_grid,
            'partial_integrals': result.partial_integrals,
            'ratios': result.ratios,
            'verdict': result.verdict,
            'mu_truncation': pair.mu.radius,
        }
        return report, True

    def _approx(self, config, fspair):
        options = config.options
        pair = self._pair(config, fspair)
        grid_points, half_width = fspair['ap_grid_points'], fspair['ap_grid_halfwidth']
        sups = nevanlinna.ap_proxy(pair, options['y'], options['n'], grid_points, half_width)
        report = {
            'pair': pair.name,
            'y': options['y'],
            'n': options['n'],
            'sup_distance': sups,
            'grid_points': grid_points,
            'grid_halfwidth': half_width,
            'a_truncation': pair.a.radius,
        }
        return report, True

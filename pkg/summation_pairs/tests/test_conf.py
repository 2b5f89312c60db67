import os
import tempfile

from django.test import SimpleTestCase, override_settings

from summation_pairs.conf import get_config, load_overrides


class ConfigTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def write(self, text):
        path = os.path.join(self.tmp.name, 'fspair.json5')
        with open(path, 'w') as f:
            f.write(text)
        return path

    def test_defaults(self):
        config = get_config()
        self.assertEqual(config['poisson_t_max'], 64.0)
        self.assertEqual(config['guinand_n_max'], 512)
        self.assertEqual(config['meyer_n_max'], 2000)
        self.assertEqual(config['recover_s_sequence'], [1e-1, 1e-2, 1e-3])

    def test_json5_override(self):
        path = self.write('// smaller run\n{meyer_n_max: 400, quadrature_tol: 1e-6,}\n')
        config = get_config(path)
        self.assertEqual(config['meyer_n_max'], 400)
        self.assertEqual(config['quadrature_tol'], 1e-6)
        self.assertEqual(config['guinand_n_max'], 512)

    def test_override_from_settings(self):
        path = self.write('{guinand_c: 0.125}')
        with override_settings(FSPAIR_CONFIG=path):
            self.assertEqual(get_config()['guinand_c'], 0.125)

    def test_shipped_template_is_valid(self):
        template = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'data', 'defaults.json5')
        self.assertEqual(get_config(template)['poisson_t_max'], 64)

    def test_bad_overrides(self):
        with self.assertRaises(ValueError):
            load_overrides(self.write('{poisson_tmax: 3}'))
        with self.assertRaises(ValueError):
            load_overrides(self.write('[1, 2]'))
        with self.assertRaises(FileNotFoundError):
            load_overrides(os.path.join(self.tmp.name, 'missing.json5'))
        self.assertEqual(load_overrides(None), {})

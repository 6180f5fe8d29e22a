from django.test import SimpleTestCase
from django.urls import reverse


class SpectrumViewTests(SimpleTestCase):
    def test_neutron_spectrum(self):
        response = self.client.get(reverse('spectrum'), {'n_states': 4})
        self.assertEqual(response.status_code, 200)
        data = response.json()
        self.assertTrue(data['success'])
        self.assertEqual(data['particle'], 'neutron')
        self.assertEqual(len(data['rows']), 4)
        self.assertEqual(len(data['rows'][0]['omega']), 4)
        self.assertAlmostEqual(data['rows'][0]['omega'][3] / 4067.0, 1.0, delta=0.005)
        self.assertAlmostEqual(data['x0'] / 5.868e-6, 1.0, delta=0.001)

    def test_custom_mass(self):
        data = self.client.get(reverse('spectrum'), {'particle': 'custom', 'mass': '1.0', 'n_states': 2}).json()
        self.assertEqual(data['particle'], 'custom')
        self.assertEqual(data['mass'], 1.0)

    def test_invalid_request(self):
        response = self.client.get(reverse('spectrum'), {'n_states': 500})
        self.assertEqual(response.status_code, 400)
        data = response.json()
        self.assertFalse(data['success'])
        self.assertIn('n_states', data['errors'])

    def test_get_only(self):
        self.assertEqual(self.client.post(reverse('spectrum')).status_code, 405)


class PredictViewTests(SimpleTestCase):
    def test_neutron_report(self):
        response = self.client.get(reverse('predict'), {'sigma': '500', 'n_states': 2})
        self.assertEqual(response.status_code, 200)
        report = response.json()['report']
        self.assertAlmostEqual(report['entropic_power'] / 1.76e-31, 1.0, delta=0.01)
        self.assertFalse(report['backreaction'])

    def test_backreaction_flag(self):
        report = self.client.get(reverse('predict'), {'sigma': 'inf', 'backreaction': '1', 'n_states': 2}).json()['report']
        self.assertEqual(report['sigma'], 'inf')
        self.assertEqual(report['dp_power_effective'], 2.0 * report['dp_power'])

    def test_rejects_bad_sigma(self):
        response = self.client.get(reverse('predict'), {'sigma': '-3'})
        self.assertEqual(response.status_code, 400)
        self.assertIn('sigma', response.json()['errors'])

    def test_single_level_basis(self):
        response = self.client.get(reverse('predict'), {'n_states': 1})
        self.assertEqual(response.status_code, 400)
        self.assertIn('__all__', response.json()['errors'])

import math

from django.test import SimpleTestCase

from ..basis import build_context, mass_scaled_context
from ..constants import NEUTRON_LIFETIME, NEUTRON_MASS, PLANCK_MASS
from ..predictions import (
    decoherence_time_scaled,
    dp_power,
    entropic_power,
    prediction_report,
    sigma_bound_from_storage,
    sigma_from_energy_match,
)
from .base import neutron_context

KAPPA_PLANCK = 1.30e19


class EntropicPowerTests(SimpleTestCase):
    def test_reference_values(self):
        self.assertAlmostEqual(entropic_power(neutron_context(6), 500) / 1.76e-31, 1.0, delta=0.01)
        kilogram = build_context(1.0, 9.81, 2)
        self.assertAlmostEqual(entropic_power(kilogram, 500) / 1.25e-13, 1.0, delta=0.01)

    def test_conservative_limit_and_inputs(self):
        self.assertEqual(entropic_power(neutron_context(6), math.inf), 0.0)
        with self.assertRaises(ValueError):
            entropic_power(neutron_context(6), 0)

    def test_mass_dependence(self):
        reference = build_context(NEUTRON_MASS, 9.81, 2)
        for kappa in (1e-3, 0.5, 10.0, 1e6, 1e12):
            scaled = build_context(NEUTRON_MASS * kappa, 9.81, 2)
            ratio = entropic_power(scaled, 500) / entropic_power(reference, 500)
            self.assertAlmostEqual(ratio / kappa ** (2.0 / 3.0), 1.0, places=9)


class DiosiPenroseTests(SimpleTestCase):
    def test_reference_values(self):
        self.assertAlmostEqual(dp_power(NEUTRON_MASS, 1e-15) / 1.66e-27, 1.0, delta=0.01)
        self.assertAlmostEqual(dp_power(1.0, 1e-15) / 0.99, 1.0, delta=0.02)

    def test_backreaction_doubles(self):
        for mass in (NEUTRON_MASS, 1.0):
            self.assertEqual(dp_power(mass, 1e-15, backreaction=True), 2.0 * dp_power(mass, 1e-15))

    def test_scaling(self):
        base = dp_power(1.0, 1e-15)
        self.assertAlmostEqual(dp_power(3.0, 1e-15) / base, 3.0, places=12)
        self.assertAlmostEqual(dp_power(1.0, 2e-15) / base, 0.125, places=12)

    def test_rejects_nonpositive_inputs(self):
        for mass, r0 in ((0.0, 1e-15), (1.0, 0.0), (-1.0, 1e-15)):
            with self.assertRaises(ValueError):
                dp_power(mass, r0)


class BoundTests(SimpleTestCase):
    def test_energy_match(self):
        self.assertAlmostEqual(sigma_from_energy_match(neutron_context(6), 1.66e-27) / 0.053, 1.0, delta=0.05)

    def test_storage_bound(self):
        ctx = neutron_context(6)
        gap = ctx.energies[1] - ctx.energies[0]
        bound = sigma_bound_from_storage(ctx, NEUTRON_LIFETIME, gap)
        self.assertAlmostEqual(bound / 4.6e5, 1.0, delta=0.02)
        self.assertAlmostEqual(sigma_bound_from_storage(ctx, NEUTRON_LIFETIME / 2, gap), bound / 2, delta=bound * 1e-12)
        self.assertAlmostEqual(sigma_bound_from_storage(ctx, NEUTRON_LIFETIME, 2 * gap), bound / 2, delta=bound * 1e-12)
        with self.assertRaises(ValueError):
            sigma_bound_from_storage(ctx, 0.0, gap)

    def test_mass_scaled_times(self):
        self.assertAlmostEqual(decoherence_time_scaled(NEUTRON_LIFETIME, KAPPA_PLANCK) / 3.75e-4, 1.0, delta=0.01)
        self.assertAlmostEqual(decoherence_time_scaled(1.0, 1 / KAPPA_PLANCK) / 2.35e6, 1.0, delta=0.01)
        self.assertEqual(decoherence_time_scaled(NEUTRON_LIFETIME, 1.0), NEUTRON_LIFETIME)
        with self.assertRaises(ValueError):
            decoherence_time_scaled(1.0, -2.0)

    def test_scaled_context_ratio_matches(self):
        scaled, ratio = mass_scaled_context(neutron_context(6), PLANCK_MASS / NEUTRON_MASS)
        self.assertAlmostEqual(ratio * NEUTRON_LIFETIME / 3.75e-4, 1.0, delta=0.01)
        self.assertAlmostEqual(scaled.time_scale / neutron_context(6).time_scale, ratio, places=9)


class PredictionReportTests(SimpleTestCase):
    def test_report(self):
        report = prediction_report(neutron_context(6), 'neutron', 500.0, kappas=[KAPPA_PLANCK])
        self.assertFalse(report.backreaction)
        self.assertEqual(report.dp_power_effective, report.dp_power)
        self.assertEqual(report.dp_power_backreaction, 2.0 * report.dp_power)
        self.assertAlmostEqual(report.sigma_bound / 4.6e5, 1.0, delta=0.02)

        data = report.to_dict()
        self.assertEqual(data['particle'], 'neutron')
        self.assertEqual(data['scaled_times'][0]['kappa'], KAPPA_PLANCK)
        self.assertAlmostEqual(data['scaled_times'][0]['t_scaled'] / 3.75e-4, 1.0, delta=0.01)

    def test_backreaction_report(self):
        report = prediction_report(neutron_context(6), 'neutron', 500.0, backreaction=True)
        self.assertEqual(report.dp_power_effective, 2.0 * report.dp_power)

    def test_single_state_basis_is_rejected(self):
        with self.assertRaises(ValueError):
            prediction_report(build_context(NEUTRON_MASS, 9.81, 1), 'neutron', 500.0)

import math

import numpy as np
from django.test import SimpleTestCase, override_settings

from ..basis import (
    CONSERVATIVE,
    build_context,
    build_operators,
    check_sigma,
    drive_coefficient,
    mass_scaled_context,
)
from ..constants import NEUTRON_MASS
from ..special_functions import airy_ai_prime
from .base import neutron_context


class BasisContextTests(SimpleTestCase):
    def test_neutron_scales(self):
        ctx = neutron_context()
        self.assertAlmostEqual(ctx.x0 / 5.868e-6, 1.0, delta=1e-3)
        self.assertAlmostEqual(1.0 / ctx.time_scale / 914.3, 1.0, delta=1e-3)
        self.assertAlmostEqual(ctx.drive_prefactor / 186.4, 1.0, delta=1e-3)

    def test_resonance_frequency(self):
        omega_03 = neutron_context().transition_frequency(0, 3)
        self.assertLess(abs(omega_03 - 4.07e3) / 4.07e3, 5e-3)

    def test_norms_match_airy_slopes(self):
        ctx = neutron_context()
        self.assertEqual(len(ctx.norms), 20)
        np.testing.assert_allclose(ctx.norms, [abs(airy_ai_prime(a)) for a in ctx.zeros], atol=1e-8)

    def test_quadrature_widens_for_large_bases(self):
        ctx = build_context(NEUTRON_MASS, n_states=40)
        self.assertGreater(ctx.scheme.xi_max, abs(ctx.zeros[-1]))

    def test_rejects_bad_inputs(self):
        with self.assertRaises(ValueError):
            build_context(-1.0)
        with self.assertRaises(ValueError):
            build_context(NEUTRON_MASS, gravity_accel=0.0)
        with self.assertRaises(ValueError):
            build_context(NEUTRON_MASS, n_states=0)

    @override_settings(MAX_STATES=10)
    def test_state_cap_comes_from_settings(self):
        with self.assertRaises(ValueError):
            build_context(NEUTRON_MASS, n_states=11)

    def test_mass_scaling_of_time(self):
        ctx = neutron_context(6)
        scaled, ratio = mass_scaled_context(ctx, 8.0)
        self.assertAlmostEqual(ratio, 0.5, places=12)
        self.assertAlmostEqual(scaled.time_scale / ctx.time_scale, 0.5, places=12)
        self.assertEqual(scaled.zeros, ctx.zeros)


class OperatorSetTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.ctx = neutron_context()
        cls.ops = build_operators(cls.ctx)

    def test_hamiltonian_spectrum(self):
        eigenvalues = np.linalg.eigvalsh(self.ops.hamiltonian)
        expected = np.sort(-self.ctx.zeros.as_array())
        np.testing.assert_allclose(eigenvalues[:16], expected[:16], atol=1e-6)

    def test_position_elements(self):
        xi = self.ops.xi
        a = self.ctx.zeros.as_array()
        self.assertAlmostEqual(xi[0, 0], 2.0 / 3.0 * abs(a[0]), delta=1e-6)
        self.assertAlmostEqual(abs(xi[0, 1]), 2.0 / (a[0] - a[1]) ** 2, delta=1e-6)
        np.testing.assert_array_equal(xi, xi.T)

    def test_drive_integral_is_antisymmetric(self):
        a_matrix = self.ops.drive_integral
        np.testing.assert_allclose(a_matrix, -a_matrix.T, atol=1e-9)
        np.testing.assert_allclose(np.diag(a_matrix), 0.0, atol=1e-9)
        momentum = self.ops.momentum
        np.testing.assert_allclose(momentum, momentum.conj().T, atol=1e-9)
        w = self.ops.drive_matrix(0.4)
        np.testing.assert_allclose(w, w.conj().T, atol=1e-9)

    def test_boundary_curvature_signs(self):
        n = self.ops.n_states
        j, k = np.indices((n, n))
        np.testing.assert_allclose(self.ops.boundary_curvature, (-1.0) ** (j - k), atol=1e-8)

    def test_conservative_dissipator_is_identity(self):
        self.assertTrue(self.ops.conservative)
        np.testing.assert_array_equal(self.ops.dissipator_d, np.eye(self.ops.n_states))

    def test_dissipator_approaches_identity(self):
        ops = build_operators(self.ctx, 1e6)
        d = ops.dissipator_d
        np.testing.assert_allclose(d, d.T, atol=1e-12)
        self.assertLess(np.max(np.abs(d - np.eye(ops.n_states))), 1e-3)
        first_order = (np.eye(ops.n_states) - d) * 1e6 / 1j
        self.assertAlmostEqual(first_order[0, 0].real, self.ops.xi[0, 0], delta=1e-3)

    def test_dissipator_shift(self):
        np.testing.assert_array_equal(self.ops.dissipator_shift, np.zeros((self.ops.n_states,) * 2))
        ops = build_operators(self.ctx, 500.0)
        np.testing.assert_allclose(ops.dissipator_d - np.eye(ops.n_states), ops.dissipator_shift, atol=1e-15)
        far = build_operators(self.ctx, 1e9)
        self.assertAlmostEqual((far.dissipator_shift[0, 0] * 1e9 / -1j).real, self.ops.xi[0, 0], delta=1e-6)

    def test_leakage_shrinks_with_basis_size(self):
        leaks = []
        for n_states in (4, 8, 12, 16):
            shift = build_operators(build_context(NEUTRON_MASS, 9.81, n_states), 500.0).dissipator_shift
            defect = shift + shift.conj().T + shift.conj().T @ shift
            leaks.append(np.max(np.abs(np.diag(defect)[:3])))
        self.assertTrue(np.all(np.diff(leaks) < 0), leaks)
        self.assertLess(leaks[-1], 1e-7)

    def test_with_sigma_rebuilds_dissipator(self):
        rebuilt = self.ops.with_sigma(500.0)
        np.testing.assert_allclose(rebuilt.dissipator_d, build_operators(self.ctx, 500.0).dissipator_d)
        self.assertIs(rebuilt.h, self.ops.h)

    def test_drive_coefficient(self):
        self.assertAlmostEqual(drive_coefficient(self.ctx, 2.05e-3, 4.07e3, 0.0), self.ctx.drive_prefactor * 2.05e-3)
        with self.assertRaises(ValueError):
            drive_coefficient(self.ctx, -1.0, 4.07e3, 0.0)


class MassInvarianceTests(SimpleTestCase):
    def test_unitless_operators_do_not_depend_on_mass(self):
        reference = build_operators(neutron_context(8), 500.0)
        rng = np.random.default_rng(19)
        for kappa in 10.0 ** rng.uniform(-3.0, 19.0, 10):
            scaled = build_operators(build_context(NEUTRON_MASS * kappa, 9.81, 8), 500.0)
            for name in ('h', 'xi', 'drive_integral', 'dissipator_d', 'boundary_curvature'):
                np.testing.assert_allclose(getattr(scaled, name), getattr(reference, name), rtol=0, atol=1e-9, err_msg=name)


class SigmaTests(SimpleTestCase):
    def test_accepts_positive_and_infinite(self):
        self.assertEqual(check_sigma(500), 500.0)
        self.assertTrue(math.isinf(check_sigma(CONSERVATIVE)))

    def test_rejects_nonpositive_and_nan(self):
        for bad in (0.0, -3.0, math.nan, -math.inf):
            with self.assertRaises(ValueError):
                check_sigma(bad)

import numpy as np
from django.test import SimpleTestCase, override_settings

from ..basis import build_operators
from ..dynamics import (
    DensityMatrix,
    Drive,
    conservative_rhs,
    converged_states,
    energy_rate_check,
    entropic_rhs,
    hausdorff_rhs,
    integrate,
    propagate,
    purity,
    purity_rate,
    purity_rate_hausdorff,
)
from ..exceptions import PropagationError
from .base import neutron_context


def random_state(rng, n_states, support=None):
    support = support or n_states
    g = rng.normal(size=(support, support)) + 1j * rng.normal(size=(support, support))
    rho = np.zeros((n_states, n_states), dtype=complex)
    rho[:support, :support] = g @ g.conj().T
    return rho / np.trace(rho).real


class DensityMatrixTests(SimpleTestCase):
    def test_mixture(self):
        rho = DensityMatrix.mixture((0.597, 0.340, 0.063), 5)
        np.testing.assert_allclose(rho.populations, [0.597, 0.340, 0.063, 0.0, 0.0])
        self.assertAlmostEqual(rho.trace, 1.0)
        self.assertEqual(rho.trace_drift, 0.0)

    def test_mixture_must_fit_basis(self):
        with self.assertRaises(ValueError):
            DensityMatrix.mixture((0.5, 0.3, 0.2), 2)

    def test_pure_state_has_unit_purity(self):
        rho = DensityMatrix.pure([1.0, 1j, 0.0])
        self.assertAlmostEqual(purity(rho), 1.0, places=12)

    def test_validate_rejects_excess_trace(self):
        with self.assertRaises(ValueError):
            DensityMatrix.from_array(np.diag([0.8, 0.5])).validate()

    def test_validate_rejects_negative_eigenvalue(self):
        with self.assertRaises(ValueError):
            DensityMatrix.from_array(np.diag([1.2, -0.2])).validate()


class DriveTests(SimpleTestCase):
    def test_amplitude(self):
        self.assertAlmostEqual(Drive(2.05e-3, 4.1e3).amplitude, 5e-7)
        self.assertTrue(Drive().off)

    def test_rejects_invalid_parameters(self):
        with self.assertRaises(ValueError):
            Drive(-1e-3, 4.0e3)
        with self.assertRaises(ValueError):
            Drive(1e-3, 0.0)


class IntegratorTests(SimpleTestCase):
    def test_state_does_not_depend_on_other_checkpoints(self):
        generator = np.diag([1.0, 2.0, 3.5]) + 0.1
        rho0 = DensityMatrix.mixture((0.6, 0.4), 3).data

        def rhs(tau, rho):
            product = generator @ rho
            return -1j * (product - product.conj().T)

        dense = integrate(rhs, rho0, [0.0, 0.37, 1.0, 2.25], 0.01)
        sparse = integrate(rhs, rho0, [0.0, 2.25], 0.01)
        single = integrate(rhs, rho0, [0.37], 0.01)
        np.testing.assert_array_equal(dense[-1], sparse[-1])
        np.testing.assert_array_equal(dense[1], single[0])

    def test_rejects_unsorted_checkpoints(self):
        with self.assertRaises(ValueError):
            integrate(lambda tau, rho: rho, np.eye(2), [1.0, 0.5], 0.1)


class RungeKuttaOrderTests(SimpleTestCase):
    def test_global_error_is_fourth_order(self):
        ctx = neutron_context(3)
        ops = build_operators(ctx)
        drive = Drive(2.05e-3, ctx.transition_frequency(0, 2))
        rho0 = DensityMatrix.mixture((0.597, 0.340, 0.063), 3).data

        def rhs(tau, rho):
            return conservative_rhs(ops, rho, tau, drive)

        reference = integrate(rhs, rho0, [2.0], 0.1 / 64)[-1]
        errors = [np.max(np.abs(integrate(rhs, rho0, [2.0], step)[-1] - reference)) for step in (0.1, 0.05)]
        order = np.log2(errors[0] / errors[1])
        self.assertLess(abs(order - 4.0), 0.3, errors)


class ConservativeEvolutionTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.ctx = neutron_context(6)
        cls.ops = build_operators(cls.ctx)

    def test_undriven_mixture_is_stationary(self):
        rho0 = DensityMatrix.mixture((0.597, 0.340, 0.063), 6)
        trajectory = propagate(self.ops, rho0, tau_final=10.0, n_outputs=5, verify_step=False)
        np.testing.assert_allclose(trajectory.populations, np.tile(rho0.populations, (5, 1)), atol=1e-12)

    def test_driven_evolution_preserves_trace_and_purity(self):
        rng = np.random.default_rng(3)
        rho0 = DensityMatrix.from_array(random_state(rng, 6))
        drive = Drive(2.05e-3, self.ctx.transition_frequency(0, 3))
        trajectory = propagate(self.ops, rho0, drive, tau_final=5.0, n_outputs=6, verify_step=False)
        self.assertLess(np.max(np.abs(trajectory.trace_drift)), 1e-10)
        np.testing.assert_allclose(trajectory.purity, purity(rho0), atol=1e-8)
        self.assertEqual(conservative_rhs(self.ops, rho0, 0.0).shape, (6, 6))

    def test_entropic_generator_needs_finite_sigma(self):
        with self.assertRaises(ValueError):
            entropic_rhs(self.ops, np.eye(6) / 6, 0.0)
        self.assertEqual(purity_rate(self.ops, np.eye(6) / 6), 0.0)

    @override_settings(MAX_STEP_HALVINGS=0)
    def test_step_halving_budget(self):
        rho0 = DensityMatrix.mixture((1.0,), 6)
        with self.assertRaises(PropagationError):
            converged_states(self.ops, rho0, Drive(2e-3, 4.0e3), [0.0, 1.0], verify_step=True)

    def test_step_verification_converges(self):
        rho0 = DensityMatrix.mixture((1.0,), 6)
        _, step = converged_states(self.ops, rho0, Drive(2e-3, 4.0e3), [0.0, 1.0], verify_step=True)
        self.assertLess(step, 0.002)


class EntropicEvolutionTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.ctx = neutron_context(6)
        cls.ops = build_operators(cls.ctx, 500.0)

    def test_purity_never_increases(self):
        rng = np.random.default_rng(2024)
        checkpoints = np.linspace(0.0, 2.0, 21)
        for _ in range(20):
            rho0 = DensityMatrix.from_array(random_state(rng, 6))
            trajectory = propagate(self.ops, rho0, checkpoints=checkpoints, verify_step=False, check=False)
            self.assertTrue(np.all(np.diff(trajectory.purity) <= 1e-9), trajectory.purity)

    def test_purity_rate_matches_finite_difference(self):
        rng = np.random.default_rng(7)
        rho0 = DensityMatrix.from_array(random_state(rng, 6))
        h = 1e-3
        trajectory = propagate(self.ops, rho0, checkpoints=[0.0, h, 2 * h], step=h / 4, verify_step=False, check=False)
        p0, p1, p2 = trajectory.purity
        numeric = (-3.0 * p0 + 4.0 * p1 - p2) / (2.0 * h)
        exact = purity_rate(self.ops, rho0)
        self.assertLess(exact, 0.0)
        self.assertLess(abs(numeric - exact) / abs(exact), 1e-2)

    def test_large_truncation_leak_is_reported(self):
        ops = build_operators(neutron_context(4), 1.0)
        rho0 = DensityMatrix.mixture((0.5, 0.3, 0.2), 4)
        with self.assertRaises(PropagationError) as caught:
            propagate(ops, rho0, tau_final=1.0, verify_step=False, trace_tolerance=1e-6)
        self.assertIsNotNone(caught.exception.tau)


class LargeSigmaTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.ctx = neutron_context(12)
        cls.conservative = build_operators(cls.ctx)
        cls.rho = DensityMatrix.mixture((0.597, 0.340, 0.063), 12).data + 0.0
        cls.rho[0, 1] = cls.rho[1, 0] = 0.1

    def _entropic_gap(self, sigma):
        ops = build_operators(self.ctx, sigma)
        return np.max(np.abs(entropic_rhs(ops, self.rho, 0.0) - conservative_rhs(self.conservative, self.rho, 0.0)))

    def test_entropic_generator_converges_as_inverse_sigma(self):
        ratio = self._entropic_gap(1e3) / self._entropic_gap(1e4)
        self.assertAlmostEqual(ratio, 10.0, delta=0.5)

    def test_hausdorff_expansion_captures_leading_correction(self):
        ops = build_operators(self.ctx, 1e4)
        entropic = entropic_rhs(ops, self.rho, 0.0)[:3, :3]
        expansion = hausdorff_rhs(ops, self.rho, 0.0)[:3, :3]
        conservative = conservative_rhs(self.conservative, self.rho, 0.0)[:3, :3]
        residual = np.max(np.abs(entropic - expansion))
        self.assertLess(residual, 0.05 * np.max(np.abs(entropic - conservative)))

    def test_hausdorff_purity_rate(self):
        rng = np.random.default_rng(11)
        rho = random_state(rng, 12, support=3)
        ops = build_operators(self.ctx, 1e4)
        exact = purity_rate(ops, rho)
        approximate = purity_rate_hausdorff(ops, rho)
        self.assertLess(abs(approximate - exact) / abs(exact), 2e-2)


class EnergyRateTests(SimpleTestCase):
    def test_heating_rate_matches_closed_form(self):
        ctx = neutron_context(20)
        ops = build_operators(ctx, 500.0)
        ground = DensityMatrix.mixture((1.0,), 20)
        numeric, analytic = energy_rate_check(ctx, ops, ground, tau_window=5.0, verify_step=False)
        self.assertAlmostEqual(analytic / 1.763e-31, 1.0, delta=2e-3)
        self.assertLess(abs(numeric - analytic) / analytic, 2e-2)

    def test_conservative_model_has_no_heating(self):
        ctx = neutron_context(6)
        with self.assertRaises(ValueError):
            energy_rate_check(ctx, build_operators(ctx), DensityMatrix.mixture((1.0,), 6), tau_window=1.0)

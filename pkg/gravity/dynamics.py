"""
Density-matrix propagation under the unitless mirror-frame master equations.

Conservative:  d rho/d tau = -i [h + xi + w(tau), rho]
Entropic:      d rho/d tau = -i [h + w(tau), rho] + sigma (D rho D^+ - rho)

In the entropic generator gravity lives entirely in the dissipator, so xi
is absent from the commutator. The trace is never renormalized: leakage out
of the truncated basis is surfaced as a diagnostic.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings

from .exceptions import PropagationError
from .predictions import entropic_power

logger = logging.getLogger(__name__)

HERMITICITY_TOLERANCE = 1e-9
POSITIVITY_FLOOR = -1e-8


@dataclass(frozen=True)
class Drive:
    """Mirror oscillation: strength a*omega in m/s, omega in rad/s."""

    strength: float = 0.0
    omega: float = 1.0

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError(f'drive strength must be non-negative, got {self.strength!r}')
        if not self.omega > 0:
            raise ValueError(f'drive frequency must be positive, got {self.omega!r}')

    @property
    def off(self):
        return self.strength == 0.0

    @property
    def amplitude(self):
        """Oscillation amplitude a in metres."""
        return self.strength / self.omega


DRIVE_OFF = Drive()


@dataclass(eq=False)
class DensityMatrix:
    data: np.ndarray
    trace_drift: float = 0.0
    hermiticity_defect: float = 0.0
    min_eigenvalue: float = 0.0

    @classmethod
    def from_array(cls, data, reference_trace=1.0):
        data = np.array(data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f'density matrix must be square, got shape {data.shape}')
        return cls(
            data=data,
            trace_drift=float(np.real(np.trace(data)) - reference_trace),
            hermiticity_defect=float(np.max(np.abs(data - data.conj().T), initial=0.0)),
            min_eigenvalue=float(np.min(np.linalg.eigvalsh(0.5 * (data + data.conj().T)))),
        )

    @classmethod
    def mixture(cls, populations, n_states):
        """Incoherent mixture with the given leading populations."""
        populations = np.asarray(populations, dtype=float)
        if populations.size > n_states:
            raise ValueError(f'{populations.size} populations do not fit {n_states} states')
        diag = np.zeros(n_states)
        diag[:populations.size] = populations
        return cls.from_array(np.diag(diag), reference_trace=float(diag.sum()))

    @classmethod
    def pure(cls, amplitudes):
        psi = np.asarray(amplitudes, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls.from_array(np.outer(psi, psi.conj()))

    @property
    def n_states(self):
        return self.data.shape[0]

    @property
    def trace(self):
        return float(np.real(np.trace(self.data)))

    @property
    def populations(self):
        return np.real(np.diag(self.data)).copy()

    def validate(self, trace_tolerance=None):
        trace_tolerance = settings.TRACE_TOLERANCE if trace_tolerance is None else trace_tolerance
        if self.hermiticity_defect > HERMITICITY_TOLERANCE:
            raise ValueError(f'density matrix is not Hermitian (defect {self.hermiticity_defect:.2e})')
        if self.trace > 1.0 + trace_tolerance:
            raise ValueError(f'density matrix trace {self.trace:.6f} exceeds 1')
        if self.min_eigenvalue < POSITIVITY_FLOOR:
            raise ValueError(f'density matrix has negative eigenvalue {self.min_eigenvalue:.2e}')
        return self


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: list
    populations: np.ndarray
    purity: np.ndarray
    energy: np.ndarray          # units of energy_scale
    trace_drift: np.ndarray
    step: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.states[-1]


def _as_array(rho, n_states):
    data = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if data.shape != (n_states, n_states):
        raise ValueError(f'state of shape {data.shape} does not match a {n_states}-state operator set')
    return data


def _generator(ops, drive, kind):
    """RHS closure f(tau, rho) for one of 'conservative', 'entropic', 'hausdorff'."""
    ctx = ops.context
    if kind == 'conservative':
        base = ops.hamiltonian.astype(complex)
    elif kind in ('entropic', 'hausdorff'):
        if ops.conservative:
            raise ValueError(f'{kind} generator needs a finite sigma; operator set is conservative')
        base = ops.h.astype(complex) if kind == 'entropic' else ops.hamiltonian.astype(complex)
    else:
        raise ValueError(f'unknown generator {kind!r}')

    coupling = 1j * ops.drive_integral
    amplitude = ctx.drive_prefactor * drive.strength
    omega = drive.omega * ctx.time_scale
    sigma = ops.sigma
    k = ops.dissipator_shift
    k_dag = k.conj().T
    xi = ops.xi.astype(complex)
    xi_sq = xi @ xi

    def rhs(tau, rho):
        if amplitude:
            hamiltonian = base + (amplitude * math.cos(omega * tau)) * coupling
        else:
            hamiltonian = base
        product = hamiltonian @ rho
        out = -1j * (product - product.conj().T)
        if kind == 'entropic':
            # D rho D^+ - rho with D = I + K
            k_rho = k @ rho
            out += sigma * (k_rho @ k_dag + k_rho + rho @ k_dag)
        elif kind == 'hausdorff':
            out += (xi @ rho @ xi - 0.5 * (xi_sq @ rho + rho @ xi_sq)) / sigma
        return out

    return rhs


def conservative_rhs(ops, rho, tau, drive=DRIVE_OFF):
    """-i [h + xi + w(tau), rho]."""
    return _generator(ops, drive, 'conservative')(tau, _as_array(rho, ops.n_states))


def entropic_rhs(ops, rho, tau, drive=DRIVE_OFF):
    """-i [h + w(tau), rho] + sigma (D rho D^+ - rho)."""
    return _generator(ops, drive, 'entropic')(tau, _as_array(rho, ops.n_states))


def hausdorff_rhs(ops, rho, tau, drive=DRIVE_OFF):
    """Large-sigma expansion: conservative generator plus (1/sigma)(xi rho xi - {xi^2, rho}/2)."""
    return _generator(ops, drive, 'hausdorff')(tau, _as_array(rho, ops.n_states))


def purity(rho):
    data = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return float(np.real(np.trace(data @ data)))


def purity_rate(ops, rho):
    """Exact purity rate -2 sigma Tr(rho^2 - rho D rho D^+) with the drive off."""
    if ops.conservative:
        return 0.0
    data = _as_array(rho, ops.n_states)
    k = ops.dissipator_shift
    rho_sq = data @ data
    gain = np.trace(data @ k @ data @ k.conj().T) + 2.0 * np.real(np.trace(rho_sq @ k))
    return float(2.0 * ops.sigma * np.real(gain))


def purity_rate_hausdorff(ops, rho):
    """Leading large-sigma purity rate -(2/sigma) Tr(rho^2 xi^2 - (rho xi)^2)."""
    if ops.conservative:
        return 0.0
    data = _as_array(rho, ops.n_states)
    xi = ops.xi
    rho_xi = data @ xi
    return float(-2.0 / ops.sigma * np.real(np.trace(data @ data @ xi @ xi) - np.trace(rho_xi @ rho_xi)))


def _rk4(rhs, rho, tau, step):
    k1 = rhs(tau, rho)
    k2 = rhs(tau + 0.5 * step, rho + 0.5 * step * k1)
    k3 = rhs(tau + 0.5 * step, rho + 0.5 * step * k2)
    k4 = rhs(tau + step, rho + step * k3)
    rho = rho + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return 0.5 * (rho + rho.conj().T)


def integrate(rhs, rho0, checkpoints, step):
    """
    Fixed-step RK4 on the grid k * step; the state at a checkpoint between
    grid points comes from one partial step off the grid. The state at a
    given time therefore does not depend on the other checkpoints.
    ``checkpoints`` must be sorted and non-negative.
    """
    checkpoints = np.asarray(checkpoints, dtype=float)
    if checkpoints.ndim != 1 or checkpoints.size == 0 or np.any(np.diff(checkpoints) < 0) or checkpoints[0] < 0:
        raise ValueError('checkpoints must be a non-empty, sorted sequence of non-negative times')
    if not step > 0:
        raise ValueError(f'step must be positive, got {step!r}')
    rho = np.array(rho0, dtype=complex)
    k = 0
    states = []
    for target in checkpoints:
        n_full = int(math.floor(target / step + 1e-9))
        while k < n_full:
            rho = _rk4(rhs, rho, k * step, step)
            k += 1
        remainder = float(target) - k * step
        if remainder > 0:
            states.append(_rk4(rhs, rho, k * step, remainder))
        else:
            states.append(rho.copy())
    return states


def initial_step(ops, drive):
    """min(max step, 0.02 / unitless drive frequency)."""
    step = settings.MAX_STEP
    if not drive.off:
        step = min(step, 0.02 / (drive.omega * ops.context.time_scale))
    return step


def converged_states(ops, rho0, drive, checkpoints, kind=None, step=None, verify_step=None):
    """
    States at ``checkpoints`` with a step that passes the halving test:
    halving it changes the final populations by less than the step tolerance.
    Returns (states, step used).
    """
    kind = kind or ('conservative' if ops.conservative else 'entropic')
    verify_step = settings.VERIFY_STEP if verify_step is None else verify_step
    rhs = _generator(ops, drive, kind)
    step = initial_step(ops, drive) if step is None else step
    data = _as_array(rho0, ops.n_states)

    states = integrate(rhs, data, checkpoints, step)
    if not verify_step:
        return states, step

    for _ in range(settings.MAX_STEP_HALVINGS):
        finer = integrate(rhs, data, checkpoints, 0.5 * step)
        change = float(np.max(np.abs(np.real(np.diag(finer[-1])) - np.real(np.diag(states[-1])))))
        states, step = finer, 0.5 * step
        if change < settings.STEP_TOLERANCE:
            return states, step
        logger.info('step halved to %.3e (population change %.2e)', step, change)
    raise PropagationError(f'step halving did not converge below {settings.STEP_TOLERANCE:g} (last step {step:.3e})')


def check_diagnostics(trace_drift, min_eigenvalue, tau, trace_tolerance=None, strict=True):
    """
    Raise PropagationError for a negative eigenvalue below the positivity
    tolerance, and for trace drift beyond ``trace_tolerance`` when ``strict``.
    """
    trace_tolerance = settings.TRACE_TOLERANCE if trace_tolerance is None else trace_tolerance
    if min_eigenvalue < -settings.POSITIVITY_TOLERANCE:
        raise PropagationError(
            f'negative eigenvalue {min_eigenvalue:.3e} at tau={tau:.3f}',
            tau=tau, trace_drift=trace_drift, min_eigenvalue=min_eigenvalue,
        )
    if strict and abs(trace_drift) > trace_tolerance:
        logger.warning('trace drift %.3e at tau=%.3f exceeds %.1e', trace_drift, tau, trace_tolerance)
        raise PropagationError(
            f'trace drift {trace_drift:.3e} at tau={tau:.3f} exceeds {trace_tolerance:g}',
            tau=tau, trace_drift=trace_drift, min_eigenvalue=min_eigenvalue,
        )


def _diagnose(state, reference_trace, tau, trace_tolerance, check):
    rho = DensityMatrix.from_array(state, reference_trace=reference_trace)
    if check:
        check_diagnostics(rho.trace_drift, rho.min_eigenvalue, tau, trace_tolerance)
    return rho


def propagate(ops, rho0, drive=DRIVE_OFF, tau_final=None, n_outputs=2, checkpoints=None,
              kind=None, step=None, verify_step=None, trace_tolerance=None, check=True):
    """
    Evolve ``rho0`` with the generator matching ``ops`` (conservative for an
    infinite sigma, entropic otherwise) and record diagnostics at
    ``n_outputs`` evenly spaced checkpoints, or at explicit ``checkpoints``.
    """
    if not isinstance(rho0, DensityMatrix):
        rho0 = DensityMatrix.from_array(rho0)
    rho0.validate(trace_tolerance)
    if checkpoints is None:
        if tau_final is None or not tau_final > 0:
            raise ValueError(f'tau_final must be positive, got {tau_final!r}')
        if n_outputs < 2:
            raise ValueError('need at least two outputs (start and end)')
        checkpoints = np.linspace(0.0, tau_final, n_outputs)
    trace_tolerance = settings.TRACE_TOLERANCE if trace_tolerance is None else trace_tolerance

    checkpoints = np.asarray(checkpoints, dtype=float)
    states, used_step = converged_states(ops, rho0, drive, checkpoints, kind=kind, step=step, verify_step=verify_step)
    reference = rho0.trace
    diagnosed = [
        _diagnose(state, reference, tau, trace_tolerance, check) for tau, state in zip(checkpoints, states)
    ]
    hamiltonian = ops.hamiltonian
    return Trajectory(
        times=checkpoints,
        states=diagnosed,
        populations=np.array([rho.populations for rho in diagnosed]),
        purity=np.array([purity(rho) for rho in diagnosed]),
        energy=np.array([float(np.real(np.trace(hamiltonian @ rho.data))) for rho in diagnosed]),
        trace_drift=np.array([rho.trace_drift for rho in diagnosed]),
        step=used_step,
    )


def energy_rate_check(ctx, ops, rho0, tau_window, n_samples=11, verify_step=None):
    """
    Slope of <H> (H = p^2/2m + m g x) under drive-off entropic evolution,
    against the analytic rate g hbar / (2 x0 sigma). Both in watts.
    """
    if ops.conservative:
        raise ValueError('energy rate is identically zero in the conservative model')
    if not tau_window > 0:
        raise ValueError(f'tau_window must be positive, got {tau_window!r}')
    trajectory = propagate(
        ops, rho0, DRIVE_OFF, checkpoints=np.linspace(0.0, tau_window, n_samples),
        kind='entropic', verify_step=verify_step, check=False,
    )
    slope, _ = np.polyfit(trajectory.times, trajectory.energy, 1)
    numeric = float(slope) * ctx.energy_scale / ctx.time_scale
    analytic = entropic_power(ctx, ops.sigma)
    logger.info('energy rate: numeric %.4e W, analytic %.4e W', numeric, analytic)
    return numeric, analytic

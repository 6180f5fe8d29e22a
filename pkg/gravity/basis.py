"""
The truncated quantum-bouncer eigenbasis and the unitless operator matrices
of the mirror-frame master equations.

Eigenstate j is Ai(xi + a_{j+1}) / N_j with xi = x / x0, and every matrix
below is an overlap integral of two such states divided by N_j N_k.
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from django.conf import settings

from .constants import HBAR
from .special_functions import (
    OverlapWeight,
    QuadratureScheme,
    airy_ai_prime,
    airy_zeros,
    overlap_matrix,
)

logger = logging.getLogger(__name__)

CONSERVATIVE = math.inf
TAIL_MARGIN = 15.0  # Ai(15) ~ 1e-18


def is_conservative(sigma):
    return math.isinf(sigma)


def check_sigma(sigma):
    sigma = float(sigma)
    if math.isnan(sigma) or sigma <= 0 or sigma == -math.inf:
        raise ValueError(f'sigma must be positive or infinite, got {sigma!r}')
    return sigma


@dataclass(frozen=True, eq=False)
class BasisContext:
    mass: float
    gravity_accel: float
    hbar: float
    x0: float
    energy_scale: float
    time_scale: float
    n_states: int
    zeros: object
    norms: tuple
    scheme: QuadratureScheme

    @property
    def eigenvalues(self):
        """Unitless energies -a_{j+1}."""
        return -self.zeros.as_array()

    @property
    def energies(self):
        """Energies E_j in joules."""
        return self.energy_scale * self.eigenvalues

    @property
    def drive_prefactor(self):
        """(4 m / (hbar g))^(1/3) in s/m; turns a strength a*omega into a unitless drive."""
        return (4.0 * self.mass / (self.hbar * self.gravity_accel)) ** (1.0 / 3.0)

    def transition_frequency(self, j, k):
        """(E_k - E_j) / hbar in rad/s."""
        energies = self.energies
        return (energies[k] - energies[j]) / self.hbar

    def signature(self):
        """Tuple identifying everything a propagation depends on."""
        return (
            repr(self.mass), repr(self.gravity_accel), repr(self.hbar), self.n_states,
            repr(self.scheme.xi_max), self.scheme.panel_count, self.scheme.nodes_per_panel,
        )

    def __eq__(self, other):
        return isinstance(other, BasisContext) and self.signature() == other.signature()

    def __hash__(self):
        return hash(self.signature())


def _scheme_for(zeros, scheme):
    if scheme is not None:
        return scheme
    xi_max = max(settings.XI_MAX, abs(zeros[-1]) + TAIL_MARGIN)
    panel_width = settings.XI_MAX / settings.QUADRATURE_PANELS
    return QuadratureScheme.build(xi_max=xi_max, panel_count=int(math.ceil(xi_max / panel_width)))


def build_context(mass, gravity_accel=None, n_states=None, scheme=None, zeros=None):
    """
    Scales and eigenbasis data for a particle of ``mass`` kg in gravity
    ``gravity_accel`` m/s^2, truncated to ``n_states`` levels.
    """
    gravity_accel = float(settings.GRAVITY_ACCEL if gravity_accel is None else gravity_accel)
    n_states = int(settings.N_STATES if n_states is None else n_states)
    mass = float(mass)
    if not mass > 0:
        raise ValueError(f'mass must be positive, got {mass!r}')
    if not gravity_accel > 0:
        raise ValueError(f'gravity_accel must be positive, got {gravity_accel!r}')
    if not 1 <= n_states <= settings.MAX_STATES:
        raise ValueError(f'n_states must lie in [1, {settings.MAX_STATES}], got {n_states}')

    x0 = (HBAR ** 2 / (2.0 * mass ** 2 * gravity_accel)) ** (1.0 / 3.0)
    energy_scale = mass * gravity_accel * x0
    time_scale = HBAR / energy_scale

    if zeros is None or zeros.count != n_states:
        zeros = airy_zeros(n_states)
    scheme = _scheme_for(zeros, scheme)
    norm_sq = np.diag(overlap_matrix(OverlapWeight.ONE, zeros, scheme))
    norms = tuple(float(v) for v in np.sqrt(norm_sq))

    logger.debug('basis m=%.6e kg g=%.4f n=%d x0=%.6e m', mass, gravity_accel, n_states, x0)
    return BasisContext(
        mass=mass,
        gravity_accel=gravity_accel,
        hbar=HBAR,
        x0=x0,
        energy_scale=energy_scale,
        time_scale=time_scale,
        n_states=n_states,
        zeros=zeros,
        norms=norms,
        scheme=scheme,
    )


@dataclass(frozen=True, eq=False)
class OperatorSet:
    context: BasisContext
    sigma: float
    h: np.ndarray
    xi: np.ndarray
    drive_integral: np.ndarray
    dissipator_d: np.ndarray
    dissipator_shift: np.ndarray   # D - I, computed without cancellation
    momentum: np.ndarray
    boundary_curvature: np.ndarray

    @property
    def conservative(self):
        return is_conservative(self.sigma)

    @property
    def n_states(self):
        return self.h.shape[0]

    @property
    def hamiltonian(self):
        """h + xi, diagonal with entries -a_{j+1}."""
        return self.h + self.xi

    def drive_matrix(self, coefficient):
        """Hermitian w = i c drive_integral for a drive coefficient c."""
        return 1j * coefficient * self.drive_integral

    def with_sigma(self, sigma):
        """Same basis matrices with the dissipator rebuilt for ``sigma``."""
        sigma = check_sigma(sigma)
        d, shift = _dissipator(self.context, sigma)
        return replace(self, sigma=sigma, dissipator_d=d, dissipator_shift=shift)


def _normalizer(ctx):
    norms = np.asarray(ctx.norms)
    return np.outer(norms, norms)


def _dissipator(ctx, sigma):
    """(D, D - I) with D_jk the overlap of exp(-i xi / sigma)."""
    if is_conservative(sigma):
        return np.eye(ctx.n_states, dtype=complex), np.zeros((ctx.n_states, ctx.n_states), dtype=complex)
    shift = overlap_matrix(OverlapWeight.EXP_PHASE_SHIFT, ctx.zeros, ctx.scheme, sigma=sigma) / _normalizer(ctx)
    return np.eye(ctx.n_states) + shift, shift


def build_operators(ctx, sigma=CONSERVATIVE):
    """All unitless matrices of the mirror-frame equations at coupling ``sigma``."""
    sigma = check_sigma(sigma)
    denom = _normalizer(ctx)
    a = ctx.zeros.as_array()

    xi = overlap_matrix(OverlapWeight.XI, ctx.zeros, ctx.scheme) / denom
    xi = 0.5 * (xi + xi.T)
    h = np.diag(-a) - xi
    drive_integral = overlap_matrix(OverlapWeight.AI_DERIVATIVE, ctx.zeros, ctx.scheme) / denom
    slopes = np.array([airy_ai_prime(v) for v in a])
    boundary_curvature = np.outer(slopes, slopes) / denom
    d, shift = _dissipator(ctx, sigma)

    return OperatorSet(
        context=ctx,
        sigma=sigma,
        h=h,
        xi=xi,
        drive_integral=drive_integral,
        dissipator_d=d,
        dissipator_shift=shift,
        momentum=-1j * drive_integral,
        boundary_curvature=boundary_curvature,
    )


def drive_coefficient(ctx, strength, omega, tau):
    """
    Unitless drive amplitude (4 m / (hbar g))^(1/3) * strength * cos(omega t)
    at unitless time ``tau``; ``strength`` is a*omega in m/s, ``omega`` in rad/s.
    """
    if strength < 0:
        raise ValueError(f'drive strength must be non-negative, got {strength!r}')
    if not omega > 0:
        raise ValueError(f'drive frequency must be positive, got {omega!r}')
    return ctx.drive_prefactor * strength * math.cos(omega * tau * ctx.time_scale)


def mass_scaled_context(ctx, kappa):
    """Context for mass kappa*m and the time ratio kappa^(-1/3) between the two."""
    kappa = float(kappa)
    if not kappa > 0:
        raise ValueError(f'kappa must be positive, got {kappa!r}')
    scaled = build_context(
        ctx.mass * kappa, ctx.gravity_accel, ctx.n_states, scheme=ctx.scheme, zeros=ctx.zeros,
    )
    return scaled, kappa ** (-1.0 / 3.0)

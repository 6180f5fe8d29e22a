"""
Closed-form predictions of the entropic model and the Diosi-Penrose
comparison.
"""
import math
from dataclasses import asdict, dataclass, field

from django.conf import settings

from .constants import GRAVITATIONAL_CONSTANT, HBAR, NEUTRON_LIFETIME


def _positive(name, value):
    value = float(value)
    if not value > 0:
        raise ValueError(f'{name} must be positive, got {value!r}')
    return value


def entropic_power(ctx, sigma):
    """d<H>/dt = g hbar / (2 x0 sigma) in watts; zero in the conservative limit."""
    sigma = _positive('sigma', sigma)
    if math.isinf(sigma):
        return 0.0
    return ctx.gravity_accel * ctx.hbar / (2.0 * ctx.x0 * sigma)


def dp_power(mass, r0=None, backreaction=False, hbar=None):
    """
    Diosi-Penrose heating rate m G hbar / (4 sqrt(pi) R0^3); the
    semiclassical backreaction doubles it.
    """
    mass = _positive('mass', mass)
    r0 = _positive('r0', settings.NUCLEON_RADIUS if r0 is None else r0)
    hbar = HBAR if hbar is None else hbar
    power = mass * GRAVITATIONAL_CONSTANT * hbar / (4.0 * math.sqrt(math.pi) * r0 ** 3)
    return 2.0 * power if backreaction else power


def sigma_from_energy_match(ctx, target_power):
    """Coupling at which the entropic heating rate equals ``target_power``."""
    target_power = _positive('target_power', target_power)
    return ctx.gravity_accel * ctx.hbar / (2.0 * ctx.x0 * target_power)


def sigma_bound_from_storage(ctx, delta_t, delta_e):
    """Coupling at which the particle gains ``delta_e`` joules within ``delta_t`` seconds."""
    delta_t = _positive('delta_t', delta_t)
    delta_e = _positive('delta_e', delta_e)
    return ctx.gravity_accel * ctx.hbar * delta_t / (2.0 * ctx.x0 * delta_e)


def decoherence_time_scaled(t_d, kappa):
    """Time scale kappa^(-1/3) t_d for a mass kappa times heavier."""
    t_d = _positive('t_d', t_d)
    kappa = _positive('kappa', kappa)
    return t_d * kappa ** (-1.0 / 3.0)


@dataclass
class PredictionReport:
    particle: str
    mass: float
    sigma: float
    entropic_power: float
    dp_power: float
    dp_power_backreaction: float
    backreaction: bool
    dp_power_effective: float
    r0: float
    sigma_bound: float
    sigma_energy_match: float
    storage_time: float
    scaled_times: list = field(default_factory=list)

    def to_dict(self):
        data = asdict(self)
        data['scaled_times'] = [{'kappa': k, 't_scaled': t} for k, t in self.scaled_times]
        return data


def prediction_report(ctx, label, sigma, r0=None, backreaction=False,
                      delta_t=NEUTRON_LIFETIME, kappas=()):
    """
    All closed-form numbers for one particle at one coupling. The storage
    bound uses the gap E_1 - E_0 of the context's basis.
    """
    r0 = float(settings.NUCLEON_RADIUS if r0 is None else r0)
    base = dp_power(ctx.mass, r0)
    if ctx.n_states < 2:
        raise ValueError('the storage bound needs at least two basis states')
    energies = ctx.energies
    return PredictionReport(
        particle=label,
        mass=ctx.mass,
        sigma=float(sigma),
        entropic_power=entropic_power(ctx, sigma),
        dp_power=base,
        dp_power_backreaction=2.0 * base,
        backreaction=bool(backreaction),
        dp_power_effective=2.0 * base if backreaction else base,
        r0=r0,
        sigma_bound=sigma_bound_from_storage(ctx, delta_t, energies[1] - energies[0]),
        sigma_energy_match=sigma_from_energy_match(ctx, base),
        storage_time=float(delta_t),
        scaled_times=[(float(k), decoherence_time_scaled(delta_t, k)) for k in kappas],
    )

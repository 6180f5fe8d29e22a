"""
The three-region qBounce protocol.

Region I prepares an incoherent mixture of the three lowest bouncer states,
region II drives it for the flight time set by the horizontal velocity, and
region III is modelled as the transmission T = c0 P0 + c1 P1 + c2 P2 with
c0 >= c1 >= c2 >= 0. Frequencies are angular (rad/s) throughout.
"""
import csv
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from django.conf import settings
from django.core.cache import cache

from .basis import build_operators, check_sigma, is_conservative
from .dynamics import DensityMatrix, Drive, check_diagnostics, converged_states
from .exceptions import RecordFormatError
from .forms import MeasurementRecordForm

logger = logging.getLogger(__name__)

RECORD_FIELDS = ('strength_m_per_s', 'omega_rad_per_s', 'transmission', 'error')
ORDER_TOLERANCE = 1e-10


@dataclass(frozen=True)
class MeasurementRecord:
    strength: float       # a*omega, m/s
    omega: float          # rad/s
    transmission: float   # relative count rate
    error: float

    def __post_init__(self):
        if not self.error > 0:
            raise ValueError(f'measurement error must be positive, got {self.error!r}')
        if self.strength < 0:
            raise ValueError(f'drive strength must be non-negative, got {self.strength!r}')
        if not self.omega > 0:
            raise ValueError(f'drive frequency must be positive, got {self.omega!r}')

    @property
    def drive(self):
        return Drive(self.strength, self.omega)


def check_coefficients(coefficients):
    c = np.asarray(coefficients, dtype=float)
    if c.shape != (3,):
        raise ValueError(f'expected three transmission coefficients, got {c.shape}')
    if not (c[0] >= c[1] - ORDER_TOLERANCE and c[1] >= c[2] - ORDER_TOLERANCE and c[2] >= -ORDER_TOLERANCE):
        raise ValueError(f'coefficients {tuple(c)} violate c0 >= c1 >= c2 >= 0')
    return c


@dataclass
class ProtocolConfig:
    initial_populations: tuple = field(default_factory=lambda: tuple(settings.INITIAL_POPULATIONS))
    flight_length: float = field(default_factory=lambda: settings.FLIGHT_LENGTH)
    velocity_bounds: tuple = field(default_factory=lambda: tuple(settings.VELOCITY_BOUNDS))
    coefficients: tuple = None

    def __post_init__(self):
        populations = np.asarray(self.initial_populations, dtype=float)
        if populations.shape != (3,) or np.any(populations < 0) or populations.sum() > 1.0 + 1e-12:
            raise ValueError(f'initial populations {self.initial_populations} must be three non-negative values summing to at most 1')
        if not self.flight_length > 0:
            raise ValueError(f'flight length must be positive, got {self.flight_length!r}')
        lo, hi = self.velocity_bounds
        if not 0 < lo <= hi:
            raise ValueError(f'velocity bounds {self.velocity_bounds} are not an increasing positive pair')
        if self.coefficients is not None:
            self.coefficients = tuple(check_coefficients(self.coefficients))


def flight_time(ctx, velocity, length=None, bounds=None, allow_out_of_bounds=False):
    """Unitless time of flight tau_f = (length / velocity) / time_scale."""
    length = settings.FLIGHT_LENGTH if length is None else float(length)
    bounds = settings.VELOCITY_BOUNDS if bounds is None else bounds
    if not length > 0:
        raise ValueError(f'flight length must be positive, got {length!r}')
    if not velocity > 0:
        raise ValueError(f'velocity must be positive, got {velocity!r}')
    if not allow_out_of_bounds and not bounds[0] <= velocity <= bounds[1]:
        raise ValueError(f'velocity {velocity} m/s outside [{bounds[0]}, {bounds[1]}]')
    return (length / velocity) / ctx.time_scale


def initial_state(ctx, config):
    return DensityMatrix.mixture(config.initial_populations, ctx.n_states)


class PopulationCurve(NamedTuple):
    populations: np.ndarray     # (len(taus), 3)
    trace_drift: np.ndarray     # tr(rho) - tr(rho0) at each tau
    min_eigenvalue: np.ndarray


def population_cache_key(ops, drive, taus, config, verify_step):
    payload = repr((
        ops.context.signature(), repr(ops.sigma), repr(drive.strength), repr(drive.omega),
        tuple(repr(float(t)) for t in taus), tuple(repr(p) for p in config.initial_populations),
        repr(settings.MAX_STEP), repr(settings.STEP_TOLERANCE), bool(verify_step),
    ))
    return 'populations:' + hashlib.sha256(payload.encode()).hexdigest()


def compute_population_curve(ops, drive, taus, initial_populations, verify_step):
    """
    Populations P0..P2 and the state diagnostics at each unitless time in
    ``taus`` (any order) from one propagation. Nothing is checked here.
    """
    taus = np.asarray(taus, dtype=float)
    order = np.argsort(taus, kind='stable')
    rho0 = DensityMatrix.mixture(initial_populations, ops.n_states)
    states, _ = converged_states(ops, rho0, drive, np.concatenate(([0.0], taus[order])), verify_step=verify_step)
    reference = rho0.trace
    populations = np.empty((taus.size, 3))
    drift = np.empty(taus.size)
    lowest = np.empty(taus.size)
    for slot, state in zip(order, states[1:]):
        rho = DensityMatrix.from_array(state, reference_trace=reference)
        populations[slot] = rho.populations[:3]
        drift[slot] = rho.trace_drift
        lowest[slot] = rho.min_eigenvalue
    return PopulationCurve(populations, drift, lowest)


def check_curve(curve, taus, strict):
    """
    Negative eigenvalues always fail. Trace drift beyond the tolerance fails
    when ``strict`` and is logged as truncation leakage otherwise.
    """
    for tau, drift, lowest in zip(taus, curve.trace_drift, curve.min_eigenvalue):
        check_diagnostics(float(drift), float(lowest), float(tau), strict=strict)
    worst = float(np.max(np.abs(curve.trace_drift), initial=0.0))
    if worst > settings.TRACE_TOLERANCE:
        logger.warning('truncation leakage: trace drift %.3e exceeds %.1e', worst, settings.TRACE_TOLERANCE)
    return curve


def population_curve(ops, drive, taus, config=None, verify_step=None, use_cache=True, strict=False):
    """
    Cached wrapper around :func:`compute_population_curve`. Diagnostics are
    checked against the current tolerances on every call, cached or not.
    """
    config = config or ProtocolConfig()
    verify_step = settings.VERIFY_STEP if verify_step is None else verify_step
    key = population_cache_key(ops, drive, taus, config, verify_step)
    curve = cache.get(key) if use_cache else None
    if curve is not None:
        logger.debug('cache hit %s', key[:24])
    else:
        curve = compute_population_curve(ops, drive, taus, config.initial_populations, verify_step)
        if use_cache:
            cache.set(key, curve, None)
    return check_curve(curve, taus, strict)


def simulate_point(ctx, sigma, velocity, record_drive, config=None, ops=None, verify_step=None, strict=False):
    """
    Final populations (P0, P1, P2) after one region-II flight at
    ``velocity`` with the drive of a measurement record.
    """
    config = config or ProtocolConfig()
    sigma = check_sigma(sigma)
    if ops is None:
        ops = build_operators(ctx, sigma)
    elif ops.sigma != sigma and not (is_conservative(ops.sigma) and is_conservative(sigma)):
        raise ValueError(f'operator set built for sigma={ops.sigma}, asked for {sigma}')
    drive = record_drive if isinstance(record_drive, Drive) else Drive(*record_drive)
    tau_f = flight_time(ctx, velocity, config.flight_length, config.velocity_bounds)
    return population_curve(ops, drive, [tau_f], config, verify_step=verify_step, strict=strict).populations[0]


def transmission(populations, coefficients):
    """T = c0 P0 + c1 P1 + c2 P2."""
    c = check_coefficients(coefficients)
    return float(np.dot(c, np.asarray(populations, dtype=float)[:3]))


def parse_record(row, line):
    form = MeasurementRecordForm(data=row)
    if not form.is_valid():
        problems = '; '.join(f'{name}: {" ".join(errors)}' for name, errors in form.errors.items())
        raise RecordFormatError(problems, line=line)
    data = form.cleaned_data
    return MeasurementRecord(
        strength=data['strength_m_per_s'],
        omega=data['omega_rad_per_s'],
        transmission=data['transmission'],
        error=data['error'],
    )


def load_records(path):
    """
    Read measurement records from a CSV file with header
    ``strength_m_per_s,omega_rad_per_s,transmission,error``.
    """
    path = Path(path)
    records = []
    with path.open(newline='', encoding='utf-8-sig') as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            return records
        header = [name.strip() for name in header]
        if tuple(header[:len(RECORD_FIELDS)]) != RECORD_FIELDS:
            raise RecordFormatError(f'expected header {",".join(RECORD_FIELDS)}, got {",".join(header)}', line=1)
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(RECORD_FIELDS):
                raise RecordFormatError(f'expected {len(RECORD_FIELDS)} columns, got {len(row)}', line=line)
            records.append(parse_record(dict(zip(RECORD_FIELDS, (cell.strip() for cell in row))), line))
    logger.info('loaded %d records from %s', len(records), path)
    return records


def generate_synthetic_dataset(ctx, sigma_true, v_true, c_true, grid, noise_seed=0, noise_scale=0.0,
                               error=0.02, config=None, verify_step=None):
    """
    Records whose transmissions are model predictions at the generating
    parameters plus Gaussian noise of standard deviation noise_scale * error.
    """
    config = config or ProtocolConfig()
    c_true = check_coefficients(c_true)
    if not error > 0:
        raise ValueError(f'error must be positive, got {error!r}')
    if noise_scale < 0:
        raise ValueError(f'noise_scale must be non-negative, got {noise_scale!r}')
    ops = build_operators(ctx, sigma_true)
    rng = np.random.default_rng(noise_seed)
    records = []
    for strength, omega in grid:
        populations = simulate_point(ctx, sigma_true, v_true, (strength, omega), config, ops=ops, verify_step=verify_step)
        value = transmission(populations, c_true)
        if noise_scale:
            value += noise_scale * error * rng.standard_normal()
        records.append(MeasurementRecord(strength=float(strength), omega=float(omega), transmission=value, error=error))
    return records

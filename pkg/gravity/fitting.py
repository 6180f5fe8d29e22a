"""
Order-constrained chi-square fitting of transmission records over a
(sigma, velocity) grid.

The inner problem is linear in (c0, c1, c2). Writing c = M u with
u >= 0 and

    M = [[1, 1, 1],
         [0, 1, 1],
         [0, 0, 1]]

turns c0 >= c1 >= c2 >= 0 into plain non-negativity, so it is solved exactly
by Lawson-Hanson NNLS.
"""
import functools
import logging
import math
import multiprocessing
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from django.conf import settings
from scipy.optimize import nnls
from scipy.stats import chi2 as chi2_distribution

from .basis import build_operators, check_sigma, is_conservative
from .exceptions import BouncerError, FitError, PropagationError
from .experiment import ProtocolConfig, flight_time, population_curve

logger = logging.getLogger(__name__)

ORDERING = np.array([
    [1.0, 1.0, 1.0],
    [0.0, 1.0, 1.0],
    [0.0, 0.0, 1.0],
])
OPERATOR_CACHE_SIZE = 32


@dataclass
class FitResult:
    sigma: float
    velocity: float
    coefficients: tuple
    chi2: float
    n_points: int
    underdetermined: bool = False

    def as_dict(self):
        c0, c1, c2 = self.coefficients
        return {
            'sigma': self.sigma,
            'velocity': self.velocity,
            'c0': c0,
            'c1': c1,
            'c2': c2,
            'chi2': self.chi2,
            'n_points': self.n_points,
            'underdetermined': self.underdetermined,
        }


def constrained_coefficient_fit(populations, t_exp, errors):
    """
    Minimize sum((t_exp - P c)^2 / errors^2) subject to c0 >= c1 >= c2 >= 0.
    Returns (coefficients, chi2).
    """
    P = np.asarray(populations, dtype=float)
    t_exp = np.asarray(t_exp, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if P.ndim != 2 or P.shape[1] != 3:
        raise ValueError(f'population matrix must have three columns, got shape {P.shape}')
    if t_exp.shape != (P.shape[0],) or errors.shape != (P.shape[0],):
        raise ValueError('t_exp and errors must have one entry per population row')
    if P.shape[0] == 0:
        raise FitError('no records to fit')
    if np.any(errors <= 0) or not np.all(np.isfinite(errors)):
        raise ValueError('errors must be positive and finite')
    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(t_exp))):
        raise FitError('population matrix or transmissions contain non-finite values')
    if not np.any(P):
        raise FitError('population matrix is identically zero')

    weighted = P / errors[:, None]
    target = t_exp / errors
    u, residual_norm = nnls(weighted @ ORDERING, target)
    coefficients = ORDERING @ u
    # exact ordering after roundoff in the back-substitution
    coefficients[2] = max(coefficients[2], 0.0)
    coefficients[1] = max(coefficients[1], coefficients[2])
    coefficients[0] = max(coefficients[0], coefficients[1])
    chi2 = float(np.sum((target - weighted @ coefficients) ** 2))
    logger.debug('inner fit c=%s chi2=%.6g (nnls residual %.6g)', coefficients, chi2, residual_norm ** 2)
    return tuple(float(c) for c in coefficients), chi2


def is_underdetermined(populations):
    P = np.asarray(populations, dtype=float)
    return P.shape[0] < 3 or np.linalg.matrix_rank(P) < 3


def population_matrix(ctx, sigma, velocity, records, config=None, ops=None, verify_step=None, strict=False):
    """
    Rows (P0, P1, P2) after one flight at ``velocity`` for each record's
    drive. A failed propagation is re-raised naming the record.
    """
    config = config or ProtocolConfig()
    sigma = check_sigma(sigma)
    ops = ops or build_operators(ctx, sigma)
    tau_f = flight_time(ctx, velocity, config.flight_length, config.velocity_bounds)
    rows = np.empty((len(records), 3))
    for index, record in enumerate(records):
        try:
            curve = population_curve(ops, record.drive, [tau_f], config, verify_step=verify_step, strict=strict)
            rows[index] = curve.populations[0]
        except PropagationError as exc:
            raise PropagationError(
                f'record {index} (strength={record.strength:g} m/s, omega={record.omega:g} rad/s): {exc}',
                tau=exc.tau, trace_drift=exc.trace_drift, min_eigenvalue=exc.min_eigenvalue,
            ) from exc
    return rows


@functools.lru_cache(maxsize=OPERATOR_CACHE_SIZE)
def _operators_for(ctx, sigma):
    return build_operators(ctx, sigma)


def _drive_curve(task):
    sigma_index, drive_index, ctx, sigma, drive, taus, config, verify_step = task
    try:
        ops = _operators_for(ctx, sigma)
        curve = population_curve(ops, drive, taus, config, verify_step=verify_step)
    except BouncerError as exc:
        return sigma_index, drive_index, None, str(exc)
    return sigma_index, drive_index, curve, None


def _pool(workers):
    try:
        context = multiprocessing.get_context('fork')
    except ValueError:
        logger.warning('fork start method unavailable; running serially')
        return None
    return context.Pool(workers)


def propagate_grid(ctx, drives, sigma_grid, taus, config=None, workers=1, verify_step=None):
    """
    Populations for every (sigma, drive) pair at every unitless time in
    ``taus``: one propagation per pair, spread over ``workers`` processes.
    Returns (tables of shape (sigmas, drives, times, 3), trace drift of shape
    (sigmas, drives, times), failures); failed pairs are left as NaN.
    """
    config = config or ProtocolConfig()
    taus = np.asarray(taus, dtype=float)
    tasks = [
        (i, d, ctx, float(sigma), drive, taus, config, verify_step)
        for i, sigma in enumerate(sigma_grid)
        for d, drive in enumerate(drives)
    ]
    tables = np.full((len(sigma_grid), len(drives), taus.size, 3), np.nan)
    drift = np.full((len(sigma_grid), len(drives), taus.size), np.nan)
    failures = []
    pool = _pool(workers) if workers > 1 and len(tasks) > 1 else None
    try:
        results = pool.imap_unordered(_drive_curve, tasks) if pool else map(_drive_curve, tasks)
        for i, d, curve, error in results:
            if curve is None:
                logger.warning('propagation sigma=%g drive=%d failed: %s', sigma_grid[i], d, error)
                failures.append({'sigma': float(sigma_grid[i]), 'record': d, 'error': error})
            else:
                tables[i, d] = curve.populations
                drift[i, d] = curve.trace_drift
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return tables, drift, failures


@dataclass(eq=False)
class ScanSurface:
    sigma_grid: np.ndarray
    velocity_grid: np.ndarray
    chi2: np.ndarray               # (sigma, velocity); NaN marks a failed node
    coefficients: np.ndarray       # (sigma, velocity, 3)
    trace_drift: np.ndarray        # (sigma, velocity); largest |tr(rho) - tr(rho0)| over records
    n_points: int
    level: float
    confidence_threshold: float
    underdetermined: bool = False
    failures: list = field(default_factory=list)

    @property
    def valid(self):
        return np.isfinite(self.chi2)

    @property
    def max_trace_drift(self):
        if not np.any(np.isfinite(self.trace_drift)):
            return None
        return float(np.nanmax(self.trace_drift))

    @property
    def chi2_min(self):
        if not np.any(self.valid):
            raise FitError('every scan node failed')
        return float(np.nanmin(self.chi2))

    def profile(self):
        """chi2(sigma) minimized over velocity; NaN where a whole row failed."""
        profile = np.full(self.sigma_grid.size, np.nan)
        for i, row in enumerate(self.chi2):
            if np.any(np.isfinite(row)):
                profile[i] = np.nanmin(row)
        return profile

    def result(self, i, j):
        return FitResult(
            sigma=float(self.sigma_grid[i]),
            velocity=float(self.velocity_grid[j]),
            coefficients=tuple(float(c) for c in self.coefficients[i, j]),
            chi2=float(self.chi2[i, j]),
            n_points=self.n_points,
            underdetermined=self.underdetermined,
        )

    def best(self):
        chi2 = np.where(self.valid, self.chi2, np.inf)
        if not np.any(self.valid):
            raise FitError('every scan node failed')
        i, j = np.unravel_index(int(np.argmin(chi2)), chi2.shape)
        return self.result(i, j)

    def rows(self):
        """Flat (sigma, velocity, c0, c1, c2, chi2, trace_drift) rows, sigma-major."""
        for i, sigma in enumerate(self.sigma_grid):
            for j, velocity in enumerate(self.velocity_grid):
                c0, c1, c2 = self.coefficients[i, j]
                yield (
                    float(sigma), float(velocity), float(c0), float(c1), float(c2),
                    float(self.chi2[i, j]), float(self.trace_drift[i, j]),
                )


def delta_chi2(level):
    """Profile-likelihood threshold for one parameter; 2.706 at 90%."""
    if not 0 < level < 1:
        raise ValueError(f'confidence level must lie in (0, 1), got {level!r}')
    return float(chi2_distribution.ppf(level, 1))


def _check_grid(name, values):
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError(f'{name} grid must be a non-empty sequence')
    return values


def scan(ctx, records, sigma_grid, velocity_grid, config=None, workers=None, level=None, verify_step=None):
    """
    chi2 surface over every (sigma, velocity) node.

    Each (sigma, record) pair is propagated once to the longest flight time
    with checkpoints at every velocity's flight time, so the cost is
    independent of the velocity grid size. Failed propagations mark their
    sigma row invalid and are listed in ``failures``.
    """
    config = config or ProtocolConfig()
    level = settings.CONFIDENCE_LEVEL if level is None else level
    workers = settings.WORKERS if workers is None else int(workers)
    if not records:
        raise FitError('no records to fit')
    if workers < 1:
        raise ValueError(f'workers must be at least 1, got {workers}')
    sigma_grid = np.array([check_sigma(s) for s in _check_grid('sigma', sigma_grid)])
    velocity_grid = _check_grid('velocity', velocity_grid)
    taus = np.array([flight_time(ctx, v, config.flight_length, config.velocity_bounds) for v in velocity_grid])

    t_exp = np.array([record.transmission for record in records])
    errors = np.array([record.error for record in records])
    n_records = len(records)
    if n_records < 3:
        logger.warning('%d records for three coefficients; the fit is underdetermined', n_records)

    logger.info('scan: %d sigma x %d velocity nodes, %d propagations, %d worker(s)',
                sigma_grid.size, velocity_grid.size, sigma_grid.size * n_records, workers)
    tables, drift, failures = propagate_grid(
        ctx, [record.drive for record in records], sigma_grid, taus, config, workers, verify_step,
    )

    chi2 = np.full((sigma_grid.size, velocity_grid.size), np.nan)
    coefficients = np.full((sigma_grid.size, velocity_grid.size, 3), np.nan)
    trace_drift = np.full((sigma_grid.size, velocity_grid.size), np.nan)
    underdetermined = False
    for i in range(sigma_grid.size):
        for j in range(velocity_grid.size):
            P = tables[i, :, j, :]
            if not np.all(np.isfinite(P)):
                continue
            trace_drift[i, j] = float(np.max(np.abs(drift[i, :, j])))
            try:
                c, value = constrained_coefficient_fit(P, t_exp, errors)
            except FitError as exc:
                failures.append({'sigma': float(sigma_grid[i]), 'velocity': float(velocity_grid[j]), 'error': str(exc)})
                continue
            coefficients[i, j] = c
            chi2[i, j] = value
            underdetermined = underdetermined or is_underdetermined(P)

    failures.sort(key=lambda item: (item['sigma'], item.get('record', -1), item.get('velocity', -1.0)))
    surface = ScanSurface(
        sigma_grid=sigma_grid,
        velocity_grid=velocity_grid,
        chi2=chi2,
        coefficients=coefficients,
        trace_drift=trace_drift,
        n_points=n_records,
        level=level,
        confidence_threshold=math.nan,
        underdetermined=underdetermined,
        failures=failures,
    )
    if np.any(surface.valid):
        surface.confidence_threshold = surface.chi2_min + delta_chi2(level)
        best = surface.best()
        logger.info('best fit sigma=%g v=%.3f c=%s chi2=%.6g', best.sigma, best.velocity, best.coefficients, best.chi2)
        if surface.max_trace_drift > settings.TRACE_TOLERANCE:
            logger.warning('largest trace drift on the surface is %.3e; raise n_states to reduce truncation leakage',
                           surface.max_trace_drift)
    else:
        logger.error('scan produced no valid node (%d failures)', len(failures))
    return surface


class ConfidenceRegion(NamedTuple):
    sigma_lower_bound: float
    members: tuple
    delta: float
    level: float


def confidence_region(surface, level=None, delta=None):
    """
    Grid sigmas whose profiled chi2 lies within ``delta`` of the minimum.
    ``delta`` defaults to the one-parameter threshold at ``level``.
    """
    if surface.sigma_grid.size == 0 or surface.velocity_grid.size == 0:
        raise FitError('empty scan surface')
    level = surface.level if level is None else level
    delta = delta_chi2(level) if delta is None else float(delta)
    if delta < 0:
        raise ValueError(f'delta must be non-negative, got {delta!r}')
    threshold = surface.chi2_min + delta
    profile = surface.profile()
    members = tuple(
        float(sigma) for sigma, value in zip(surface.sigma_grid, profile)
        if np.isfinite(value) and value <= threshold
    )
    return ConfidenceRegion(min(members), tuple(sorted(members)), delta, level)


def parity_bound(surface, tolerance=None):
    """
    Smallest finite grid sigma whose profiled chi2 is within a relative
    ``tolerance`` of the conservative node; None without a conservative node.
    """
    tolerance = settings.PARITY_TOLERANCE if tolerance is None else tolerance
    profile = surface.profile()
    conservative = [value for sigma, value in zip(surface.sigma_grid, profile) if is_conservative(sigma)]
    if not conservative or not np.isfinite(conservative[0]):
        return None
    limit = conservative[0] * (1.0 + tolerance)
    candidates = [
        float(sigma) for sigma, value in zip(surface.sigma_grid, profile)
        if not is_conservative(sigma) and np.isfinite(value) and value <= limit
    ]
    return min(candidates) if candidates else None


def summary(surface, region=None, parity=None):
    """JSON-ready summary of a scan."""
    region = region or confidence_region(surface)
    best = surface.best()
    profile = surface.profile()
    c0, c1, c2 = best.coefficients
    return {
        'chi2_min': surface.chi2_min,
        'best': {'sigma': best.sigma, 'velocity': best.velocity, 'c0': c0, 'c1': c1, 'c2': c2},
        'confidence_level': region.level,
        'delta_chi2': region.delta,
        'sigma_lower_bound': region.sigma_lower_bound,
        'sigma_parity_bound': parity,
        'confidence_members': list(region.members),
        'profile': [
            {'sigma': float(sigma), 'chi2': None if not np.isfinite(value) else float(value)}
            for sigma, value in zip(surface.sigma_grid, profile)
        ],
        'max_trace_drift': surface.max_trace_drift,
        'n_points': surface.n_points,
        'underdetermined': surface.underdetermined,
        'failures': surface.failures,
    }

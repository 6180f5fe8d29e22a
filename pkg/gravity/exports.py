"""
CSV and JSON writers for command output. Floats are written with 17
significant digits and infinite sigma as ``inf`` so identical runs give
byte-identical files.
"""
import csv
import json
import logging
import math
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .constants import PICO_ELECTRON_VOLT

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        if math.isnan(value):
            return 'nan'
        return FLOAT_FORMAT % value
    return str(value)


def jsonable(value):
    """Replace non-finite floats and numpy scalars with JSON-safe values."""
    if isinstance(value, dict):
        return {key: jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        if math.isnan(value):
            return None
        return value
    return value


@contextmanager
def _open_for_writing(target):
    """Yield a text handle for a path, or ``target`` itself if it is a stream."""
    if hasattr(target, 'write'):
        yield target
        return
    path = Path(target)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='utf-8') as handle:
        yield handle


def write_csv(target, header, rows):
    """Write ``rows`` under ``header``; returns the number of data rows."""
    count = 0
    with _open_for_writing(target) as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
            count += 1
    logger.info('wrote %d rows to %s', count, target)
    return count


def write_json(target, payload):
    with _open_for_writing(target) as handle:
        json.dump(jsonable(payload), handle, indent=2, sort_keys=True, allow_nan=False)
        handle.write('\n')
    logger.info('wrote %s', target)


def spectrum_rows(ctx):
    """(n, a_{n+1}, E_n in peV, omega_n0 ... omega_n(N-1)) for every level."""
    energies = ctx.energies
    omegas = (energies[None, :] - energies[:, None]) / ctx.hbar
    for n in range(ctx.n_states):
        yield (n, float(ctx.zeros[n]), float(energies[n] / PICO_ELECTRON_VOLT), *(float(w) for w in omegas[n]))


def spectrum_header(n_states):
    return ['n', 'zero', 'energy_peV'] + [f'omega_{k}' for k in range(n_states)]


def spectrum_records(ctx):
    return [
        {'n': row[0], 'zero': row[1], 'energy_peV': row[2], 'omega': list(row[3:])}
        for row in spectrum_rows(ctx)
    ]


def trajectory_header(n_states):
    return ['tau'] + [f'P{j}' for j in range(n_states)] + ['purity', 'energy_J', 'trace_drift']


def trajectory_rows(ctx, trajectory):
    for k, tau in enumerate(trajectory.times):
        yield (
            float(tau),
            *(float(p) for p in trajectory.populations[k]),
            float(trajectory.purity[k]),
            float(trajectory.energy[k] * ctx.energy_scale),
            float(trajectory.trace_drift[k]),
        )


RECORD_HEADER = ['strength_m_per_s', 'omega_rad_per_s', 'transmission', 'error', 'P0', 'P1', 'P2', 'T_model']

SURFACE_HEADER = ['sigma', 'velocity', 'c0', 'c1', 'c2', 'chi2', 'trace_drift']

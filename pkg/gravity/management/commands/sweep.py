import math

import numpy as np

from ...dynamics import Drive
from ...exceptions import PropagationError
from ...experiment import ProtocolConfig, flight_time, transmission
from ...exports import write_csv
from ...fitting import propagate_grid
from ...forms import SweepForm
from ..base import BouncerCommand

HEADER = [
    'sigma', 'strength_m_per_s', 'omega_rad_per_s', 'P0', 'P1', 'P2',
    'T_model', 'T_conservative', 'delta_T', 'trace_drift',
]


class Command(BouncerCommand):
    help = (
        'Sweep the drive frequency at fixed strength (frequency mode) or the strength at fixed '
        'frequency (strength mode) for several sigmas plus the conservative model.'
    )
    form_class = SweepForm
    option_map = {'sigma': 'sigmas'}

    def add_command_arguments(self, parser):
        parser.add_argument('--mode', choices=['frequency', 'strength'])
        parser.add_argument('--fixed', type=float, help='a*omega in m/s (frequency mode) or omega in rad/s (strength mode)')
        parser.add_argument('--start', type=float)
        parser.add_argument('--stop', type=float)
        parser.add_argument('--points', type=int)
        parser.add_argument('--coefficients', help='c0,c1,c2 for the transmission')
        parser.add_argument('--allow-out-of-bounds', action='store_true', default=None)

    def run(self, data, form):
        ctx = form.build_context()
        config = ProtocolConfig()
        values = np.linspace(data['start'], data['stop'], data['points'])
        if data['mode'] == 'frequency':
            drives = [Drive(data['fixed'], float(omega)) for omega in values]
        else:
            drives = [Drive(float(strength), data['fixed']) for strength in values]
        sigmas = sorted(data['sigmas'])
        tau_f = flight_time(ctx, data['velocity'], allow_out_of_bounds=bool(data['allow_out_of_bounds']))

        tables, drift, failures = propagate_grid(ctx, drives, sigmas, [tau_f], config, data['threads'])
        reference = tables[sigmas.index(math.inf), :, 0, :]
        coefficients = data['coefficients']

        def rows():
            for i, sigma in enumerate(sigmas):
                for d, drive in enumerate(drives):
                    populations = tables[i, d, 0]
                    model = transmission(populations, coefficients)
                    conservative = transmission(reference[d], coefficients)
                    yield (sigma, drive.strength, drive.omega, *populations, model, conservative, model - conservative, drift[i, d, 0])

        self.emit(write_csv, data['out'], HEADER, rows())
        if failures:
            raise PropagationError(f'{len(failures)} of {len(sigmas) * len(drives)} propagations failed')

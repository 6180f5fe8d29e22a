import logging

from ...basis import build_operators
from ...dynamics import DensityMatrix, Drive, propagate
from ...experiment import ProtocolConfig, flight_time, transmission
from ...exports import trajectory_header, trajectory_rows, write_csv, write_json
from ...forms import SimulateForm
from ..base import BouncerCommand

logger = logging.getLogger(__name__)


class Command(BouncerCommand):
    help = 'Propagate the prepared mixture through one driven flight and report the final populations.'
    form_class = SimulateForm

    def add_command_arguments(self, parser):
        parser.add_argument('--strength', type=float, help='drive strength a*omega in m/s')
        parser.add_argument('--omega', type=float, help='drive frequency in rad/s')
        parser.add_argument('--coefficients', help='c0,c1,c2 for the transmission')
        parser.add_argument('--n-outputs', type=int, help='trajectory checkpoints including the start')
        parser.add_argument('--trajectory', help='CSV path for the full trajectory')
        parser.add_argument('--allow-out-of-bounds', action='store_true', default=None,
                            help='accept a velocity outside the measured window')

    def run(self, data, form):
        ctx = form.build_context()
        config = ProtocolConfig()
        ops = build_operators(ctx, data['sigma'])
        drive = Drive(data['strength'], data['omega'])
        tau_f = flight_time(ctx, data['velocity'], allow_out_of_bounds=bool(data['allow_out_of_bounds']))
        rho0 = DensityMatrix.mixture(config.initial_populations, ctx.n_states)
        trajectory = propagate(ops, rho0, drive, tau_final=tau_f, n_outputs=data['n_outputs'])
        final = trajectory.final
        populations = final.populations[:3]
        logger.info('simulate sigma=%g v=%g tau_f=%.4f P=%s', data['sigma'], data['velocity'], tau_f, populations)

        if data['trajectory']:
            write_csv(data['trajectory'], trajectory_header(ctx.n_states), trajectory_rows(ctx, trajectory))
        self.emit(write_json, data['out'], {
            'particle': data['label'],
            'mass': ctx.mass,
            'sigma': data['sigma'],
            'velocity': data['velocity'],
            'strength_m_per_s': drive.strength,
            'omega_rad_per_s': drive.omega,
            'tau_final': tau_f,
            'populations': list(populations),
            'coefficients': list(data['coefficients']),
            'transmission': transmission(populations, data['coefficients']),
            'purity': float(trajectory.purity[-1]),
            'trace_drift': float(trajectory.trace_drift[-1]),
            'step': trajectory.step,
        })

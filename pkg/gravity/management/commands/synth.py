import numpy as np

from ...experiment import RECORD_FIELDS, generate_synthetic_dataset
from ...exports import write_csv
from ...forms import SynthForm
from ..base import BouncerCommand

FREQUENCY_SWEEP = (3.0e3, 5.0e3, 10)    # rad/s at the fixed strength below
STRENGTH_SWEEP = (0.5e-3, 4.0e-3, 10)   # m/s at the fixed frequency below
FIXED_STRENGTH = 2.05e-3
FIXED_OMEGA = 4.07e3


class Command(BouncerCommand):
    help = 'Generate a synthetic measurement CSV from the model at chosen parameters, with Gaussian noise.'
    form_class = SynthForm

    def add_command_arguments(self, parser):
        parser.add_argument('--coefficients', help='generating c0,c1,c2 (default 1.46,0.50,0.50)')
        parser.add_argument('--noise-scale', type=float, help='noise standard deviation in units of --error')
        parser.add_argument('--error', type=float, help='per-record measurement error')
        parser.add_argument('--frequencies', help='comma-separated omegas for the frequency sweep')
        parser.add_argument('--strengths', help='comma-separated a*omega values for the strength sweep')

    def run(self, data, form):
        ctx = form.build_context()
        frequencies = data['frequencies']
        if frequencies is None:
            frequencies = np.linspace(*FREQUENCY_SWEEP)
        strengths = data['strengths']
        if strengths is None:
            strengths = np.linspace(*STRENGTH_SWEEP)
        grid = [(FIXED_STRENGTH, float(omega)) for omega in frequencies]
        grid += [(float(strength), FIXED_OMEGA) for strength in strengths]

        records = generate_synthetic_dataset(
            ctx, data['sigma'], data['velocity'], data['coefficients'], grid,
            noise_seed=data['seed'], noise_scale=data['noise_scale'], error=data['error'],
        )
        rows = ((r.strength, r.omega, r.transmission, r.error) for r in records)
        self.emit(write_csv, data['out'], list(RECORD_FIELDS), rows)

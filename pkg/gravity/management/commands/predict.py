from ...exports import write_json
from ...forms import PredictForm
from ...predictions import prediction_report
from ..base import BouncerCommand


class Command(BouncerCommand):
    help = 'Write the closed-form prediction report (heating rates, sigma bounds, mass scaling).'
    form_class = PredictForm

    def add_command_arguments(self, parser):
        parser.add_argument('--r0', type=float, help='Diosi-Penrose coarse-graining radius in m')
        parser.add_argument('--backreaction', action='store_true', default=None,
                            help='double the Diosi-Penrose rate for semiclassical backreaction')
        parser.add_argument('--delta-t', type=float, help='storage time in s for the sigma bound')
        parser.add_argument('--kappa', help='comma-separated mass ratios for time scaling')

    def run(self, data, form):
        ctx = form.build_context()
        report = prediction_report(
            ctx, data['label'], data['sigma'], r0=data['r0'], backreaction=data['backreaction'],
            delta_t=data['delta_t'], kappas=data['kappa'],
        )
        self.emit(write_json, data['out'], report.to_dict())
